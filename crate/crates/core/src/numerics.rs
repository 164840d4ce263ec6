//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are stored row-major. Heavy kernels (large products, Hermitian
//! eigendecomposition, singular values) are delegated to `faer`; everything
//! else is plain loops over the backing slice.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use faer::{Mat, MatRef, Side};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{dim_err, Error, Result};

pub use num_complex::Complex64 as C64;

/// Unit-norm tolerance for pure states.
pub const TOL_STATE: f64 = 1e-10;
/// Max abs entry of `M - M†` accepted as Hermitian.
pub const TOL_HERM: f64 = 1e-10;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const TOL_PSD: f64 = 1e-9;
/// Trace deviation accepted for density matrices.
pub const TOL_TRACE: f64 = 1e-9;
/// Max abs entry of `U†U - I` accepted as unitary.
pub const TOL_UNITARY: f64 = 1e-10;
/// Largest row or column count any single matrix may have.
pub const MAX_DIM: usize = 16384;

const NAIVE_MATMUL_LIMIT: usize = 48 * 48 * 48;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// A dense complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_shape(rows, cols)?;
        if data.len() != rows * cols {
            return dim_err(format!("{} entries supplied for a {rows}x{cols} matrix", data.len()));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return dim_err("ragged rows");
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = C64::new(d, 0.0);
        }
        m
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
    }

    /// Matrix unit `|i⟩⟨j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[i * n + j] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row count of a square matrix.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self.data[r * self.cols + c]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.data[c * self.cols + r].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.data[c * self.cols + r])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "axpy shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows, "matmul inner dimension mismatch");
        let (n, k, m) = (self.rows, self.cols, other.cols);
        if n * k * m <= NAIVE_MATMUL_LIMIT {
            let mut out = vec![ZERO; n * m];
            for i in 0..n {
                let orow = &mut out[i * m..(i + 1) * m];
                for l in 0..k {
                    let a = self.data[i * k + l];
                    if a == ZERO {
                        continue;
                    }
                    let brow = &other.data[l * m..(l + 1) * m];
                    for (o, b) in orow.iter_mut().zip(brow) {
                        *o += a * b;
                    }
                }
            }
            return ComplexMatrix { rows: n, cols: m, data: out };
        }
        let p = self.to_faer() * other.to_faer();
        ComplexMatrix::from_faer(p.as_ref())
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "matrix-vector dimension mismatch");
        (0..self.rows).map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `u · self · u†`
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> ComplexMatrix {
        u.matmul(self).matmul(&u.adjoint())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max abs entry of `self - self†`.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                let d = self.data[r * n + c] - self.data[c * n + r].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `(M + M†) / 2`
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let n = self.rows;
        ComplexMatrix::from_fn(n, n, |r, c| (self.data[r * n + c] + self.data[c * n + r].conj()) * 0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn to_faer(&self) -> Mat<C64> {
        Mat::from_fn(self.rows, self.cols, |r, c| self.data[r * self.cols + c])
    }

    pub(crate) fn from_faer(m: MatRef<'_, C64>) -> ComplexMatrix {
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    /// Nested `[[re, im], ...]` rows, the on-disk layout.
    pub fn to_nested(&self) -> Vec<Vec<[f64; 2]>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|z| [z.re, z.im]).collect()).collect()
    }

    pub fn from_nested(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect())
    }
}

fn check_shape(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return dim_err(format!("empty {rows}x{cols} matrix"));
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::ResourceCap(format!("{rows}x{cols} exceeds max_dim = {MAX_DIM}")));
    }
    Ok(())
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_nested().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        ComplexMatrix::from_nested(&rows).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product without the dimension cap check.
pub(crate) fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows, a.cols, b.rows, b.cols);
    let cols = ac * bc;
    let mut data = vec![ZERO; ar * br * cols];
    for i in 0..ar {
        for j in 0..ac {
            let x = a.data[i * ac + j];
            if x == ZERO {
                continue;
            }
            for k in 0..br {
                let row = (i * br + k) * cols + j * bc;
                for l in 0..bc {
                    data[row + l] = x * b.data[k * bc + l];
                }
            }
        }
    }
    ComplexMatrix { rows: ar * br, cols, data }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows);
    let cols = a.cols.checked_mul(b.cols);
    match (rows, cols) {
        (Some(r), Some(c)) if r <= MAX_DIM && c <= MAX_DIM => Ok(kron(a, b)),
        _ => {
            Err(Error::Dimension(format!("tensor product of {}x{} and {}x{} exceeds max_dim = {MAX_DIM}", a.rows, a.cols, b.rows, b.cols)))
        }
    }
}

pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut it = factors.into_iter();
    let first = it.next().ok_or_else(|| Error::Dimension("empty tensor product".into()))?;
    it.try_fold(first.clone(), |acc, m| tensor(&acc, m))
}

fn check_factor_dims(m: &ComplexMatrix, dims: &[usize]) -> Result<()> {
    if !m.is_square() {
        return dim_err(format!("expected a square matrix, got {}x{}", m.rows, m.cols));
    }
    if dims.contains(&0) {
        return dim_err("zero factor dimension");
    }
    let total: usize = dims.iter().product();
    if total != m.rows {
        return dim_err(format!("factor dimensions {dims:?} multiply to {total}, matrix is {}x{}", m.rows, m.cols));
    }
    Ok(())
}

/// Flat offsets of every multi-index over `factors`, row-major in the order given.
fn factor_offsets(dims: &[usize], factors: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    let mut offsets = vec![0usize];
    for &f in factors {
        let mut next = Vec::with_capacity(offsets.len() * dims[f]);
        for &o in &offsets {
            for d in 0..dims[f] {
                next.push(o + d * strides[f]);
            }
        }
        offsets = next;
    }
    offsets
}

/// Partial trace keeping the factors listed in `keep` (result ordered by factor index).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    check_factor_dims(m, dims)?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return dim_err(format!("keep set {keep:?} out of range for {} factors", dims.len()));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let ko = factor_offsets(dims, &kept);
    let to = factor_offsets(dims, &traced);
    let n = m.rows;
    let k = ko.len();
    let mut out = ComplexMatrix::zeros(k, k);
    for (a, &oa) in ko.iter().enumerate() {
        for (b, &ob) in ko.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &to {
                acc += m.data[(oa + t) * n + ob + t];
            }
            out.data[a * k + b] = acc;
        }
    }
    Ok(out)
}

/// Map from old flat index to new flat index when the tensor factors are
/// reordered so that new factor `i` is old factor `perm[i]`.
pub fn permutation_map(dims: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return dim_err(format!("{perm:?} is not a permutation of {} factors", dims.len()));
    }
    // offsets enumerate new indices in order, valued by their old flat index
    let old_of_new = factor_offsets(dims, perm);
    let mut map = vec![0usize; old_of_new.len()];
    for (new, &old) in old_of_new.iter().enumerate() {
        map[old] = new;
    }
    Ok(map)
}

/// Reorders the tensor factors of a square operator.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    check_factor_dims(m, dims)?;
    let map = permutation_map(dims, perm)?;
    let n = m.rows;
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            out.data[map[r] * n + map[c]] = m.data[r * n + c];
        }
    }
    Ok(out)
}

pub fn permute_vector(v: &[C64], dims: &[usize], perm: &[usize]) -> Result<Vec<C64>> {
    let map = permutation_map(dims, perm)?;
    if map.len() != v.len() {
        return dim_err("vector length does not match factor dimensions");
    }
    let mut out = vec![ZERO; v.len()];
    for (old, &new) in map.iter().enumerate() {
        out[new] = v[old];
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `V f(Λ) V†`
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in fv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let a = v.data[r * n + k] * w;
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * v.data[c * n + k].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of `m`, which must be Hermitian within `TOL_HERM`.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return dim_err(format!("eigendecomposition needs a square matrix, got {}x{}", m.rows, m.cols));
    }
    let res = m.hermitian_residual();
    if res > TOL_HERM {
        return Err(Error::Validation(format!("matrix is not Hermitian (residual {res:.3e})")));
    }
    eigh(m)
}

/// Hermitian eigendecomposition of the Hermitian part of `m`, no validation.
pub(crate) fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let h = m.hermitian_part().to_faer();
    let evd = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numerical(format!("eigendecomposition did not converge: {e:?}")))?;
    let n = m.rows;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| u[(r, n - 1 - c)]);
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues (descending) of the Hermitian part of `m`.
pub(crate) fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.rows == 1 {
        return Ok(vec![m.data[0].re]);
    }
    let h = m.hermitian_part().to_faer();
    let mut vals = h.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Numerical(format!("eigenvalues did not converge: {e:?}")))?;
    vals.reverse();
    Ok(vals)
}

pub(crate) fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    m.to_faer().singular_values().map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))
}

/// Largest eigenvalue and a unit eigenvector of the Hermitian part of `m`.
pub(crate) fn top_eigenpair(m: &ComplexMatrix) -> Result<(f64, Vec<C64>)> {
    let e = eigh(m)?;
    Ok((e.values[0], e.vector(0)))
}

/// Singular values, using eigenvalue magnitudes when `m` is Hermitian.
fn spectrum_magnitudes(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let scale = m.max_abs().max(1.0);
    if m.is_square() && m.hermitian_residual() <= 1e-13 * scale {
        Ok(eigvalsh(m)?.into_iter().map(f64::abs).collect())
    } else {
        singular_values(m)
    }
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return dim_err(format!("trace norm needs a square matrix, got {}x{}", m.rows, m.cols));
    }
    Ok(spectrum_magnitudes(m)?.iter().sum())
}

/// Schatten p-norm; pass `f64::INFINITY` for the operator norm.
pub fn schatten_p_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    check_p(p)?;
    let s = spectrum_magnitudes(m)?;
    Ok(p_norm_of(&s, p))
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Parameter(format!("Schatten index p = {p} must satisfy p >= 1")));
    }
    Ok(())
}

/// `(Σ |x|^p)^{1/p}` computed with max-scaling.
pub(crate) fn p_norm_of(values: &[f64], p: f64) -> f64 {
    let top = values.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return top;
    }
    if p == 1.0 {
        return values.iter().map(|x| x.abs()).sum();
    }
    top * values.iter().map(|x| (x.abs() / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        check_shape(amplitudes.len(), 1)?;
        let norm = vec_norm(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > TOL_STATE {
            return Err(Error::Validation(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales a nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Validation("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { matrix: self.projector() }
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        if self.dim() * other.dim() > MAX_DIM {
            return dim_err("tensor product of states exceeds max_dim");
        }
        let amplitudes = self.amplitudes.iter().flat_map(|a| other.amplitudes.iter().map(move |b| a * b)).collect();
        Ok(PureState { amplitudes })
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            amplitudes: Vec<[f64; 2]>,
        }
        let raw = Raw::deserialize(d)?;
        PureState::new(raw.amplitudes.into_iter().map(|[re, im]| C64::new(re, im)).collect()).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// A positive semidefinite, unit-trace, Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return dim_err(format!("density matrix must be square, got {}x{}", matrix.rows, matrix.cols));
        }
        let herm = matrix.hermitian_residual();
        if herm > TOL_HERM {
            return Err(Error::Validation(format!("density matrix not Hermitian (residual {herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL_TRACE || tr.im.abs() > TOL_TRACE {
            return Err(Error::Validation(format!("density matrix trace {tr} differs from 1")));
        }
        let min_eig = *eigvalsh(&matrix)?.last().unwrap();
        if min_eig < -TOL_PSD {
            return Err(Error::Validation(format!("density matrix has eigenvalue {min_eig:.3e} < 0")));
        }
        Ok(Self { matrix })
    }

    /// Skips validation; callers guarantee the invariants up to roundoff.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn pure(state: &PureState) -> Self {
        state.density()
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        Self { matrix: ComplexMatrix::unit(dim, index, index) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// Eigenvalues in descending order, roundoff negatives clipped to 0.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(clip_spectrum(eigvalsh(&self.matrix)?))
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix { matrix: tensor(&self.matrix, &other.matrix)? })
    }

    /// Convex combination `w·self + (1-w)·other`.
    pub fn mix(&self, w: f64, other: &DensityMatrix) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Parameter(format!("mixing weight {w} outside [0, 1]")));
        }
        if self.dim() != other.dim() {
            return dim_err("mixing states of different dimension");
        }
        let mut m = self.matrix.scale_real(w);
        m.axpy(C64::new(1.0 - w, 0.0), &other.matrix);
        Ok(DensityMatrix { matrix: m })
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let matrix = ComplexMatrix::deserialize(d)?;
        DensityMatrix::new(matrix).map_err(serde::de::Error::custom)
    }
}

/// Clips eigenvalues with magnitude within `TOL_PSD` below zero up to 0.
pub(crate) fn clip_spectrum(mut values: Vec<f64>) -> Vec<f64> {
    for v in &mut values {
        if *v < 0.0 && *v >= -TOL_PSD {
            *v = 0.0;
        }
    }
    values
}

/// A square matrix with `U†U = I` within `TOL_UNITARY`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let res = unitarity_residual(&matrix);
        if res > TOL_UNITARY {
            return Err(Error::Validation(format!("matrix is not unitary (residual {res:.3e})")));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: ComplexMatrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        Self { matrix: self.matrix.adjoint() }
    }

    /// `self · other`
    pub fn compose(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        Self { matrix: self.matrix.matmul(&other.matrix) }
    }

    pub fn tensor(&self, other: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        Ok(Self { matrix: tensor(&self.matrix, &other.matrix)? })
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let matrix = ComplexMatrix::deserialize(d)?;
        UnitaryMatrix::new(matrix).map_err(serde::de::Error::custom)
    }
}

/// Max abs entry of `U†U - I`; infinite for non-square input.
pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    m.adjoint().matmul(m).max_abs_diff(&ComplexMatrix::identity(m.rows))
}
