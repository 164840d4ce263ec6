//! Channel representations, conversions, application and validation.

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::numerics::{eigh, eigvalsh, kron, partial_trace, ComplexMatrix, DensityMatrix, UnitaryMatrix, C64, TOL_PSD, TOL_UNITARY, ZERO};

/// Tolerance on `Σ K†K = I` and on `tr_out J = I`.
pub const TOL_TP: f64 = 1e-9;
/// Tolerance on random-unitary probability normalization.
pub const TOL_PROBS: f64 = 1e-10;

/// A linear map between operator spaces.
///
/// `map` and `adjoint_map` accept arbitrary (not necessarily Hermitian)
/// operators so the same trait serves channel differences and adjoints.
pub trait ChannelMap: Send + Sync {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;
    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix;
    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix;

    /// `(Φ ⊗ 1_F)(X)` for `X` on `in ⊗ F`.
    fn map_with_reference(&self, x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        blockwise(x, self.dim_in(), self.dim_out(), dim_f, |b| self.map(b))
    }

    /// `(Φ* ⊗ 1_F)(Y)` for `Y` on `out ⊗ F`.
    fn adjoint_with_reference(&self, y: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        blockwise(y, self.dim_out(), self.dim_in(), dim_f, |b| self.adjoint_map(b))
    }

    /// Natural (vectorized) representation, `vec(Φ(X)) = S vec(X)` with row-major `vec`.
    fn superoperator(&self) -> Superoperator {
        let (di, d_o) = (self.dim_in(), self.dim_out());
        let mut s = ComplexMatrix::zeros(d_o * d_o, di * di);
        for i in 0..di {
            for j in 0..di {
                let out = self.map(&ComplexMatrix::unit(di, i, j));
                for (r, z) in out.as_slice().iter().enumerate() {
                    s[(r, i * di + j)] = *z;
                }
            }
        }
        Superoperator { dim_in: di, dim_out: d_o, matrix: s }
    }
}

fn blockwise(x: &ComplexMatrix, d_in: usize, d_out: usize, dim_f: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    assert_eq!(x.rows(), d_in * dim_f, "operator does not live on in ⊗ F");
    let mut out = ComplexMatrix::zeros(d_out * dim_f, d_out * dim_f);
    for a in 0..dim_f {
        for b in 0..dim_f {
            let block = ComplexMatrix::from_fn(d_in, d_in, |r, c| x[(r * dim_f + a, c * dim_f + b)]);
            let img = f(&block);
            for r in 0..d_out {
                for c in 0..d_out {
                    out[(r * dim_f + a, c * dim_f + b)] = img[(r, c)];
                }
            }
        }
    }
    out
}

/// `vec(Φ(X)) = S vec(X)`, `S` of shape `dim_out² x dim_in²`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.rows() != dim_out * dim_out || matrix.cols() != dim_in * dim_in {
            return dim_err(format!(
                "superoperator of shape {}x{} does not match dims {dim_in} -> {dim_out}",
                matrix.rows(),
                matrix.cols()
            ));
        }
        Ok(Self { dim_in, dim_out, matrix })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `self ∘ first`
    pub fn compose(&self, first: &Superoperator) -> Result<Superoperator> {
        if first.dim_out != self.dim_in {
            return dim_err(format!("cannot compose: inner dimensions {} and {} differ", first.dim_out, self.dim_in));
        }
        Ok(Superoperator { dim_in: first.dim_in, dim_out: self.dim_out, matrix: self.matrix.matmul(&first.matrix) })
    }

    /// `self - other`, a Hermiticity-preserving map when both are channels.
    pub fn difference(&self, other: &Superoperator) -> Result<Superoperator> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return dim_err("difference of maps with different dimensions");
        }
        Ok(Superoperator { dim_in: self.dim_in, dim_out: self.dim_out, matrix: &self.matrix - &other.matrix })
    }

    /// Superoperator of `self ⊗ other`.
    pub fn tensor(&self, other: &Superoperator) -> Result<Superoperator> {
        let (i1, o1, i2, o2) = (self.dim_in, self.dim_out, other.dim_in, other.dim_out);
        let (din, dout) = (i1 * i2, o1 * o2);
        if dout * dout > crate::numerics::MAX_DIM || din * din > crate::numerics::MAX_DIM {
            return dim_err(format!("superoperator of a {din} -> {dout} product channel exceeds max_dim"));
        }
        let mut m = ComplexMatrix::zeros(dout * dout, din * din);
        for r1 in 0..o1 * o1 {
            let (a, a2) = (r1 / o1, r1 % o1);
            for c1 in 0..i1 * i1 {
                let x = self.matrix[(r1, c1)];
                if x == ZERO {
                    continue;
                }
                let (b, b2) = (c1 / i1, c1 % i1);
                for r2 in 0..o2 * o2 {
                    let (p, p2) = (r2 / o2, r2 % o2);
                    let row = (a * o2 + p) * dout + a2 * o2 + p2;
                    for c2 in 0..i2 * i2 {
                        let (q, q2) = (c2 / i2, c2 % i2);
                        let col = (b * i2 + q) * din + b2 * i2 + q2;
                        m[(row, col)] = x * other.matrix[(r2, c2)];
                    }
                }
            }
        }
        Ok(Superoperator { dim_in: din, dim_out: dout, matrix: m })
    }

    /// Choi matrix `Σ |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
    pub fn choi(&self) -> ComplexMatrix {
        let (di, d_o) = (self.dim_in, self.dim_out);
        ComplexMatrix::from_fn(di * d_o, di * d_o, |r, c| {
            let (i, o) = (r / d_o, r % d_o);
            let (j, o2) = (c / d_o, c % d_o);
            self.matrix[(o * d_o + o2, i * di + j)]
        })
    }

    fn apply_to_stack(&self, m: &ComplexMatrix, d_a: usize, d_b: usize, dim_f: usize, adjoint: bool) -> ComplexMatrix {
        // rows (a, a'), cols (f, f')
        let stacked = ComplexMatrix::from_fn(d_a * d_a, dim_f * dim_f, |r, c| {
            let (a, a2) = (r / d_a, r % d_a);
            let (f, f2) = (c / dim_f, c % dim_f);
            m[(a * dim_f + f, a2 * dim_f + f2)]
        });
        let img = if adjoint { self.matrix.adjoint().matmul(&stacked) } else { self.matrix.matmul(&stacked) };
        ComplexMatrix::from_fn(d_b * dim_f, d_b * dim_f, |r, c| {
            let (b, f) = (r / dim_f, r % dim_f);
            let (b2, f2) = (c / dim_f, c % dim_f);
            img[(b * d_b + b2, f * dim_f + f2)]
        })
    }
}

impl ChannelMap for Superoperator {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = self.matrix.mul_vec(x.as_slice());
        ComplexMatrix::new(self.dim_out, self.dim_out, v).expect("finite image")
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let d = self.dim_in;
        let v = self.matrix.adjoint().mul_vec(y.as_slice());
        ComplexMatrix::new(d, d, v).expect("finite image")
    }

    fn map_with_reference(&self, x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        self.apply_to_stack(x, self.dim_in, self.dim_out, dim_f, false)
    }

    fn adjoint_with_reference(&self, y: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        self.apply_to_stack(y, self.dim_out, self.dim_in, dim_f, true)
    }

    fn superoperator(&self) -> Superoperator {
        self.clone()
    }
}

/// `Σ K ⊗ K̄` block for one Kraus operator, accumulated into `s`.
fn add_kraus_superop(s: &mut ComplexMatrix, k: &ComplexMatrix, weight: f64) {
    let kk = kron(k, &k.conj());
    s.axpy(C64::new(weight, 0.0), &kk);
}

#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus_ops: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Checks shapes only; use [`validate_cptp`] for trace preservation.
    pub fn new(kraus_ops: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus_ops.first().ok_or_else(|| Error::Structural("kraus_ops: at least one operator required".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        if let Some(i) = kraus_ops.iter().position(|k| (k.rows(), k.cols()) != (dim_out, dim_in)) {
            return Err(Error::Structural(format!(
                "kraus_ops[{i}]: shape {}x{} differs from {dim_out}x{dim_in}",
                kraus_ops[i].rows(),
                kraus_ops[i].cols()
            )));
        }
        Ok(Self { dim_in, dim_out, kraus_ops })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim_in: dim, dim_out: dim, kraus_ops: vec![ComplexMatrix::identity(dim)] }
    }

    pub fn unitary(u: &UnitaryMatrix) -> Self {
        let d = u.dim();
        Self { dim_in: d, dim_out: d, kraus_ops: vec![u.matrix().clone()] }
    }

    pub fn kraus_ops(&self) -> &[ComplexMatrix] {
        &self.kraus_ops
    }

    /// Max abs entry of `Σ K†K − I`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus_ops {
            sum += &k.adjoint().matmul(k);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    /// Choi matrix `Σ_k v_k v_k†` with `v_k[(i, o)] = K_k[o, i]`.
    pub fn to_choi(&self) -> ChoiMatrix {
        let (di, d_o) = (self.dim_in, self.dim_out);
        let n = di * d_o;
        let mut j = ComplexMatrix::zeros(n, n);
        for k in &self.kraus_ops {
            let v: Vec<C64> = (0..n).map(|r| k[(r % d_o, r / d_o)]).collect();
            j += &ComplexMatrix::outer(&v, &v);
        }
        ChoiMatrix { dim_in: di, dim_out: d_o, j }
    }

    /// A Stinespring dilation with the smallest environment that makes the
    /// factor dimensions consistent.
    pub fn to_stinespring(&self) -> Result<StinespringDilation> {
        kraus_dilation(self, None)
    }

    /// Recognizes Kraus operators that are scaled unitaries.
    pub fn to_random_unitary(&self) -> Result<RandomUnitaryChannel> {
        if self.dim_in != self.dim_out {
            return Err(Error::Structural("a random unitary channel must have dim_in = dim_out".into()));
        }
        let d = self.dim_in;
        let mut probs = Vec::new();
        let mut unitaries = Vec::new();
        for (i, k) in self.kraus_ops.iter().enumerate() {
            let p = k.adjoint().matmul(k).trace().re / d as f64;
            if p <= 1e-15 {
                continue;
            }
            let u = UnitaryMatrix::new(k.scale_real(1.0 / p.sqrt()))
                .map_err(|_| Error::Validation(format!("kraus_ops[{i}] is not proportional to a unitary")))?;
            probs.push(p);
            unitaries.push(u);
        }
        RandomUnitaryChannel::new(probs, unitaries)
    }
}

impl ChannelMap for KrausChannel {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus_ops {
            out += &k.matmul(x).matmul(&k.adjoint());
        }
        out
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus_ops {
            out += &k.adjoint().matmul(y).matmul(k);
        }
        out
    }

    fn superoperator(&self) -> Superoperator {
        let mut s = ComplexMatrix::zeros(self.dim_out * self.dim_out, self.dim_in * self.dim_in);
        for k in &self.kraus_ops {
            add_kraus_superop(&mut s, k, 1.0);
        }
        Superoperator { dim_in: self.dim_in, dim_out: self.dim_out, matrix: s }
    }
}

/// `Φ(X) = tr_B U(|0⟩⟨0|_A ⊗ X)U†` with `U: A⊗H → K⊗B`.
#[derive(Clone, Debug, PartialEq)]
pub struct StinespringDilation {
    dim_a: usize,
    dim_h: usize,
    dim_k: usize,
    dim_b: usize,
    u: UnitaryMatrix,
}

impl StinespringDilation {
    pub fn new(dim_a: usize, dim_h: usize, dim_k: usize, dim_b: usize, u: UnitaryMatrix) -> Result<Self> {
        if [dim_a, dim_h, dim_k, dim_b].contains(&0) {
            return Err(Error::Structural("dilation factor dimensions must be positive".into()));
        }
        if dim_a * dim_h != u.dim() || dim_k * dim_b != u.dim() {
            return Err(Error::Structural(format!(
                "u: dimension {} does not equal dim_A·dim_H = {} and dim_K·dim_B = {}",
                u.dim(),
                dim_a * dim_h,
                dim_k * dim_b
            )));
        }
        Ok(Self { dim_a, dim_h, dim_k, dim_b, u })
    }

    /// Builds the dilation from input/output dims and the ancilla/environment sizes.
    pub fn from_io(dim_a: usize, dim_b: usize, u: UnitaryMatrix) -> Result<Self> {
        let d = u.dim();
        if dim_a == 0 || dim_b == 0 || !d.is_multiple_of(dim_a) || !d.is_multiple_of(dim_b) {
            return Err(Error::Structural(format!("u: dimension {d} is not divisible by dim_A = {dim_a} and dim_B = {dim_b}")));
        }
        Self::new(dim_a, d / dim_a, d / dim_b, dim_b, u)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.u
    }

    /// The isometry `V = U(|0⟩_A ⊗ I_H)`: the first `dim_H` columns of `U`.
    pub fn isometry(&self) -> ComplexMatrix {
        let u = self.u.matrix();
        ComplexMatrix::from_fn(u.rows(), self.dim_h, |r, c| u[(r, c)])
    }

    /// `K_i = (I_K ⊗ ⟨i|_B) U (|0⟩_A ⊗ I_H)`, one per environment basis state.
    pub fn to_kraus(&self) -> KrausChannel {
        let v = self.isometry();
        let ops = (0..self.dim_b).map(|i| ComplexMatrix::from_fn(self.dim_k, self.dim_h, |k, h| v[(k * self.dim_b + i, h)])).collect();
        KrausChannel { dim_in: self.dim_h, dim_out: self.dim_k, kraus_ops: ops }
    }
}

impl ChannelMap for StinespringDilation {
    fn dim_in(&self) -> usize {
        self.dim_h
    }

    fn dim_out(&self) -> usize {
        self.dim_k
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let v = self.isometry();
        let big = v.matmul(x).matmul(&v.adjoint());
        partial_trace(&big, &[self.dim_k, self.dim_b], &[0]).expect("consistent dilation dims")
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let v = self.isometry();
        let lifted = kron(y, &ComplexMatrix::identity(self.dim_b));
        v.adjoint().matmul(&lifted).matmul(&v)
    }

    fn superoperator(&self) -> Superoperator {
        self.to_kraus().superoperator()
    }
}

/// `Φ(X) = Σ p_i U_i X U_i†`
#[derive(Clone, Debug, PartialEq)]
pub struct RandomUnitaryChannel {
    dim: usize,
    probs: Vec<f64>,
    unitaries: Vec<UnitaryMatrix>,
}

impl RandomUnitaryChannel {
    pub fn new(probs: Vec<f64>, unitaries: Vec<UnitaryMatrix>) -> Result<Self> {
        if probs.is_empty() || probs.len() != unitaries.len() {
            return Err(Error::Structural(format!("probs has {} entries but unitaries has {}", probs.len(), unitaries.len())));
        }
        let dim = unitaries[0].dim();
        if let Some(i) = unitaries.iter().position(|u| u.dim() != dim) {
            return Err(Error::Structural(format!("unitaries[{i}]: dimension differs from {dim}")));
        }
        if let Some(i) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Validation(format!("probs[{i}] = {} is not a probability", probs[i])));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > TOL_PROBS {
            return Err(Error::Validation(format!("probs sum to {total}, not 1")));
        }
        Ok(Self { dim, probs, unitaries })
    }

    pub(crate) fn from_parts_unchecked(dim: usize, probs: Vec<f64>, unitaries: Vec<UnitaryMatrix>) -> Self {
        Self { dim, probs, unitaries }
    }

    /// Single-term channel `X ↦ U X U†`.
    pub fn unitary(u: UnitaryMatrix) -> Self {
        Self { dim: u.dim(), probs: vec![1.0], unitaries: vec![u] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn unitaries(&self) -> &[UnitaryMatrix] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `K_i = √p_i U_i`
    pub fn to_kraus(&self) -> KrausChannel {
        let ops = self.probs.iter().zip(&self.unitaries).map(|(p, u)| u.matrix().scale_real(p.sqrt())).collect();
        KrausChannel { dim_in: self.dim, dim_out: self.dim, kraus_ops: ops }
    }

    /// `self ∘ first`; probabilities multiply and unitaries compose.
    pub fn compose(&self, first: &RandomUnitaryChannel) -> Result<RandomUnitaryChannel> {
        if self.dim != first.dim {
            return dim_err(format!("cannot compose random unitary channels of dims {} and {}", first.dim, self.dim));
        }
        let mut probs = Vec::with_capacity(self.len() * first.len());
        let mut unitaries = Vec::with_capacity(self.len() * first.len());
        for (p2, u2) in self.probs.iter().zip(&self.unitaries) {
            for (p1, u1) in first.probs.iter().zip(&first.unitaries) {
                probs.push(p2 * p1);
                unitaries.push(u2.compose(u1));
            }
        }
        Ok(Self { dim: self.dim, probs, unitaries })
    }

    pub fn tensor(&self, other: &RandomUnitaryChannel) -> Result<RandomUnitaryChannel> {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        let mut unitaries = Vec::with_capacity(self.len() * other.len());
        for (p1, u1) in self.probs.iter().zip(&self.unitaries) {
            for (p2, u2) in other.probs.iter().zip(&other.unitaries) {
                probs.push(p1 * p2);
                unitaries.push(u1.tensor(u2)?);
            }
        }
        Ok(Self { dim: self.dim * other.dim, probs, unitaries })
    }

    /// Max abs entry of `U†U − I` over all terms.
    pub fn unitarity_residual(&self) -> f64 {
        self.unitaries.iter().map(|u| crate::numerics::unitarity_residual(u.matrix())).fold(0.0, f64::max)
    }

    pub fn probability_residual(&self) -> f64 {
        (self.probs.iter().sum::<f64>() - 1.0).abs()
    }
}

impl ChannelMap for RandomUnitaryChannel {
    fn dim_in(&self) -> usize {
        self.dim
    }

    fn dim_out(&self) -> usize {
        self.dim
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (p, u) in self.probs.iter().zip(&self.unitaries) {
            out.axpy(C64::new(*p, 0.0), &x.conjugate_by(u.matrix()));
        }
        out
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim, self.dim);
        for (p, u) in self.probs.iter().zip(&self.unitaries) {
            out.axpy(C64::new(*p, 0.0), &y.conjugate_by(&u.matrix().adjoint()));
        }
        out
    }

    fn superoperator(&self) -> Superoperator {
        let d = self.dim;
        let n = d * d;
        let mut s = ComplexMatrix::zeros(n, n);
        for (p, u) in self.probs.iter().zip(&self.unitaries) {
            match monomial_form(u.matrix()) {
                Some((perm, phase)) => {
                    // U X U† only moves X[π r, π c] to (r, c)
                    for r in 0..d {
                        let a = phase[r] * *p;
                        for c in 0..d {
                            s[(r * d + c, perm[r] * d + perm[c])] += a * phase[c].conj();
                        }
                    }
                }
                None => add_kraus_superop(&mut s, u.matrix(), *p),
            }
        }
        Superoperator { dim_in: d, dim_out: d, matrix: s }
    }
}

/// `(π, φ)` with `U[r, π r] = φ_r` when every row of `U` has exactly one nonzero.
pub(crate) fn monomial_form(u: &ComplexMatrix) -> Option<(Vec<usize>, Vec<C64>)> {
    let d = u.rows();
    let mut perm = Vec::with_capacity(d);
    let mut phase = Vec::with_capacity(d);
    for r in 0..d {
        let mut nz = u.row(r).iter().enumerate().filter(|(_, z)| **z != ZERO);
        let (c, z) = nz.next()?;
        if nz.next().is_some() {
            return None;
        }
        perm.push(c);
        phase.push(*z);
    }
    Some((perm, phase))
}

/// `J = Σ |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input factor first.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    j: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn new(dim_in: usize, dim_out: usize, j: ComplexMatrix) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 || j.rows() != dim_in * dim_out || !j.is_square() {
            return Err(Error::Structural(format!(
                "j: shape {}x{} does not match dim_in·dim_out = {}",
                j.rows(),
                j.cols(),
                dim_in * dim_out
            )));
        }
        Ok(Self { dim_in, dim_out, j })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.j
    }

    /// Kraus operators from the eigendecomposition of `J`, eigenvalue-descending,
    /// dropping eigenvalues at or below `TOL_PSD`.
    pub fn to_kraus(&self) -> Result<KrausChannel> {
        let herm = self.j.hermitian_residual();
        if herm > crate::numerics::TOL_HERM {
            return Err(Error::Validation(format!("Choi matrix not Hermitian (residual {herm:.3e})")));
        }
        let e = eigh(&self.j)?;
        let min = *e.values.last().unwrap();
        if min < -TOL_PSD {
            return Err(Error::Validation(format!("Choi matrix not PSD (eigenvalue {min:.3e})")));
        }
        let (di, d_o) = (self.dim_in, self.dim_out);
        let ops: Vec<ComplexMatrix> = e
            .values
            .iter()
            .enumerate()
            .take_while(|(_, &l)| l > TOL_PSD)
            .map(|(k, &l)| {
                let s = l.sqrt();
                ComplexMatrix::from_fn(d_o, di, |o, i| e.vectors[(i * d_o + o, k)] * s)
            })
            .collect();
        if ops.is_empty() {
            return Err(Error::Validation("Choi matrix is zero".into()));
        }
        Ok(KrausChannel { dim_in: di, dim_out: d_o, kraus_ops: ops })
    }

    fn superoperator_matrix(&self) -> ComplexMatrix {
        let (di, d_o) = (self.dim_in, self.dim_out);
        ComplexMatrix::from_fn(d_o * d_o, di * di, |r, c| {
            let (o, o2) = (r / d_o, r % d_o);
            let (i, j) = (c / di, c % di);
            self.j[(i * d_o + o, j * d_o + o2)]
        })
    }
}

impl ChannelMap for ChoiMatrix {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.dim_out
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (di, d_o) = (self.dim_in, self.dim_out);
        ComplexMatrix::from_fn(d_o, d_o, |o, o2| {
            let mut acc = ZERO;
            for i in 0..di {
                for j in 0..di {
                    acc += x[(i, j)] * self.j[(i * d_o + o, j * d_o + o2)];
                }
            }
            acc
        })
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let (di, d_o) = (self.dim_in, self.dim_out);
        ComplexMatrix::from_fn(di, di, |i, j| {
            let mut acc = ZERO;
            for o in 0..d_o {
                for o2 in 0..d_o {
                    acc += y[(o, o2)] * self.j[(j * d_o + o2, i * d_o + o)];
                }
            }
            acc
        })
    }

    fn superoperator(&self) -> Superoperator {
        Superoperator { dim_in: self.dim_in, dim_out: self.dim_out, matrix: self.superoperator_matrix() }
    }
}

/// Any of the four supported representations.
#[derive(Clone, Debug, PartialEq)]
pub enum Channel {
    Kraus(KrausChannel),
    Stinespring(StinespringDilation),
    RandomUnitary(RandomUnitaryChannel),
    Choi(ChoiMatrix),
}

impl Channel {
    pub fn kind(&self) -> &'static str {
        match self {
            Channel::Kraus(_) => "kraus",
            Channel::Stinespring(_) => "stinespring",
            Channel::RandomUnitary(_) => "random_unitary",
            Channel::Choi(_) => "choi",
        }
    }

    fn inner(&self) -> &dyn ChannelMap {
        match self {
            Channel::Kraus(c) => c,
            Channel::Stinespring(c) => c,
            Channel::RandomUnitary(c) => c,
            Channel::Choi(c) => c,
        }
    }

    pub fn to_kraus(&self) -> Result<KrausChannel> {
        match self {
            Channel::Kraus(c) => Ok(c.clone()),
            Channel::Stinespring(c) => Ok(c.to_kraus()),
            Channel::RandomUnitary(c) => Ok(c.to_kraus()),
            Channel::Choi(c) => c.to_kraus(),
        }
    }

    pub fn to_choi(&self) -> Result<ChoiMatrix> {
        match self {
            Channel::Choi(c) => Ok(c.clone()),
            other => Ok(other.to_kraus()?.to_choi()),
        }
    }

    pub fn to_stinespring(&self) -> Result<StinespringDilation> {
        match self {
            Channel::Stinespring(c) => Ok(c.clone()),
            other => other.to_kraus()?.to_stinespring(),
        }
    }

    pub fn to_random_unitary(&self) -> Result<RandomUnitaryChannel> {
        match self {
            Channel::RandomUnitary(c) => Ok(c.clone()),
            other => other.to_kraus()?.to_random_unitary(),
        }
    }

    /// Converts to the named representation.
    pub fn convert(&self, kind: &str) -> Result<Channel> {
        Ok(match kind {
            "kraus" => Channel::Kraus(self.to_kraus()?),
            "stinespring" => Channel::Stinespring(self.to_stinespring()?),
            "random_unitary" => Channel::RandomUnitary(self.to_random_unitary()?),
            "choi" => Channel::Choi(self.to_choi()?),
            other => return Err(Error::Parameter(format!("unknown channel kind '{other}'"))),
        })
    }

    /// `self ∘ first`. Two random-unitary channels stay random unitary.
    pub fn compose(&self, first: &Channel) -> Result<Channel> {
        if let (Channel::RandomUnitary(a), Channel::RandomUnitary(b)) = (self, first) {
            return Ok(Channel::RandomUnitary(a.compose(b)?));
        }
        if first.dim_out() != self.dim_in() {
            return dim_err(format!("cannot compose: first maps into dimension {}, second expects {}", first.dim_out(), self.dim_in()));
        }
        let (a, b) = (self.to_kraus()?, first.to_kraus()?);
        let mut ops = Vec::with_capacity(a.kraus_ops.len() * b.kraus_ops.len());
        for ka in &a.kraus_ops {
            for kb in &b.kraus_ops {
                ops.push(ka.matmul(kb));
            }
        }
        Ok(Channel::Kraus(KrausChannel::new(ops)?))
    }

    /// `self ⊗ other`. Two random-unitary channels stay random unitary.
    pub fn tensor(&self, other: &Channel) -> Result<Channel> {
        if let (Channel::RandomUnitary(a), Channel::RandomUnitary(b)) = (self, other) {
            return Ok(Channel::RandomUnitary(a.tensor(b)?));
        }
        let (a, b) = (self.to_kraus()?, other.to_kraus()?);
        let mut ops = Vec::with_capacity(a.kraus_ops.len() * b.kraus_ops.len());
        for ka in &a.kraus_ops {
            for kb in &b.kraus_ops {
                ops.push(crate::numerics::tensor(ka, kb)?);
            }
        }
        Ok(Channel::Kraus(KrausChannel::new(ops)?))
    }

    pub fn from_json(text: &str) -> Result<Channel> {
        let raw: ChannelJson = serde_json::from_str(text)?;
        raw.into_channel()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ChannelJson::from_channel(self)).expect("channel serializes")
    }
}

impl ChannelMap for Channel {
    fn dim_in(&self) -> usize {
        self.inner().dim_in()
    }

    fn dim_out(&self) -> usize {
        self.inner().dim_out()
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.inner().map(x)
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        self.inner().adjoint_map(y)
    }

    fn map_with_reference(&self, x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        self.inner().map_with_reference(x, dim_f)
    }

    fn adjoint_with_reference(&self, y: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        self.inner().adjoint_with_reference(y, dim_f)
    }

    fn superoperator(&self) -> Superoperator {
        self.inner().superoperator()
    }
}

impl From<KrausChannel> for Channel {
    fn from(c: KrausChannel) -> Self {
        Channel::Kraus(c)
    }
}

impl From<StinespringDilation> for Channel {
    fn from(c: StinespringDilation) -> Self {
        Channel::Stinespring(c)
    }
}

impl From<RandomUnitaryChannel> for Channel {
    fn from(c: RandomUnitaryChannel) -> Self {
        Channel::RandomUnitary(c)
    }
}

impl From<ChoiMatrix> for Channel {
    fn from(c: ChoiMatrix) -> Self {
        Channel::Choi(c)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ChannelJson {
    Kraus {
        dim_in: usize,
        dim_out: usize,
        kraus_ops: Vec<ComplexMatrix>,
    },
    Stinespring {
        dim_in: usize,
        dim_out: usize,
        #[serde(rename = "dim_A")]
        dim_a: usize,
        #[serde(rename = "dim_B")]
        dim_b: usize,
        u: ComplexMatrix,
    },
    RandomUnitary {
        dim_in: usize,
        dim_out: usize,
        probs: Vec<f64>,
        unitaries: Vec<ComplexMatrix>,
    },
    Choi {
        dim_in: usize,
        dim_out: usize,
        j: ComplexMatrix,
    },
}

fn check_declared(field: &str, declared: usize, actual: usize) -> Result<()> {
    if declared != actual {
        return Err(Error::Structural(format!("{field}: declared {declared}, operators imply {actual}")));
    }
    Ok(())
}

fn unitary_field(field: String, m: ComplexMatrix) -> Result<UnitaryMatrix> {
    UnitaryMatrix::new(m).map_err(|e| match e {
        Error::Validation(msg) => Error::Validation(format!("{field}: {msg}")),
        other => other,
    })
}

impl ChannelJson {
    fn into_channel(self) -> Result<Channel> {
        match self {
            ChannelJson::Kraus { dim_in, dim_out, kraus_ops } => {
                let c = KrausChannel::new(kraus_ops)?;
                check_declared("dim_in", dim_in, c.dim_in)?;
                check_declared("dim_out", dim_out, c.dim_out)?;
                Ok(c.into())
            }
            ChannelJson::Stinespring { dim_in, dim_out, dim_a, dim_b, u } => {
                let u = unitary_field("u".into(), u)?;
                let c = StinespringDilation::from_io(dim_a, dim_b, u)?;
                check_declared("dim_in", dim_in, c.dim_h)?;
                check_declared("dim_out", dim_out, c.dim_k)?;
                Ok(c.into())
            }
            ChannelJson::RandomUnitary { dim_in, dim_out, probs, unitaries } => {
                let us = unitaries
                    .into_iter()
                    .enumerate()
                    .map(|(i, m)| unitary_field(format!("unitaries[{i}]"), m))
                    .collect::<Result<Vec<_>>>()?;
                let c = RandomUnitaryChannel::new(probs, us)?;
                check_declared("dim_in", dim_in, c.dim)?;
                check_declared("dim_out", dim_out, c.dim)?;
                Ok(c.into())
            }
            ChannelJson::Choi { dim_in, dim_out, j } => Ok(ChoiMatrix::new(dim_in, dim_out, j)?.into()),
        }
    }

    fn from_channel(c: &Channel) -> Self {
        let (dim_in, dim_out) = (c.dim_in(), c.dim_out());
        match c {
            Channel::Kraus(k) => ChannelJson::Kraus { dim_in, dim_out, kraus_ops: k.kraus_ops.clone() },
            Channel::Stinespring(s) => {
                ChannelJson::Stinespring { dim_in, dim_out, dim_a: s.dim_a, dim_b: s.dim_b, u: s.u.matrix().clone() }
            }
            Channel::RandomUnitary(r) => ChannelJson::RandomUnitary {
                dim_in,
                dim_out,
                probs: r.probs.clone(),
                unitaries: r.unitaries.iter().map(|u| u.matrix().clone()).collect(),
            },
            Channel::Choi(j) => ChannelJson::Choi { dim_in, dim_out, j: j.j.clone() },
        }
    }
}

/// Dilates a Kraus channel `H → K` into `U: A⊗H → K⊗B`.
///
/// The isometry `V|h⟩ = Σ_i K_i|h⟩ ⊗ |i⟩_B` is completed to a unitary by
/// Gram-Schmidt over the standard basis. With `dim_a = None` the smallest
/// consistent ancilla is chosen.
pub fn kraus_dilation(c: &KrausChannel, dim_a: Option<usize>) -> Result<StinespringDilation> {
    let (dh, dk, r) = (c.dim_in, c.dim_out, c.kraus_ops.len());
    let da = match dim_a {
        Some(a) => {
            let min = minimal_kraus_ancilla(dh, dk, r);
            if a < min || (a * dh) % dk != 0 {
                return Err(Error::Parameter(format!(
                    "ancilla dimension {a} admits no dilation; minimum is {min} and dim_A·{dh} must be divisible by {dk}"
                )));
            }
            a
        }
        None => minimal_kraus_ancilla(dh, dk, r),
    };
    let db = da * dh / dk;
    let n = da * dh;
    if n > crate::numerics::MAX_DIM {
        return Err(Error::ResourceCap(format!("dilation dimension {n} exceeds max_dim")));
    }
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for h in 0..dh {
        let mut v = vec![ZERO; n];
        for (i, k) in c.kraus_ops.iter().enumerate() {
            for o in 0..dk {
                v[o * db + i] = k[(o, h)];
            }
        }
        cols.push(v);
    }
    let v_mat = ComplexMatrix::from_fn(n, dh, |r, col| cols[col][r]);
    let res = v_mat.adjoint().matmul(&v_mat).max_abs_diff(&ComplexMatrix::identity(dh));
    if res > TOL_TP {
        return Err(Error::Validation(format!("Kraus operators are not trace preserving (residual {res:.3e}); no isometric dilation")));
    }
    let u = complete_isometry(&v_mat);
    StinespringDilation::new(da, dh, dk, db, UnitaryMatrix::from_matrix_unchecked(u))
}

/// Smallest `dim_A ≥ 1` with `dim_A·dim_H = dim_K·dim_B` for some `dim_B ≥ rank`.
pub fn minimal_kraus_ancilla(dim_h: usize, dim_k: usize, rank: usize) -> usize {
    let mut db = rank.max(1);
    while !(dim_k * db).is_multiple_of(dim_h) {
        db += 1;
    }
    dim_k * db / dim_h
}

/// Extends orthonormal columns to a full unitary by orthogonalizing standard basis vectors.
pub(crate) fn complete_isometry(v: &ComplexMatrix) -> ComplexMatrix {
    let n = v.rows();
    let mut cols: Vec<Vec<C64>> = (0..v.cols()).map(|c| v.column(c)).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = vec![ZERO; n];
        w[e] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for q in &cols {
                let p: C64 = q.iter().zip(&w).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let norm = crate::numerics::vec_norm(&w);
        if norm > 1e-6 {
            cols.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    ComplexMatrix::from_fn(n, n, |r, c| cols[c][r])
}

/// Channel output for a density input.
pub fn apply(c: &dyn ChannelMap, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != c.dim_in() {
        return dim_err(format!("state of dimension {} fed to a channel on {}", rho.dim(), c.dim_in()));
    }
    Ok(DensityMatrix::from_matrix_unchecked(c.map(rho.matrix()).hermitian_part()))
}

/// `(Φ ⊗ 1_F)(ρ)` for `ρ` on `in ⊗ F`.
pub fn apply_with_reference(c: &dyn ChannelMap, rho: &DensityMatrix, dim_f: usize) -> Result<DensityMatrix> {
    if dim_f == 0 || rho.dim() != c.dim_in() * dim_f {
        return dim_err(format!("state of dimension {} does not live on {} ⊗ {dim_f}", rho.dim(), c.dim_in()));
    }
    Ok(DensityMatrix::from_matrix_unchecked(c.map_with_reference(rho.matrix(), dim_f).hermitian_part()))
}

/// Largest entrywise difference of the two actions on every matrix unit `|i⟩⟨j|`.
pub fn action_residual(a: &dyn ChannelMap, b: &dyn ChannelMap) -> Result<f64> {
    if (a.dim_in(), a.dim_out()) != (b.dim_in(), b.dim_out()) {
        return dim_err("channels have different dimensions");
    }
    let d = a.dim_in();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let e = ComplexMatrix::unit(d, i, j);
            worst = worst.max(a.map(&e).max_abs_diff(&b.map(&e)));
        }
    }
    Ok(worst)
}

pub fn channels_equal(a: &dyn ChannelMap, b: &dyn ChannelMap) -> bool {
    action_residual(a, b).map(|r| r <= 1e-9).unwrap_or(false)
}

/// One line of a [`ValidationReport`].
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: &str, residual: f64, tolerance: f64) {
        let pass = residual <= tolerance;
        self.pass &= pass;
        self.checks.push(Check { name: name.into(), residual, tolerance, pass });
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.residual)
    }
}

/// CPTP check on any linear map: Choi positivity and `tr_out J = I`.
pub fn validate_map(c: &dyn ChannelMap) -> Result<ValidationReport> {
    let (di, d_o) = (c.dim_in(), c.dim_out());
    let j = c.superoperator().choi();
    let mut report = ValidationReport { pass: true, checks: Vec::new() };
    report.push("choi_hermitian", j.hermitian_residual(), crate::numerics::TOL_HERM);
    let min_eig = *eigvalsh(&j)?.last().unwrap();
    report.push("choi_psd", (-min_eig).max(0.0), TOL_PSD);
    let tr_out = partial_trace(&j, &[di, d_o], &[0])?;
    report.push("trace_preservation", tr_out.max_abs_diff(&ComplexMatrix::identity(di)), TOL_TP);
    Ok(report)
}

/// CPTP validation plus the structural checks of the given representation.
pub fn validate_cptp(c: &Channel) -> Result<ValidationReport> {
    let mut report = validate_map(c)?;
    match c {
        Channel::Kraus(k) => {
            // report Σ K†K − I directly; it is the quantity users recognize
            let tp = k.trace_preservation_residual();
            report.checks.retain(|ch| ch.name != "trace_preservation");
            report.pass = report.checks.iter().all(|ch| ch.pass);
            report.push("trace_preservation", tp, TOL_TP);
        }
        Channel::Stinespring(s) => {
            report.push("unitarity", crate::numerics::unitarity_residual(s.u.matrix()), TOL_UNITARY);
        }
        Channel::RandomUnitary(r) => {
            report.push("unitarity", r.unitarity_residual(), TOL_UNITARY);
            report.push("probabilities", r.probability_residual(), TOL_PROBS);
        }
        Channel::Choi(_) => {}
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{tensor, PureState, ONE};
    use crate::sampling::{random_density, random_kraus, random_unitary, seeded_rng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    pub(crate) fn paulis() -> [ComplexMatrix; 4] {
        let i = ComplexMatrix::identity(2);
        let x = ComplexMatrix::from_rows(vec![vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let y = ComplexMatrix::from_rows(vec![vec![ZERO, c(0.0, -1.0)], vec![c(0.0, 1.0), ZERO]]).unwrap();
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        [i, x, y, z]
    }

    fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }

    fn swap() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }

    fn bell() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]).unwrap().density()
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::new(ComplexMatrix::from_fn(2, 2, |_, _| c(0.5, 0.0))).unwrap()
    }

    fn pauli_average() -> RandomUnitaryChannel {
        let us = paulis().map(|p| UnitaryMatrix::new(p).unwrap()).to_vec();
        RandomUnitaryChannel::new(vec![0.25; 4], us).unwrap()
    }

    fn dephasing() -> KrausChannel {
        KrausChannel::new(vec![ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)]).unwrap()
    }

    #[test]
    fn identity_kraus_validates_with_zero_residuals() {
        let r = validate_cptp(&KrausChannel::identity(2).into()).unwrap();
        assert!(r.pass);
        assert!(r.checks.iter().all(|ch| ch.residual < 1e-15));
    }

    #[test]
    fn scaled_identity_fails_trace_preservation() {
        let k = KrausChannel::new(vec![ComplexMatrix::identity(2).scale_real(0.9)]).unwrap();
        let r = validate_cptp(&k.into()).unwrap();
        assert!(!r.pass);
        assert!((r.residual("trace_preservation").unwrap() - 0.19).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_mixture_validates() {
        let mut rng = seeded_rng(11, 0);
        let us = vec![random_unitary(3, &mut rng), random_unitary(3, &mut rng)];
        let ru = RandomUnitaryChannel::new(vec![0.3, 0.7], us).unwrap();
        assert!(validate_cptp(&ru.into()).unwrap().pass);
    }

    #[test]
    fn ru_to_kraus_examples() {
        let id = RandomUnitaryChannel::unitary(UnitaryMatrix::identity(2)).to_kraus();
        assert_eq!(id.kraus_ops(), &[ComplexMatrix::identity(2)]);

        let [i, _, _, z] = paulis();
        let ru =
            RandomUnitaryChannel::new(vec![0.5, 0.5], vec![UnitaryMatrix::new(i.clone()).unwrap(), UnitaryMatrix::new(z.clone()).unwrap()])
                .unwrap();
        let k = ru.to_kraus();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(k.kraus_ops()[0].max_abs_diff(&i.scale_real(s)) < 1e-15);
        assert!(k.kraus_ops()[1].max_abs_diff(&z.scale_real(s)) < 1e-15);
        let out = apply(&k, &plus()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);

        let mut rng = seeded_rng(12, 0);
        let rho = random_density(2, &mut rng);
        let out = apply(&pauli_average().to_kraus(), &rho).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-15);
    }

    #[test]
    fn stinespring_without_ancilla_is_unitary() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexMatrix::from_rows(vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]]).unwrap();
        let d = StinespringDilation::new(1, 2, 2, 1, UnitaryMatrix::new(h.clone()).unwrap()).unwrap();
        let k = d.to_kraus();
        assert_eq!(k.kraus_ops().len(), 1);
        assert!(k.kraus_ops()[0].max_abs_diff(&h) < 1e-15);
    }

    #[test]
    fn stinespring_swap_routes_input_to_environment() {
        // input order is A⊗H and output order K⊗B, so SWAP moves the input into K
        let d = StinespringDilation::new(2, 2, 2, 2, UnitaryMatrix::new(swap()).unwrap()).unwrap();
        let mut rng = seeded_rng(13, 0);
        let rho = random_density(2, &mut rng);
        let out = apply(&d, &rho).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        // with u = I the ancilla |0⟩ is what K sees and the input is discarded into B
        let d = StinespringDilation::new(2, 2, 2, 2, UnitaryMatrix::identity(4)).unwrap();
        let out = apply(&d, &rho).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::unit(2, 0, 0)) < 1e-12);
    }

    #[test]
    fn stinespring_cnot_dephases() {
        // control on H, target on the ancilla, then SWAP so the control lands in K
        let cnot_ha = crate::numerics::permute_subsystems(&cnot(), &[2, 2], &[1, 0]).unwrap();
        let u = swap().matmul(&cnot_ha);
        let d = StinespringDilation::new(2, 2, 2, 2, UnitaryMatrix::new(u).unwrap()).unwrap();
        let out = apply(&d, &plus()).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale_real(0.5)) < 1e-12);
        assert!(action_residual(&d, &dephasing()).unwrap() < 1e-12);
        let direct = d.to_kraus();
        assert!(action_residual(&d, &direct).unwrap() < 1e-12);
    }

    #[test]
    fn choi_of_identity_and_dephasing() {
        let j = KrausChannel::identity(2).to_choi();
        let mut expected = ComplexMatrix::zeros(4, 4);
        for (a, b) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            expected[(a, b)] = ONE;
        }
        assert_eq!(j.matrix(), &expected);
        let vals = eigvalsh(j.matrix()).unwrap();
        assert!((vals[0] - 2.0).abs() < 1e-12 && vals[1].abs() < 1e-12);

        let jd = dephasing().to_choi();
        assert_eq!(jd.matrix(), &ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 1.0]));
        assert_eq!(jd.to_kraus().unwrap().kraus_ops().len(), 2);
    }

    #[test]
    fn choi_round_trip_on_random_qutrit_channel() {
        let mut rng = seeded_rng(14, 0);
        let k = KrausChannel::new(random_kraus(3, 3, 3, &mut rng)).unwrap();
        let back = k.to_choi().to_kraus().unwrap();
        assert!(action_residual(&k, &back).unwrap() < 1e-9);
        assert_eq!(back.kraus_ops().len(), 3);
        let choi = k.to_choi();
        assert!(action_residual(&k, &choi).unwrap() < 1e-12);
    }

    #[test]
    fn choi_to_kraus_rejects_negative() {
        let j = ChoiMatrix::new(1, 2, ComplexMatrix::from_real_diag(&[1.0, -0.5])).unwrap();
        assert!(matches!(j.to_kraus(), Err(Error::Validation(_))));
    }

    #[test]
    fn reference_application_examples() {
        let out = apply_with_reference(&pauli_average(), &bell(), 2).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
        let out = apply_with_reference(&dephasing(), &bell(), 2).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
        let id = KrausChannel::identity(2);
        assert_eq!(apply_with_reference(&id, &bell(), 2).unwrap(), bell());
    }

    #[test]
    fn superoperator_reference_matches_blockwise() {
        let mut rng = seeded_rng(15, 0);
        let k = KrausChannel::new(random_kraus(2, 3, 2, &mut rng)).unwrap();
        let x = crate::sampling::random_matrix(4, 4, &mut rng);
        let s = k.superoperator();
        assert!(s.map_with_reference(&x, 2).max_abs_diff(&k.map_with_reference(&x, 2)) < 1e-12);
        let y = crate::sampling::random_matrix(6, 6, &mut rng);
        assert!(s.adjoint_with_reference(&y, 2).max_abs_diff(&k.adjoint_with_reference(&y, 2)) < 1e-12);
    }

    #[test]
    fn superoperator_tensor_matches_kraus_tensor() {
        let mut rng = seeded_rng(40, 0);
        let a: Channel = KrausChannel::new(random_kraus(2, 3, 2, &mut rng)).unwrap().into();
        let b: Channel = KrausChannel::new(random_kraus(3, 2, 2, &mut rng)).unwrap().into();
        let st = a.superoperator().tensor(&b.superoperator()).unwrap();
        let kt = a.tensor(&b).unwrap();
        assert!(action_residual(&st, &kt).unwrap() < 1e-12);
    }

    #[test]
    fn adjoint_is_hilbert_schmidt_dual() {
        let mut rng = seeded_rng(16, 0);
        let k = KrausChannel::new(random_kraus(3, 2, 2, &mut rng)).unwrap();
        let x = crate::sampling::random_matrix(3, 3, &mut rng);
        let y = crate::sampling::random_matrix(2, 2, &mut rng);
        let reps: [&dyn ChannelMap; 4] = [&k, &k.to_choi(), &k.superoperator(), &kraus_dilation(&k, None).unwrap()];
        for rep in reps {
            let lhs = y.adjoint().matmul(&rep.map(&x)).trace();
            let rhs = rep.adjoint_map(&y).adjoint().matmul(&x).trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn compose_and_tensor() {
        let mut rng = seeded_rng(17, 0);
        let k: Channel = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap().into();
        let id: Channel = KrausChannel::identity(2).into();
        assert!(action_residual(&id.compose(&k).unwrap(), &k).unwrap() < 1e-15);

        let dep: Channel = pauli_average().into();
        let both = dep.tensor(&dep).unwrap();
        assert!(matches!(both, Channel::RandomUnitary(_)));
        let rho = random_density(4, &mut rng);
        let out = apply(&both, &rho).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-12);

        let [i, _, _, z] = paulis();
        let rz: Channel =
            RandomUnitaryChannel::new(vec![0.5, 0.5], vec![UnitaryMatrix::new(i).unwrap(), UnitaryMatrix::new(z).unwrap()]).unwrap().into();
        let twice = rz.compose(&rz).unwrap();
        match &twice {
            Channel::RandomUnitary(r) => assert_eq!(r.len(), 4),
            _ => panic!("composition left the random unitary class"),
        }
        assert!(action_residual(&twice, &rz).unwrap() < 1e-12);

        let r1 = random_density(2, &mut rng);
        let r2 = random_density(2, &mut rng);
        let kk = k.tensor(&rz).unwrap();
        let joint = apply(&kk, &r1.tensor(&r2).unwrap()).unwrap();
        let separate = tensor(apply(&k, &r1).unwrap().matrix(), apply(&rz, &r2).unwrap().matrix()).unwrap();
        assert!(joint.matrix().max_abs_diff(&separate) < 1e-10);
    }

    #[test]
    fn dilation_round_trip() {
        let mut rng = seeded_rng(18, 0);
        for (di, d_o, r) in [(2, 2, 3), (3, 2, 2), (2, 3, 1), (4, 2, 4)] {
            let k = KrausChannel::new(random_kraus(di, d_o, r, &mut rng)).unwrap();
            let s = kraus_dilation(&k, None).unwrap();
            assert!(crate::numerics::unitarity_residual(s.unitary().matrix()) < 1e-10);
            assert!(action_residual(&k, &s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_all_kinds() {
        let mut rng = seeded_rng(19, 0);
        let k = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap();
        let channels: Vec<Channel> = vec![k.clone().into(), k.to_stinespring().unwrap().into(), pauli_average().into(), k.to_choi().into()];
        for ch in channels {
            let back = Channel::from_json(&ch.to_json()).unwrap();
            assert_eq!(back.kind(), ch.kind());
            assert!(action_residual(&back, &ch).unwrap() < 1e-15);
        }
    }

    #[test]
    fn json_reports_offending_field() {
        let text = r#"{"kind":"random_unitary","dim_in":2,"dim_out":2,"probs":[0.5,0.5],
            "unitaries":[[[[1,0],[0,0]],[[0,0],[1,0]]],[[[1,0],[0,0]],[[0,0],[2,0]]]]}"#;
        let err = Channel::from_json(text).unwrap_err().to_string();
        assert!(err.contains("unitaries[1]"), "{err}");
        let text = r#"{"kind":"kraus","dim_in":3,"dim_out":2,"kraus_ops":[[[[1,0],[0,0]],[[0,0],[1,0]]]]}"#;
        let err = Channel::from_json(text).unwrap_err().to_string();
        assert!(err.contains("dim_in"), "{err}");
    }

    #[test]
    fn random_unitary_recognition() {
        let dep = pauli_average();
        let back = dep.to_kraus().to_random_unitary().unwrap();
        assert!(action_residual(&dep, &back).unwrap() < 1e-12);
        assert!(dephasing().to_random_unitary().is_err());
    }
}
