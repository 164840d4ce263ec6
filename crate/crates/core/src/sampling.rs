//! Seeded random matrices, states and channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{eigh, inner, ComplexMatrix, DensityMatrix, PureState, UnitaryMatrix, C64};

/// Deterministic generator for a `(seed, stream)` pair.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with iid standard complex Gaussian entries.
pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_matrix(dim, dim, rng).hermitian_part()
}

/// Haar-random unit vector.
pub fn random_pure_state(dim: usize, rng: &mut impl Rng) -> PureState {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
        if let Ok(s) = PureState::normalized(v) {
            return s;
        }
    }
}

/// Hilbert-Schmidt random density matrix of full rank.
pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityMatrix {
    random_density_rank(dim, dim, rng)
}

/// `G G† / tr(G G†)` with `G` of shape `dim x rank`.
pub fn random_density_rank(dim: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = random_matrix(dim, rank.max(1), rng);
    let gg = g.matmul(&g.adjoint()).hermitian_part();
    let tr = gg.trace().re;
    DensityMatrix::from_matrix_unchecked(gg.scale_real(1.0 / tr))
}

/// Haar-random unitary via Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> UnitaryMatrix {
    let g = random_matrix(dim, dim, rng);
    UnitaryMatrix::from_matrix_unchecked(orthonormalize_columns(&g))
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
pub(crate) fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let (rows, cols) = (m.rows(), m.cols());
    let mut q: Vec<Vec<C64>> = Vec::with_capacity(cols);
    for c in 0..cols {
        let mut v = m.column(c);
        for _ in 0..2 {
            for u in &q {
                let p = inner(u, &v);
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= p * y;
                }
            }
        }
        let n = crate::numerics::vec_norm(&v);
        q.push(v.into_iter().map(|x| x / n).collect());
    }
    ComplexMatrix::from_fn(rows, cols, |r, c| q[c][r])
}

/// Random Kraus decomposition `{K_i}` of a channel `dim_in -> dim_out`.
///
/// Built from a Ginibre matrix `G` stacked as `(n_kraus·dim_out) x dim_in`
/// and made isometric as `G (G†G)^{-1/2}`. Needs `n_kraus·dim_out ≥ dim_in`.
pub fn random_kraus(dim_in: usize, dim_out: usize, n_kraus: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    assert!(n_kraus * dim_out >= dim_in, "{n_kraus} Kraus operators of shape {dim_out}x{dim_in} cannot be trace preserving");
    let g = random_matrix(n_kraus * dim_out, dim_in, rng);
    let gg = g.adjoint().matmul(&g);
    let e = eigh(&gg).expect("eigendecomposition of a small Gram matrix");
    let inv_sqrt = e.reconstruct_with(|x| if x > 1e-300 { 1.0 / x.sqrt() } else { 0.0 });
    let v = g.matmul(&inv_sqrt);
    (0..n_kraus).map(|i| ComplexMatrix::from_fn(dim_out, dim_in, |r, c| v[(i * dim_out + r, c)])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::unitarity_residual;

    #[test]
    fn same_seed_same_stream_repeats() {
        let a = random_matrix(3, 3, &mut seeded_rng(42, 1));
        let b = random_matrix(3, 3, &mut seeded_rng(42, 1));
        let c = random_matrix(3, 3, &mut seeded_rng(42, 2));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_kraus_is_trace_preserving() {
        let ks = random_kraus(3, 2, 4, &mut seeded_rng(0, 0));
        let mut sum = ComplexMatrix::zeros(3, 3);
        for k in &ks {
            sum += &k.adjoint().matmul(k);
        }
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let u = random_unitary(17, &mut seeded_rng(3, 3));
        assert!(unitarity_residual(u.matrix()) < 1e-12);
    }
}
