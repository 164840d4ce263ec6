//! Discrete Weyl operators and the random-unitary building blocks of the
//! approximation: complete depolarization, noise on a tensor factor, subspace
//! dephasing and conditional mixing.

use serde::Serialize;

use crate::channels::RandomUnitaryChannel;
use crate::error::{Error, Result};
use crate::numerics::{kron, ComplexMatrix, UnitaryMatrix, C64, ONE};

/// The `d²` operators `X^a Z^b` with `X|j⟩ = |j+1⟩` and `Z|j⟩ = ω^j |j⟩`.
#[derive(Clone, Debug)]
pub struct WeylFamily {
    dim: usize,
    ops: Vec<UnitaryMatrix>,
}

impl WeylFamily {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[UnitaryMatrix] {
        &self.ops
    }

    /// Uniform mixture of the family, the completely depolarizing channel.
    pub fn uniform_mixture(&self) -> RandomUnitaryChannel {
        let n = self.ops.len();
        RandomUnitaryChannel::from_parts_unchecked(self.dim, vec![1.0 / n as f64; n], self.ops.clone())
    }
}

/// Cyclic shift `X|j⟩ = |j+1 mod d⟩`.
pub fn shift(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |r, c| if r == (c + 1) % d { ONE } else { C64::new(0.0, 0.0) })
}

/// Clock `Z|j⟩ = exp(2πi j/d)|j⟩`.
pub fn phase(d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = root_of_unity(j, d);
    }
    m
}

fn root_of_unity(k: usize, d: usize) -> C64 {
    // exact values at the quarter turns keep qubit operators real
    match (4 * (k % d)) % d {
        0 => match (4 * (k % d)) / d {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        },
        _ => C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64),
    }
}

pub fn weyl_family(d: usize) -> Result<WeylFamily> {
    if d < 2 {
        return Err(Error::Parameter(format!("Weyl family needs d >= 2, got {d}")));
    }
    let mut ops = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // X^a Z^b |j⟩ = ω^{bj} |j + a⟩
            let m = ComplexMatrix::from_fn(d, d, |r, c| if r == (c + a) % d { root_of_unity(b * c, d) } else { C64::new(0.0, 0.0) });
            ops.push(UnitaryMatrix::from_matrix_unchecked(m));
        }
    }
    Ok(WeylFamily { dim: d, ops })
}

/// Maps every state to `I/d`.
pub fn depolarizing_channel(d: usize) -> Result<RandomUnitaryChannel> {
    Ok(weyl_family(d)?.uniform_mixture())
}

/// `ρ ↦ tr_B ρ ⊗ I/d_B` on `K⊗B`, realized as `I_K ⊗` (Weyl mixture on B).
pub fn noise_on_factor(dim_k: usize, dim_b: usize) -> Result<RandomUnitaryChannel> {
    if dim_k == 0 || dim_b == 0 {
        return Err(Error::Parameter("factor dimensions must be positive".into()));
    }
    if dim_b == 1 {
        return Ok(RandomUnitaryChannel::unitary(UnitaryMatrix::identity(dim_k)));
    }
    let w = weyl_family(dim_b)?;
    let ik = ComplexMatrix::identity(dim_k);
    let n = w.ops.len();
    let ops = w.ops.iter().map(|u| UnitaryMatrix::from_matrix_unchecked(kron(&ik, u.matrix()))).collect();
    Ok(RandomUnitaryChannel::from_parts_unchecked(dim_k * dim_b, vec![1.0 / n as f64; n], ops))
}

/// `S₀ = |0⟩_A ⊗ H` and its complement inside `A⊗H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SubspaceSplit {
    dim_a: usize,
    dim_h: usize,
}

impl SubspaceSplit {
    pub fn new(dim_a: usize, dim_h: usize) -> Result<Self> {
        if dim_a < 2 {
            return Err(Error::Parameter(format!("dim_A = {dim_a} leaves the complement of S₀ empty; need >= 2")));
        }
        if dim_h == 0 {
            return Err(Error::Parameter("dim_H must be positive".into()));
        }
        Ok(Self { dim_a, dim_h })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn total(&self) -> usize {
        self.dim_a * self.dim_h
    }

    pub fn dim_s0(&self) -> usize {
        self.dim_h
    }

    pub fn dim_perp(&self) -> usize {
        (self.dim_a - 1) * self.dim_h
    }

    /// Indices `< dim_H` span `S₀` in the `A⊗H` basis `a·dim_H + h`.
    pub fn in_s0(&self, index: usize) -> bool {
        index < self.dim_h
    }

    pub fn projector_s0(&self) -> ComplexMatrix {
        let diag: Vec<f64> = (0..self.total()).map(|i| if self.in_s0(i) { 1.0 } else { 0.0 }).collect();
        ComplexMatrix::from_real_diag(&diag)
    }

    pub fn projector_perp(&self) -> ComplexMatrix {
        let diag: Vec<f64> = (0..self.total()).map(|i| if self.in_s0(i) { 0.0 } else { 1.0 }).collect();
        ComplexMatrix::from_real_diag(&diag)
    }
}

/// `{(½, I), (½, P₀ − P⊥)}`: removes coherences between `S₀` and its complement.
pub fn dephase_split(s: &SubspaceSplit) -> RandomUnitaryChannel {
    let diag: Vec<f64> = (0..s.total()).map(|i| if s.in_s0(i) { 1.0 } else { -1.0 }).collect();
    let flip = UnitaryMatrix::from_matrix_unchecked(ComplexMatrix::from_real_diag(&diag));
    RandomUnitaryChannel::from_parts_unchecked(s.total(), vec![0.5, 0.5], vec![UnitaryMatrix::identity(s.total()), flip])
}

/// Uniform Weyl mixture on the complement of `S₀` (lexicographic basis
/// `|a⟩⊗|h⟩`, `a ≥ 1`), acting as the identity on `S₀`.
pub fn mix_subspace(s: &SubspaceSplit) -> RandomUnitaryChannel {
    let (d0, n) = (s.dim_s0(), s.dim_perp());
    let total = s.total();
    if n == 1 {
        return RandomUnitaryChannel::unitary(UnitaryMatrix::identity(total));
    }
    let w = weyl_family(n).expect("complement has dimension >= 2");
    let ops: Vec<UnitaryMatrix> = w
        .ops
        .iter()
        .map(|u| {
            let m = ComplexMatrix::from_fn(total, total, |r, c| match (r < d0, c < d0) {
                (true, true) => {
                    if r == c {
                        ONE
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }
                (false, false) => u.matrix()[(r - d0, c - d0)],
                _ => C64::new(0.0, 0.0),
            });
            UnitaryMatrix::from_matrix_unchecked(m)
        })
        .collect();
    let k = ops.len();
    RandomUnitaryChannel::from_parts_unchecked(total, vec![1.0 / k as f64; k], ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{action_residual, apply, validate_cptp, Channel, ChannelMap};
    use crate::numerics::{partial_trace, tensor, unitarity_residual, DensityMatrix, PureState};
    use crate::sampling::{random_density, seeded_rng};

    fn maximally_mixed(d: usize) -> ComplexMatrix {
        ComplexMatrix::identity(d).scale_real(1.0 / d as f64)
    }

    fn matrix_power(m: &ComplexMatrix, k: usize) -> ComplexMatrix {
        (0..k).fold(ComplexMatrix::identity(m.rows()), |acc, _| acc.matmul(m))
    }

    #[test]
    fn qubit_weyl_is_pauli() {
        let x = ComplexMatrix::from_rows(vec![vec![C64::new(0.0, 0.0), ONE], vec![ONE, C64::new(0.0, 0.0)]]).unwrap();
        let z = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert_eq!(shift(2), x);
        assert_eq!(phase(2), z);
        let w = weyl_family(2).unwrap();
        assert_eq!(w.ops()[1].matrix(), &z);
        assert_eq!(w.ops()[2].matrix(), &x);
        assert_eq!(w.ops()[3].matrix(), &x.matmul(&z));
    }

    #[test]
    fn qutrit_shift_and_phase_have_order_three() {
        assert!(matrix_power(&shift(3), 3).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        assert!(matrix_power(&phase(3), 3).max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        let w = weyl_family(3).unwrap();
        assert_eq!(w.ops().len(), 9);
        assert!(w.ops().iter().all(|u| unitarity_residual(u.matrix()) < 1e-12));
    }

    #[test]
    fn weyl_average_depolarizes() {
        let mut rng = seeded_rng(20, 0);
        for d in [2, 3, 4, 5] {
            let rho = random_density(d, &mut rng);
            let out = apply(&depolarizing_channel(d).unwrap(), &rho).unwrap();
            assert!(out.matrix().max_abs_diff(&maximally_mixed(d)) < 1e-12, "d = {d}");
        }
        let out = apply(&depolarizing_channel(2).unwrap(), &DensityMatrix::basis(2, 0)).unwrap();
        assert!(out.matrix().max_abs_diff(&maximally_mixed(2)) < 1e-15);
        assert!(matches!(weyl_family(1), Err(Error::Parameter(_))));
    }

    #[test]
    fn depolarizer_is_idempotent() {
        let dep: Channel = depolarizing_channel(3).unwrap().into();
        assert!(action_residual(&dep.compose(&dep).unwrap(), &dep).unwrap() < 1e-12);
    }

    #[test]
    fn factor_noise() {
        let mut rng = seeded_rng(21, 0);
        let (sk, tb) = (random_density(3, &mut rng), random_density(2, &mut rng));
        let n = noise_on_factor(3, 2).unwrap();
        let out = apply(&n, &sk.tensor(&tb).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(&tensor(sk.matrix(), &maximally_mixed(2)).unwrap()) < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        let bell = PureState::new(vec![C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).unwrap().density();
        let out = apply(&noise_on_factor(2, 2).unwrap(), &bell).unwrap();
        assert!(out.matrix().max_abs_diff(&maximally_mixed(4)) < 1e-12);

        let rho = random_density(3, &mut rng);
        assert_eq!(apply(&noise_on_factor(3, 1).unwrap(), &rho).unwrap(), rho);

        let rho = random_density(6, &mut rng);
        let out = apply(&n, &rho).unwrap();
        let expected = tensor(&partial_trace(rho.matrix(), &[3, 2], &[0]).unwrap(), &maximally_mixed(2)).unwrap();
        assert!(out.matrix().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn dephase_split_zeroes_cross_blocks() {
        let s = SubspaceSplit::new(3, 2).unwrap();
        let d = dephase_split(&s);
        let mut rng = seeded_rng(22, 0);
        let rho = random_density(6, &mut rng);
        let out = apply(&d, &rho).unwrap();
        for r in 0..6 {
            for c in 0..6 {
                let expected = if s.in_s0(r) == s.in_s0(c) { rho.matrix()[(r, c)] } else { C64::new(0.0, 0.0) };
                assert!((out.matrix()[(r, c)] - expected).norm() < 1e-12);
            }
        }
        let dd: Channel = d.clone().into();
        assert!(action_residual(&dd.compose(&dd).unwrap(), &d).unwrap() < 1e-12);
    }

    #[test]
    fn dephase_split_examples() {
        let s = SubspaceSplit::new(2, 2).unwrap();
        let d = dephase_split(&s);
        let mut rng = seeded_rng(23, 0);
        let sigma = random_density(2, &mut rng);
        let in_s0 = DensityMatrix::basis(2, 0).tensor(&sigma).unwrap();
        assert!(apply(&d, &in_s0).unwrap().matrix().max_abs_diff(in_s0.matrix()) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = C64::new(0.0, 0.0);
        // (|0⟩ + |1⟩)/√2 ⊗ |0⟩
        let psi = PureState::new(vec![C64::new(h, 0.0), z, C64::new(h, 0.0), z]).unwrap().density();
        let out = apply(&d, &psi).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.0, 0.5, 0.0])) < 1e-12);
    }

    #[test]
    fn mix_subspace_examples() {
        let s = SubspaceSplit::new(2, 2).unwrap();
        let m = mix_subspace(&s);
        assert_eq!(m.len(), 4);
        let mut rng = seeded_rng(24, 0);
        let sigma = random_density(2, &mut rng);
        let in_s0 = DensityMatrix::basis(2, 0).tensor(&sigma).unwrap();
        assert!(apply(&m, &in_s0).unwrap().matrix().max_abs_diff(in_s0.matrix()) < 1e-12);

        let one_zero = DensityMatrix::basis(4, 2);
        let out = apply(&m, &one_zero).unwrap();
        assert!(out.matrix().max_abs_diff(&ComplexMatrix::from_real_diag(&[0.0, 0.0, 0.5, 0.5])) < 1e-12);

        for d in [2usize, 3, 4] {
            let s = SubspaceSplit::new(d, 2).unwrap();
            let rho_perp = DensityMatrix::basis(d, 1).tensor(&random_density(2, &mut rng)).unwrap();
            let out = apply(&mix_subspace(&s), &rho_perp).unwrap();
            let mut ia = ComplexMatrix::identity(d);
            ia[(0, 0)] = C64::new(0.0, 0.0);
            let expected = tensor(&ia.scale_real(1.0 / (d - 1) as f64), &maximally_mixed(2)).unwrap();
            assert!(out.matrix().max_abs_diff(&expected) < 1e-12, "d = {d}");
        }
    }

    #[test]
    fn mixing_after_dephasing_gives_block_form() {
        let mut rng = seeded_rng(25, 0);
        for (da, dh) in [(2, 2), (4, 2), (3, 3)] {
            let s = SubspaceSplit::new(da, dh).unwrap();
            let md: Channel = Channel::from(mix_subspace(&s)).compose(&dephase_split(&s).into()).unwrap();
            let rho = random_density(s.total(), &mut rng);
            let out = apply(&md, &rho).unwrap();
            let p0 = s.projector_s0();
            let pp = s.projector_perp();
            let q_perp = pp.matmul(rho.matrix()).trace().re;
            let mut expected = p0.matmul(rho.matrix()).matmul(&p0);
            expected.axpy(C64::new(q_perp / s.dim_perp() as f64, 0.0), &pp);
            assert!(out.matrix().max_abs_diff(&expected) < 1e-10);
        }
    }

    #[test]
    fn building_blocks_are_unital_channels() {
        let s = SubspaceSplit::new(4, 2).unwrap();
        let chans: Vec<RandomUnitaryChannel> =
            vec![depolarizing_channel(3).unwrap(), noise_on_factor(2, 4).unwrap(), dephase_split(&s), mix_subspace(&s)];
        for ch in chans {
            let d = ch.dim();
            assert!(validate_cptp(&ch.clone().into()).unwrap().pass);
            let out = ch.map(&maximally_mixed(d));
            assert!(out.max_abs_diff(&maximally_mixed(d)) < 1e-10);
            assert!(ch.unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn sparse_superoperator_matches_dense() {
        let s = SubspaceSplit::new(3, 2).unwrap();
        let m = mix_subspace(&s);
        let sparse = m.superoperator();
        let dense = m.to_kraus().superoperator();
        assert!(sparse.matrix().max_abs_diff(dense.matrix()) < 1e-12);
    }
}
