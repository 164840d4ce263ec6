//! Random-unitary approximation `Φ′ = N_B ∘ Ad_U ∘ M ∘ D` of an arbitrary channel.

use serde::Serialize;

use crate::channels::{apply, kraus_dilation, Channel, ChannelMap, KrausChannel, RandomUnitaryChannel, StinespringDilation, Superoperator};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{kron, permutation_map, tensor, trace_norm, ComplexMatrix, DensityMatrix, UnitaryMatrix, C64};
use crate::standard_channels::{dephase_split, mix_subspace, noise_on_factor, SubspaceSplit};

/// Largest random-unitary term count assembled symbolically.
pub const MAX_RU_TERMS: usize = 1_000_000;

/// Tolerance for "supported on the complement of `S₀`".
pub const TOL_SUPPORT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuildMode {
    /// Assemble the composite random-unitary decomposition when it fits under [`MAX_RU_TERMS`].
    Symbolic,
    /// Keep only the composed superoperator.
    ActionOnly,
}

/// The four stages of `Φ′` in application order.
#[derive(Clone, Debug)]
pub struct Stages {
    pub dephase: RandomUnitaryChannel,
    pub mix: RandomUnitaryChannel,
    pub conjugate: RandomUnitaryChannel,
    pub noise: RandomUnitaryChannel,
}

impl Stages {
    pub fn as_array(&self) -> [&RandomUnitaryChannel; 4] {
        [&self.dephase, &self.mix, &self.conjugate, &self.noise]
    }

    pub fn term_count(&self) -> usize {
        self.as_array().iter().map(|s| s.len()).product()
    }
}

#[derive(Clone, Debug)]
pub struct ApproxChannel {
    dim_a: usize,
    dim_h: usize,
    dim_k: usize,
    dim_b: usize,
    dilation: StinespringDilation,
    split: SubspaceSplit,
    stages: Stages,
    ru: Option<RandomUnitaryChannel>,
    superop: Superoperator,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxSummary {
    #[serde(rename = "dim_A")]
    pub dim_a: usize,
    #[serde(rename = "dim_H")]
    pub dim_h: usize,
    #[serde(rename = "dim_K")]
    pub dim_k: usize,
    #[serde(rename = "dim_B")]
    pub dim_b: usize,
    pub m: f64,
    pub ru_terms: usize,
    pub symbolic: bool,
}

impl ApproxChannel {
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

    /// `log₂ dim_A`, not necessarily an integer.
    pub fn m(&self) -> f64 {
        (self.dim_a as f64).log2()
    }

    pub fn dilation(&self) -> &StinespringDilation {
        &self.dilation
    }

    pub fn split(&self) -> &SubspaceSplit {
        &self.split
    }

    pub fn stages(&self) -> &Stages {
        &self.stages
    }

    /// The composite random-unitary decomposition, absent in action-only mode.
    pub fn ru(&self) -> Option<&RandomUnitaryChannel> {
        self.ru.as_ref()
    }

    pub fn superoperator_ref(&self) -> &Superoperator {
        &self.superop
    }

    pub fn total_dim(&self) -> usize {
        self.dim_a * self.dim_h
    }

    pub fn summary(&self) -> ApproxSummary {
        ApproxSummary {
            dim_a: self.dim_a,
            dim_h: self.dim_h,
            dim_k: self.dim_k,
            dim_b: self.dim_b,
            m: self.m(),
            ru_terms: self.stages.term_count(),
            symbolic: self.ru.is_some(),
        }
    }

    /// State after each stage, starting with the input.
    pub fn trajectory(&self, rho: &ComplexMatrix) -> Vec<ComplexMatrix> {
        let mut out = vec![rho.clone()];
        for s in self.stages.as_array() {
            let next = s.map(out.last().unwrap());
            out.push(next);
        }
        out
    }

    /// Channel JSON: random-unitary when symbolic, Choi otherwise.
    pub fn to_channel(&self) -> Channel {
        match &self.ru {
            Some(ru) => ru.clone().into(),
            None => {
                crate::channels::ChoiMatrix::new(self.total_dim(), self.total_dim(), self.superop.choi()).expect("consistent dims").into()
            }
        }
    }
}

impl ChannelMap for ApproxChannel {
    fn dim_in(&self) -> usize {
        self.total_dim()
    }

    fn dim_out(&self) -> usize {
        self.total_dim()
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.superop.map(x)
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        self.superop.adjoint_map(y)
    }

    fn map_with_reference(&self, x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        self.superop.map_with_reference(x, dim_f)
    }

    fn adjoint_with_reference(&self, y: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        self.superop.adjoint_with_reference(y, dim_f)
    }

    fn superoperator(&self) -> Superoperator {
        self.superop.clone()
    }
}

/// Smallest `dim_A ≥ 2` for which `phi` has a dilation with that ancilla.
pub fn minimal_ancilla(phi: &Channel) -> Result<usize> {
    if let Channel::Stinespring(s) = phi {
        return Ok(if s.dim_a() >= 2 { s.dim_a() } else { 2 * s.dim_a() }.max(kraus_minimum(phi)?));
    }
    kraus_minimum(phi)
}

fn kraus_minimum(phi: &Channel) -> Result<usize> {
    let k = compressed_kraus(phi)?;
    let (dh, dk) = (k.dim_in(), k.dim_out());
    let mut a = crate::channels::minimal_kraus_ancilla(dh, dk, k.kraus_ops().len()).max(2);
    while !(a * dh).is_multiple_of(dk) {
        a += 1;
    }
    Ok(a)
}

/// Kraus operators of minimal count (from the Choi eigendecomposition).
fn compressed_kraus(phi: &Channel) -> Result<KrausChannel> {
    let k = phi.to_kraus()?;
    if k.kraus_ops().len() <= 1 {
        return Ok(k);
    }
    k.to_choi().to_kraus()
}

/// A dilation of `phi` with exactly `dim_a` ancilla dimensions.
///
/// A given Stinespring dilation whose ancilla size divides `dim_a` is padded
/// as `U ⊗ I_T`, the extra factor `T` passing from the ancilla into `B`.
/// Any other channel is dilated from its Kraus operators.
pub fn dilate(phi: &Channel, dim_a: usize) -> Result<StinespringDilation> {
    let min = minimal_ancilla(phi)?;
    if let Channel::Stinespring(s) = phi {
        if dim_a >= 2 && dim_a.is_multiple_of(s.dim_a()) {
            return pad_dilation(s, dim_a / s.dim_a());
        }
    }
    let k = compressed_kraus(phi)?;
    if dim_a < min || !(dim_a * k.dim_in()).is_multiple_of(k.dim_out()) {
        return Err(Error::Parameter(format!(
            "dim_A = {dim_a} admits no dilation of this channel; minimum is {min} (and dim_A·{} must be divisible by {})",
            k.dim_in(),
            k.dim_out()
        )));
    }
    kraus_dilation(&k, Some(dim_a))
}

fn pad_dilation(s: &StinespringDilation, t: usize) -> Result<StinespringDilation> {
    if t == 1 {
        return Ok(s.clone());
    }
    let (a0, h, k, b0) = (s.dim_a(), s.dim_h(), s.dim_k(), s.dim_b());
    // input order A₀⊗T⊗H is reordered to A₀⊗H⊗T before U ⊗ I_T
    let map = permutation_map(&[a0, t, h], &[0, 2, 1])?;
    let n = a0 * t * h;
    let mut perm = ComplexMatrix::zeros(n, n);
    for (old, &new) in map.iter().enumerate() {
        perm[(new, old)] = C64::new(1.0, 0.0);
    }
    let u = tensor(s.unitary().matrix(), &ComplexMatrix::identity(t))?.matmul(&perm);
    StinespringDilation::new(a0 * t, h, k, b0 * t, UnitaryMatrix::from_matrix_unchecked(u))
}

pub fn build_approximation(phi: &Channel, dim_a: usize) -> Result<ApproxChannel> {
    build_approximation_with(phi, dim_a, BuildMode::Symbolic)
}

pub fn build_approximation_with(phi: &Channel, dim_a: usize, mode: BuildMode) -> Result<ApproxChannel> {
    let dilation = dilate(phi, dim_a)?;
    from_dilation(dilation, mode)
}

/// Builds `Φ′` from an explicit dilation.
pub fn from_dilation(dilation: StinespringDilation, mode: BuildMode) -> Result<ApproxChannel> {
    let (da, dh, dk, db) = (dilation.dim_a(), dilation.dim_h(), dilation.dim_k(), dilation.dim_b());
    let split = SubspaceSplit::new(da, dh)?;
    let total = split.total();
    if total * total > crate::numerics::MAX_DIM {
        return Err(Error::ResourceCap(format!(
            "superoperator of a {total}-dimensional channel exceeds max_dim = {}",
            crate::numerics::MAX_DIM
        )));
    }
    let stages = Stages {
        dephase: dephase_split(&split),
        mix: mix_subspace(&split),
        conjugate: RandomUnitaryChannel::unitary(dilation.unitary().clone()),
        noise: noise_on_factor(dk, db)?,
    };
    let superop = stages.as_array().iter().skip(1).try_fold(stages.dephase.superoperator(), |acc, s| s.superoperator().compose(&acc))?;
    let ru = match mode {
        BuildMode::Symbolic if stages.term_count() <= MAX_RU_TERMS => Some(compose_symbolic(&stages)?),
        _ => None,
    };
    Ok(ApproxChannel { dim_a: da, dim_h: dh, dim_k: dk, dim_b: db, dilation, split, stages, ru, superop })
}

fn compose_symbolic(stages: &Stages) -> Result<RandomUnitaryChannel> {
    // the middle two stages compose first so the large outer products reuse them
    let u = stages.conjugate.unitaries()[0].matrix();
    let d = u.rows();
    let mut probs = Vec::with_capacity(stages.term_count());
    let mut unitaries = Vec::with_capacity(stages.term_count());
    let inner: Vec<(f64, ComplexMatrix)> = stages
        .mix
        .probs()
        .iter()
        .zip(stages.mix.unitaries())
        .flat_map(|(pm, m)| {
            let um = u.matmul(m.matrix());
            stages
                .dephase
                .probs()
                .iter()
                .zip(stages.dephase.unitaries())
                .map(move |(pd, dph)| (pm * pd, um.matmul(dph.matrix())))
                .collect::<Vec<_>>()
        })
        .collect();
    for (pn, n) in stages.noise.probs().iter().zip(stages.noise.unitaries()) {
        for (p, w) in &inner {
            probs.push(pn * p);
            unitaries.push(UnitaryMatrix::from_matrix_unchecked(n.matrix().matmul(w)));
        }
    }
    debug_assert!(unitaries.iter().all(|w| w.dim() == d));
    Ok(RandomUnitaryChannel::from_parts_unchecked(d, probs, unitaries))
}

fn check_state_dim(ac: &ApproxChannel, rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != ac.total_dim() {
        return dim_err(format!("state of dimension {} does not live on A⊗H = {}", rho.dim(), ac.total_dim()));
    }
    Ok(())
}

/// `Φ′(|0⟩⟨0| ⊗ σ)`
pub fn simulate_original(ac: &ApproxChannel, sigma: &DensityMatrix) -> Result<DensityMatrix> {
    if sigma.dim() != ac.dim_h {
        return dim_err(format!("σ has dimension {}, expected dim_H = {}", sigma.dim(), ac.dim_h));
    }
    let input = DensityMatrix::basis(ac.dim_a, 0).tensor(sigma)?;
    apply(ac, &input)
}

/// `Φ(σ) ⊗ Ĩ_B`, the target of [`simulate_original`].
pub fn original_with_noise(ac: &ApproxChannel, sigma: &ComplexMatrix) -> ComplexMatrix {
    let out = ac.dilation.map(sigma);
    kron(&out, &ComplexMatrix::identity(ac.dim_b).scale_real(1.0 / ac.dim_b as f64))
}

/// Trace distance between `Φ′(|0⟩⟨0|⊗σ)` and `Φ(σ)⊗Ĩ_B`.
pub fn simulation_residual(ac: &ApproxChannel, sigma: &DensityMatrix) -> Result<f64> {
    let got = simulate_original(ac, sigma)?;
    trace_norm(&(got.matrix() - &original_with_noise(ac, sigma.matrix())))
}

/// `D(ρ) = q |0⟩⟨0|⊗σ + (1−q) ρ⊥`
#[derive(Clone, Debug, Serialize)]
pub struct OutputDecomposition {
    pub q: f64,
    pub sigma: Option<DensityMatrix>,
    pub rho_perp: Option<DensityMatrix>,
}

impl OutputDecomposition {
    pub fn reconstruct(&self, dim_a: usize) -> ComplexMatrix {
        let mut out = match &self.rho_perp {
            Some(r) => r.matrix().scale_real(1.0 - self.q),
            None => {
                let dh = self.sigma.as_ref().map_or(1, |s| s.dim());
                ComplexMatrix::zeros(dim_a * dh, dim_a * dh)
            }
        };
        if let Some(s) = &self.sigma {
            let lifted = kron(&ComplexMatrix::unit(dim_a, 0, 0), s.matrix());
            out.axpy(C64::new(self.q, 0.0), &lifted);
        }
        out
    }
}

const WEIGHT_FLOOR: f64 = 1e-14;

pub fn decompose_input(ac: &ApproxChannel, rho: &DensityMatrix) -> Result<OutputDecomposition> {
    check_state_dim(ac, rho)?;
    let s = &ac.split;
    let m = rho.matrix();
    let dh = s.dim_h();
    let n = s.total();
    let q = (0..dh).map(|i| m[(i, i)].re).sum::<f64>().clamp(0.0, 1.0);
    let sigma = (q > WEIGHT_FLOOR).then(|| DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_fn(dh, dh, |r, c| m[(r, c)] / q)));
    let rho_perp = (1.0 - q > WEIGHT_FLOOR).then(|| {
        DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_fn(n, n, |r, c| {
            if s.in_s0(r) || s.in_s0(c) {
                C64::new(0.0, 0.0)
            } else {
                m[(r, c)] / (1.0 - q)
            }
        }))
    });
    Ok(OutputDecomposition { q, sigma, rho_perp })
}

/// Trace norm of `Φ′(ρ) − [q Φ(σ)⊗Ĩ_B + (1−q) Φ′(ρ⊥)]`.
pub fn output_mix_check(ac: &ApproxChannel, rho: &DensityMatrix) -> Result<f64> {
    let dec = decompose_input(ac, rho)?;
    let mut expected = ComplexMatrix::zeros(ac.total_dim(), ac.total_dim());
    if let Some(s) = &dec.sigma {
        expected.axpy(C64::new(dec.q, 0.0), &original_with_noise(ac, s.matrix()));
    }
    if let Some(r) = &dec.rho_perp {
        expected.axpy(C64::new(1.0 - dec.q, 0.0), &ac.map(r.matrix()));
    }
    trace_norm(&(&ac.map(rho.matrix()) - &expected))
}

/// Max abs entry of `ρ − P⊥ ρ P⊥`.
pub fn perp_support_residual(split: &SubspaceSplit, rho: &ComplexMatrix) -> f64 {
    let n = split.total();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            if split.in_s0(r) || split.in_s0(c) {
                worst = worst.max(rho[(r, c)].norm());
            }
        }
    }
    worst
}

/// `‖Φ′(ρ) − Ĩ_{A⊗H}‖_tr` for `ρ` supported on the complement of `S₀`.
pub fn perp_mixing_distance(ac: &ApproxChannel, rho: &DensityMatrix) -> Result<f64> {
    check_state_dim(ac, rho)?;
    let res = perp_support_residual(&ac.split, rho.matrix());
    if res > TOL_SUPPORT {
        return Err(Error::Precondition(format!("state is not supported on the complement of S₀ (residual {res:.3e})")));
    }
    let n = ac.total_dim();
    let target = ComplexMatrix::identity(n).scale_real(1.0 / n as f64);
    trace_norm(&(&ac.map(rho.matrix()) - &target))
}

/// A random state supported on the complement of `S₀`.
pub fn random_perp_state(split: &SubspaceSplit, rng: &mut impl rand::Rng) -> DensityMatrix {
    let (d0, n) = (split.dim_s0(), split.dim_perp());
    let inner = crate::sampling::random_density(n, rng);
    let total = split.total();
    DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_fn(total, total, |r, c| {
        if r < d0 || c < d0 {
            C64::new(0.0, 0.0)
        } else {
            inner.matrix()[(r - d0, c - d0)]
        }
    }))
}

/// The isometric embedding `σ ↦ |0⟩⟨0| ⊗ σ` dilated with `U = I` and `B` trivial.
pub fn embedding_dilation(dim_a: usize, dim_h: usize) -> Result<StinespringDilation> {
    StinespringDilation::new(dim_a, dim_h, dim_a * dim_h, 1, UnitaryMatrix::identity(dim_a * dim_h))
}
