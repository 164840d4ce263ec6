//! Entropy and Schatten-norm functionals, output optimizers and the sandwich
//! and gap verifiers built on them.

use serde::Serialize;

use crate::approximation::ApproxChannel;
use crate::channels::{ChannelMap, Superoperator};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{
    check_p, clip_spectrum, eigh, eigvalsh, kron, p_norm_of, partial_trace, top_eigenpair, trace_norm, ComplexMatrix, DensityMatrix,
    HermitianEigen, PureState, C64,
};
use crate::sampling::{random_pure_state, seeded_rng};

/// Floor applied to eigenvalues before taking logarithms in the entropy descent.
const LOG_FLOOR: f64 = 1e-16;
/// Relative width of the top eigenspace treated as degenerate at `p = ∞`.
const TIE_TOL: f64 = 1e-12;

/// `−Σ λ log₂ λ` over the clipped spectrum.
pub fn entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&rho.eigenvalues()?))
}

pub(crate) fn entropy_of_spectrum(values: &[f64]) -> f64 {
    let h: f64 = values.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum();
    h.max(0.0)
}

pub(crate) fn entropy_of_matrix(m: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&clip_spectrum(eigvalsh(m)?)))
}

/// `S(Φ(|ψ⟩⟨ψ|))`
pub fn output_entropy(phi: &dyn ChannelMap, psi: &PureState) -> Result<f64> {
    check_input(phi, psi)?;
    entropy_of_matrix(&phi.map(&psi.projector()))
}

/// `‖Φ(|ψ⟩⟨ψ|)‖_p`
pub fn output_pnorm(phi: &dyn ChannelMap, psi: &PureState, p: f64) -> Result<f64> {
    check_p(p)?;
    check_input(phi, psi)?;
    let vals = clip_spectrum(eigvalsh(&phi.map(&psi.projector()))?);
    Ok(p_norm_of(&vals, p))
}

fn check_input(phi: &dyn ChannelMap, psi: &PureState) -> Result<()> {
    if psi.dim() != phi.dim_in() {
        return dim_err(format!("state of dimension {} fed to a channel on {}", psi.dim(), phi.dim_in()));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct OptConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once the objective changes by less than this.
    pub tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { restarts: 32, seed: 0, max_iter: 1000, tol: 1e-10 }
    }
}

impl OptConfig {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, ..Self::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptResult {
    pub value: f64,
    pub witness: PureState,
    pub restarts_used: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// Final value of every restart: random starts first, then warm starts.
    pub restart_values: Vec<f64>,
    /// `max − min` over the best quarter of `restart_values`.
    pub spread: f64,
}

#[derive(Clone, Copy, Debug)]
enum Objective {
    MinEntropy,
    MaxPNorm(f64),
}

impl Objective {
    fn improves(&self, new: f64, old: f64) -> bool {
        match self {
            Objective::MinEntropy => new <= old,
            Objective::MaxPNorm(_) => new >= old,
        }
    }

    fn value(&self, spectrum: &[f64]) -> f64 {
        match self {
            Objective::MinEntropy => entropy_of_spectrum(spectrum),
            Objective::MaxPNorm(p) => p_norm_of(spectrum, *p),
        }
    }

    /// Operator whose top eigenvector under `Φ*` is the next iterate.
    fn dual_weight(&self, values: &[f64]) -> Vec<f64> {
        match *self {
            Objective::MinEntropy => values.iter().map(|&l| l.max(LOG_FLOOR).log2()).collect(),
            Objective::MaxPNorm(p) if p.is_infinite() => {
                let top = values[0];
                let cut = top - TIE_TOL * top.abs().max(1.0);
                let k = values.iter().filter(|&&l| l >= cut).count() as f64;
                values.iter().map(|&l| if l >= cut { 1.0 / k } else { 0.0 }).collect()
            }
            Objective::MaxPNorm(p) => values.iter().map(|&l| l.max(0.0).powf(p - 1.0)).collect(),
        }
    }
}

struct LocalRun {
    value: f64,
    psi: Vec<C64>,
    iterations: usize,
    converged: bool,
}

fn evaluate(s: &Superoperator, obj: Objective, psi: &[C64]) -> Result<(f64, HermitianEigen)> {
    let rho = s.map(&ComplexMatrix::outer(psi, psi));
    let mut e = eigh(&rho)?;
    e.values = clip_spectrum(e.values);
    Ok((obj.value(&e.values), e))
}

/// Successive linearization: the next pure input is the top eigenvector of
/// `Φ*(f(ρ))`, where `f(ρ)` is the gradient of the objective at the current output.
fn local_run(s: &Superoperator, obj: Objective, start: Vec<C64>, cfg: &OptConfig) -> Result<LocalRun> {
    let (mut value, mut e) = evaluate(s, obj, &start)?;
    let mut psi = start;
    if matches!(obj, Objective::MaxPNorm(p) if p == 1.0) {
        return Ok(LocalRun { value, psi, iterations: 0, converged: true });
    }
    for it in 1..=cfg.max_iter {
        let weight = obj.dual_weight(&e.values);
        let w = reconstruct(&e, &weight);
        let g = s.adjoint_map(&w);
        let (_, candidate) = top_eigenpair(&g)?;
        let (new_value, new_e) = evaluate(s, obj, &candidate)?;
        if !obj.improves(new_value, value) {
            return Ok(LocalRun { value, psi, iterations: it, converged: true });
        }
        let change = (new_value - value).abs();
        value = new_value;
        psi = candidate;
        e = new_e;
        if change < cfg.tol {
            return Ok(LocalRun { value, psi, iterations: it, converged: true });
        }
    }
    Ok(LocalRun { value, psi, iterations: cfg.max_iter, converged: false })
}

fn reconstruct(e: &HermitianEigen, weight: &[f64]) -> ComplexMatrix {
    let n = weight.len();
    let v = &e.vectors;
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, &w) in weight.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let col = v.column(k);
        out.axpy(C64::new(w, 0.0), &ComplexMatrix::outer(&col, &col));
    }
    out
}

fn run_all<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn optimize(phi: &dyn ChannelMap, obj: Objective, cfg: &OptConfig, warm: &[PureState]) -> Result<OptResult> {
    if cfg.restarts == 0 {
        return Err(Error::Parameter("restarts must be at least 1".into()));
    }
    let d = phi.dim_in();
    if let Some(w) = warm.iter().find(|w| w.dim() != d) {
        return dim_err(format!("warm start of dimension {} for a channel on {d}", w.dim()));
    }
    let s = phi.superoperator();
    let total = cfg.restarts + warm.len();
    let runs = run_all(total, |i| {
        let start = if i < cfg.restarts {
            let mut rng = seeded_rng(cfg.seed, i as u64);
            random_pure_state(d, &mut rng).amplitudes().to_vec()
        } else {
            warm[i - cfg.restarts].amplitudes().to_vec()
        };
        local_run(&s, obj, start, cfg)
    });
    let runs: Vec<LocalRun> = runs.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        // strict improvement keeps the earliest index on ties
        let better = match obj {
            Objective::MinEntropy => r.value < runs[best].value,
            Objective::MaxPNorm(_) => r.value > runs[best].value,
        };
        if better {
            best = i;
        }
    }
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let spread = top_quartile_spread(&restart_values, matches!(obj, Objective::MaxPNorm(_)));
    let b = &runs[best];
    Ok(OptResult {
        value: b.value,
        witness: PureState::normalized(b.psi.clone())?,
        restarts_used: total,
        iterations: b.iterations,
        converged: b.converged,
        seed: cfg.seed,
        restart_values,
        spread,
    })
}

/// `max − min` over the best `⌈n/4⌉` values.
pub fn top_quartile_spread(values: &[f64], larger_is_better: bool) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| if larger_is_better { b.total_cmp(a) } else { a.total_cmp(b) });
    let k = v.len().div_ceil(4).max(1);
    let top = &v[..k];
    top.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - top.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Multi-start estimate of `min_ψ S(Φ(ψψ*))`, an upper bound on the true minimum.
pub fn min_output_entropy(phi: &dyn ChannelMap, restarts: usize, seed: u64) -> Result<OptResult> {
    min_output_entropy_with(phi, &OptConfig::new(restarts, seed), &[])
}

pub fn min_output_entropy_with(phi: &dyn ChannelMap, cfg: &OptConfig, warm: &[PureState]) -> Result<OptResult> {
    optimize(phi, Objective::MinEntropy, cfg, warm)
}

/// Multi-start estimate of `max_ψ ‖Φ(ψψ*)‖_p`, a lower bound on the true maximum.
pub fn max_output_pnorm(phi: &dyn ChannelMap, p: f64, restarts: usize, seed: u64) -> Result<OptResult> {
    max_output_pnorm_with(phi, p, &OptConfig::new(restarts, seed), &[])
}

pub fn max_output_pnorm_with(phi: &dyn ChannelMap, p: f64, cfg: &OptConfig, warm: &[PureState]) -> Result<OptResult> {
    check_p(p)?;
    optimize(phi, Objective::MaxPNorm(p), cfg, warm)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FannesBound {
    pub value: f64,
    /// False when `δ > 1/e`, outside the monotone branch of `−x log x`.
    pub valid: bool,
}

/// `δ log₂ dim − δ log₂ δ`
pub fn fannes_bound(delta: f64, dim: usize) -> Result<FannesBound> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::Parameter(format!("δ = {delta} must be nonnegative")));
    }
    if dim == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let value = if delta == 0.0 { 0.0 } else { delta * (dim as f64).log2() - delta * delta.log2() };
    Ok(FannesBound { value, valid: delta <= (-1.0f64).exp() })
}

/// Evidence class of a reported number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    CertifiedLower,
    CertifiedUpper,
    Consensus,
}

#[derive(Clone, Debug, Serialize)]
pub struct Measured {
    pub value: f64,
    pub method: Method,
}

/// Three-term inequality `lower ≤ middle ≤ upper` (or the reversed chain for entropies).
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    pub statement: String,
    pub dim_a: usize,
    pub dim_b: usize,
    pub p: Option<f64>,
    pub original: Measured,
    pub middle: Measured,
    pub bound: Measured,
    pub left_holds: bool,
    pub right_holds: bool,
    pub slack: f64,
    pub spread_original: f64,
    pub spread_approx: f64,
    pub in_regime: bool,
    pub pass: bool,
}

fn lift_witness(ac: &ApproxChannel, w: &PureState) -> Result<PureState> {
    PureState::basis(ac.dim_a(), 0).tensor(w)
}

/// `ν_p(Φ) ≤ ν_p(Φ′)/‖Ĩ_B‖_p ≤ ν_p(Φ) + 2 dim_B/dim_A`.
///
/// The left inequality is certified: `|0⟩ ⊗ witness_Φ` is a warm start for `Φ′`.
/// The right one compares two lower-bound estimates and uses the spread slack.
pub fn verify_pnorm_sandwich(phi: &dyn ChannelMap, ac: &ApproxChannel, p: f64, restarts: usize, seed: u64) -> Result<SandwichReport> {
    check_p(p)?;
    let cfg = OptConfig::new(restarts, seed);
    let orig = max_output_pnorm_with(phi, p, &cfg, &[])?;
    let warm = lift_witness(ac, &orig.witness)?;
    let approx = max_output_pnorm_with(ac, p, &cfg, &[warm])?;
    let db = ac.dim_b() as f64;
    let noise_norm = if p.is_infinite() { 1.0 / db } else { db.powf(1.0 / p - 1.0) };
    let middle = approx.value / noise_norm;
    let upper = orig.value + 2.0 * db / ac.dim_a() as f64;
    let slack = 1e-6 + orig.spread.max(approx.spread);
    let left_holds = orig.value <= middle + slack;
    let right_holds = middle <= upper + slack;
    Ok(SandwichReport {
        statement: "nu_p(phi) <= nu_p(phi')/||I_B/d_B||_p <= nu_p(phi) + 2 d_B/d_A".into(),
        dim_a: ac.dim_a(),
        dim_b: ac.dim_b(),
        p: Some(p),
        original: Measured { value: orig.value, method: Method::CertifiedLower },
        middle: Measured { value: middle, method: Method::CertifiedLower },
        bound: Measured { value: upper, method: Method::Consensus },
        left_holds,
        right_holds,
        slack,
        spread_original: orig.spread,
        spread_approx: approx.spread,
        in_regime: true,
        pass: left_holds && right_holds,
    })
}

/// `S_min(Φ) ≥ S_min(Φ′) − log₂ dim_B ≥ S_min(Φ) − 8 log₂ dim_A / dim_A`.
///
/// The left inequality is certified by the lifted warm start; the right one
/// is checked with the spread slack. Outside `dim_A ≥ dim_H`, `log₂ dim_A ≥ 3`
/// the report is flagged but still filled in.
pub fn verify_entropy_sandwich(phi: &dyn ChannelMap, ac: &ApproxChannel, restarts: usize, seed: u64) -> Result<SandwichReport> {
    let cfg = OptConfig::new(restarts, seed);
    let orig = min_output_entropy_with(phi, &cfg, &[])?;
    let warm = lift_witness(ac, &orig.witness)?;
    let approx = min_output_entropy_with(ac, &cfg, &[warm])?;
    let middle = approx.value - (ac.dim_b() as f64).log2();
    let lower = orig.value - 8.0 * ac.m() / ac.dim_a() as f64;
    let slack = 1e-6 + orig.spread.max(approx.spread);
    let left_holds = middle <= orig.value + slack;
    let right_holds = middle >= lower - slack;
    let in_regime = ac.dim_a() >= ac.dim_h() && ac.m() >= 3.0;
    Ok(SandwichReport {
        statement: "S_min(phi) >= S_min(phi') - log d_B >= S_min(phi) - 8 log d_A / d_A".into(),
        dim_a: ac.dim_a(),
        dim_b: ac.dim_b(),
        p: None,
        original: Measured { value: orig.value, method: Method::CertifiedUpper },
        middle: Measured { value: middle, method: Method::CertifiedUpper },
        bound: Measured { value: lower, method: Method::Consensus },
        left_holds,
        right_holds,
        slack,
        spread_original: orig.spread,
        spread_approx: approx.spread,
        in_regime,
        pass: left_holds && right_holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub kind: String,
    pub p: Option<f64>,
    pub first: f64,
    pub second: f64,
    pub joint: f64,
    /// Raw difference of the estimates.
    pub raw_gap: f64,
    /// Gap clamped to the certified direction (never a fake violation).
    pub gap: f64,
    /// The product witness alone certifies `gap ≥ 0` for the true optima.
    pub product_certificate: f64,
    pub spread_joint: f64,
}

fn product_warm_start(a: &OptResult, b: &OptResult) -> Result<PureState> {
    a.witness.tensor(&b.witness)
}

fn tensor_superop(phi: &dyn ChannelMap, psi: &dyn ChannelMap) -> Result<Superoperator> {
    phi.superoperator().tensor(&psi.superoperator())
}

/// `S_min(Φ) + S_min(Ψ) − S_min(Φ ⊗ Ψ)`
pub fn additivity_gap(phi: &dyn ChannelMap, psi: &dyn ChannelMap, restarts: usize, seed: u64) -> Result<GapReport> {
    let cfg = OptConfig::new(restarts, seed);
    let a = min_output_entropy_with(phi, &cfg, &[])?;
    let b = min_output_entropy_with(psi, &cfg, &[])?;
    let joint_map = tensor_superop(phi, psi)?;
    let warm = product_warm_start(&a, &b)?;
    let product_value = output_entropy(&joint_map, &warm)?;
    let j = min_output_entropy_with(&joint_map, &cfg, &[warm])?;
    let raw = a.value + b.value - j.value;
    Ok(GapReport {
        kind: "additivity".into(),
        p: None,
        first: a.value,
        second: b.value,
        joint: j.value,
        raw_gap: raw,
        gap: raw.max(0.0),
        product_certificate: a.value + b.value - product_value,
        spread_joint: j.spread,
    })
}

/// `ν_p(Φ ⊗ Ψ) − ν_p(Φ) ν_p(Ψ)`
pub fn multiplicativity_gap(phi: &dyn ChannelMap, psi: &dyn ChannelMap, p: f64, restarts: usize, seed: u64) -> Result<GapReport> {
    check_p(p)?;
    let cfg = OptConfig::new(restarts, seed);
    let a = max_output_pnorm_with(phi, p, &cfg, &[])?;
    let b = max_output_pnorm_with(psi, p, &cfg, &[])?;
    let joint_map = tensor_superop(phi, psi)?;
    let warm = product_warm_start(&a, &b)?;
    let product_value = output_pnorm(&joint_map, &warm, p)?;
    let j = max_output_pnorm_with(&joint_map, p, &cfg, &[warm])?;
    let raw = j.value - a.value * b.value;
    Ok(GapReport {
        kind: "multiplicativity".into(),
        p: Some(p),
        first: a.value,
        second: b.value,
        joint: j.value,
        raw_gap: raw,
        gap: raw.max(0.0),
        product_certificate: product_value - a.value * b.value,
        spread_joint: j.spread,
    })
}

/// Distances `(after, before)` to `Ĩ_A ⊗ tr_A ρ` when a random-unitary channel acts on `A` of `ρ` on `A⊗B`.
pub fn noise_contraction(psi: &dyn ChannelMap, rho: &DensityMatrix, dim_b: usize) -> Result<(f64, f64)> {
    let da = psi.dim_in();
    if psi.dim_out() != da || rho.dim() != da * dim_b {
        return dim_err("state does not live on A⊗B for this channel");
    }
    let rb = partial_trace(rho.matrix(), &[da, dim_b], &[1])?;
    let target = kron(&ComplexMatrix::identity(da).scale_real(1.0 / da as f64), &rb);
    let after = psi.map_with_reference(rho.matrix(), dim_b);
    Ok((trace_norm(&(&after - &target))?, trace_norm(&(rho.matrix() - &target))?))
}

/// Entropies `(before, after)` of one channel application.
pub fn entropy_change(psi: &dyn ChannelMap, rho: &DensityMatrix) -> Result<(f64, f64)> {
    let out = crate::channels::apply(psi, rho)?;
    Ok((entropy(rho)?, entropy(&out)?))
}
