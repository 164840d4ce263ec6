//! Diamond-norm distance between channels, by alternating ascent over pure
//! inputs on `H ⊗ F`, and the distinguishability check for compiled circuits.

use serde::Serialize;

use crate::channels::{ChannelMap, Superoperator};
use crate::circuits::{assemble_input, compile_approximation, simulate_matrix, Circuit};
use crate::error::{Error, Result};
use crate::metrics::{top_quartile_spread, Method};
use crate::numerics::{eigh, top_eigenpair, ComplexMatrix, PureState, C64, MAX_DIM};
use crate::sampling::{random_pure_state, seeded_rng};

/// Eigenvalues at or above this go to the positive projector.
const SIGN_TIE: f64 = -1e-12;
const MONOTONE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct DiamondConfig {
    /// Reference dimension; `None` means `dim_H`.
    pub dim_f: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for DiamondConfig {
    fn default() -> Self {
        Self { dim_f: None, restarts: 64, seed: 0, max_iter: 500, tol: 1e-10 }
    }
}

impl DiamondConfig {
    pub fn new(restarts: usize, seed: u64) -> Self {
        Self { restarts, seed, ..Self::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiamondEstimate {
    /// Achieved by `witness`, hence a lower bound on the true distance.
    pub value: f64,
    pub witness: PureState,
    pub dim_f: usize,
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
    pub converged: bool,
    /// Every ascent step was nondecreasing within `1e-12`.
    pub monotone: bool,
    pub restart_values: Vec<f64>,
    pub spread: f64,
}

/// `‖(Δ ⊗ 1_F)(|ψ⟩⟨ψ|)‖₁` for `ψ` on `H ⊗ F`.
pub fn evaluate_difference(delta: &Superoperator, psi: &PureState, dim_f: usize) -> Result<f64> {
    if psi.dim() != delta.dim_in() * dim_f {
        return crate::error::dim_err(format!("witness of dimension {} for H⊗F = {}", psi.dim(), delta.dim_in() * dim_f));
    }
    let w = delta.map_with_reference(&psi.projector(), dim_f).hermitian_part();
    Ok(eigh(&w)?.values.iter().map(|v| v.abs()).sum())
}

struct Ascent {
    value: f64,
    psi: Vec<C64>,
    iterations: usize,
    converged: bool,
    monotone: bool,
}

fn sign_operator(w: &ComplexMatrix) -> Result<(f64, ComplexMatrix)> {
    let e = eigh(w)?;
    let value = e.values.iter().map(|v| v.abs()).sum();
    Ok((value, e.reconstruct_with(|l| if l >= SIGN_TIE { 1.0 } else { -1.0 })))
}

fn ascend(delta: &Superoperator, dim_f: usize, start: Vec<C64>, cfg: &DiamondConfig) -> Result<Ascent> {
    let image = |psi: &[C64]| delta.map_with_reference(&ComplexMatrix::outer(psi, psi), dim_f).hermitian_part();
    let (mut value, mut t) = sign_operator(&image(&start))?;
    let mut psi = start;
    let mut monotone = true;
    for it in 1..=cfg.max_iter {
        let g = delta.adjoint_with_reference(&t, dim_f).hermitian_part();
        let (_, candidate) = top_eigenpair(&g)?;
        let (new_value, new_t) = sign_operator(&image(&candidate))?;
        if new_value < value - MONOTONE_TOL {
            monotone = false;
            return Ok(Ascent { value, psi, iterations: it, converged: true, monotone });
        }
        let gain = new_value - value;
        value = new_value;
        psi = candidate;
        t = new_t;
        if gain < cfg.tol {
            return Ok(Ascent { value, psi, iterations: it, converged: true, monotone });
        }
    }
    Ok(Ascent { value, psi, iterations: cfg.max_iter, converged: false, monotone })
}

fn check_pair(phi1: &dyn ChannelMap, phi2: &dyn ChannelMap) -> Result<()> {
    if phi1.dim_in() != phi2.dim_in() || phi1.dim_out() != phi2.dim_out() {
        return crate::error::dim_err(format!(
            "channels {}→{} and {}→{} cannot be compared",
            phi1.dim_in(),
            phi1.dim_out(),
            phi2.dim_in(),
            phi2.dim_out()
        ));
    }
    Ok(())
}

/// Multi-start estimate of `‖Φ₁ − Φ₂‖⋄`.
pub fn diamond_distance(phi1: &dyn ChannelMap, phi2: &dyn ChannelMap, cfg: &DiamondConfig) -> Result<DiamondEstimate> {
    check_pair(phi1, phi2)?;
    let delta = phi1.superoperator().difference(&phi2.superoperator())?;
    diamond_of_difference(&delta, cfg, &[])
}

/// Same ascent on a precomputed difference map, with extra warm starts appended.
pub fn diamond_of_difference(delta: &Superoperator, cfg: &DiamondConfig, warm: &[PureState]) -> Result<DiamondEstimate> {
    let dh = delta.dim_in();
    let dim_f = cfg.dim_f.unwrap_or(dh);
    if dim_f < dh {
        return Err(Error::Parameter(format!("reference dimension {dim_f} is smaller than dim_H = {dh}")));
    }
    if cfg.restarts == 0 {
        return Err(Error::Parameter("restarts must be at least 1".into()));
    }
    if delta.dim_out().saturating_mul(dim_f) > MAX_DIM {
        return Err(Error::ResourceCap(format!("output with reference has dimension {} > {MAX_DIM}", delta.dim_out() * dim_f)));
    }
    let d = dh * dim_f;
    if let Some(w) = warm.iter().find(|w| w.dim() != d) {
        return crate::error::dim_err(format!("warm start of dimension {} for H⊗F = {d}", w.dim()));
    }
    let total = cfg.restarts + warm.len();
    let run = |i: usize| {
        let start = if i < cfg.restarts {
            random_pure_state(d, &mut seeded_rng(cfg.seed, i as u64)).amplitudes().to_vec()
        } else {
            warm[i - cfg.restarts].amplitudes().to_vec()
        };
        ascend(delta, dim_f, start, cfg)
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<Result<Ascent>> = {
        use rayon::prelude::*;
        (0..total).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<Result<Ascent>> = (0..total).map(run).collect();
    let runs: Vec<Ascent> = runs.into_iter().collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let restart_values: Vec<f64> = runs.iter().map(|r| r.value).collect();
    let b = &runs[best];
    Ok(DiamondEstimate {
        value: b.value,
        witness: PureState::normalized(b.psi.clone())?,
        dim_f,
        restarts: total,
        iterations: b.iterations,
        seed: cfg.seed,
        converged: b.converged,
        monotone: runs.iter().all(|r| r.monotone),
        spread: top_quartile_spread(&restart_values, true),
        restart_values,
    })
}

/// Dense search over Schmidt-parametrized pure states on `C² ⊗ C²`, then
/// polished by the ascent. Test oracle for qubit channels.
pub fn diamond_distance_exhaustive(phi1: &dyn ChannelMap, phi2: &dyn ChannelMap, resolution: usize) -> Result<f64> {
    check_pair(phi1, phi2)?;
    if phi1.dim_in() != 2 {
        return Err(Error::Parameter("the exhaustive search only handles qubit inputs".into()));
    }
    if resolution < 2 {
        return Err(Error::Parameter("grid resolution must be at least 2".into()));
    }
    let delta = phi1.superoperator().difference(&phi2.superoperator())?;
    let r = resolution;
    let mut scored: Vec<(f64, PureState)> = Vec::with_capacity(r * r * r);
    for a in 0..r {
        let lambda = a as f64 / (r - 1) as f64;
        for b in 0..r {
            let theta = std::f64::consts::PI * b as f64 / (r - 1) as f64;
            for c in 0..r {
                let phi = 2.0 * std::f64::consts::PI * c as f64 / r as f64;
                let (s, co) = (0.5 * theta).sin_cos();
                let u0 = [C64::new(co, 0.0), C64::from_polar(s, phi)];
                let u1 = [-u0[1].conj(), u0[0].conj()];
                let (l0, l1) = (lambda.sqrt(), (1.0 - lambda).sqrt());
                // ψ = √λ |u0⟩|0⟩ + √(1−λ) |u1⟩|1⟩, index h·2 + f
                let amps = vec![u0[0] * l0, u1[0] * l1, u0[1] * l0, u1[1] * l1];
                let psi = PureState::normalized(amps)?;
                scored.push((evaluate_difference(&delta, &psi, 2)?, psi));
            }
        }
    }
    scored.sort_by(|x, y| y.0.total_cmp(&x.0));
    let grid_best = scored[0].0;
    let cfg = DiamondConfig { dim_f: Some(2), ..DiamondConfig::default() };
    let mut best = grid_best;
    for (_, psi) in scored.iter().take(8) {
        best = best.max(ascend(&delta, 2, psi.amplitudes().to_vec(), &cfg)?.value);
    }
    Ok(best)
}

/// Verdict for the promise problem "distance ≥ a" (yes) versus "distance ≤ b" (no).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub a: f64,
    pub b: f64,
    pub verdict: Verdict,
    /// `certified-lower` backs a yes, `consensus` backs a no.
    pub evidence: Option<Method>,
}

pub fn classify(certified_lower: f64, consensus: f64, a: f64, b: f64) -> Result<Classification> {
    if !(0.0 <= b && b < a && a <= 2.0) {
        return Err(Error::Parameter(format!("thresholds need 0 ≤ b < a ≤ 2, got a = {a}, b = {b}")));
    }
    let (verdict, evidence) = if certified_lower >= a {
        (Verdict::Yes, Some(Method::CertifiedLower))
    } else if consensus <= b {
        (Verdict::No, Some(Method::Consensus))
    } else {
        (Verdict::Undecided, None)
    };
    Ok(Classification { a, b, verdict, evidence })
}

#[derive(Clone, Debug, Serialize)]
pub struct ReductionReport {
    pub m: usize,
    pub epsilon: f64,
    pub source_distance: f64,
    pub source_spread: f64,
    /// `‖(C₁ − C₂)(|0⟩⟨0| ⊗ ψ_Q)‖₁` at the source witness: certified.
    pub compiled_at_source_witness: f64,
    /// Best certified value over all ancilla blocks.
    pub compiled_distance: f64,
    pub compiled_spread: f64,
    /// Per ancilla basis index `k`.
    pub block_values: Vec<f64>,
    pub slack: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
    pub pass: bool,
    pub restarts: usize,
    pub seed: u64,
    pub classification: Option<Classification>,
}

/// Largest register (with reference) simulated per ancilla block.
const REDUCTION_MAX_REGISTER: usize = 256;

/// Appends unused ancillas (also traced) until the circuit has `m`.
pub fn pad_ancillas(q: &Circuit, m: usize) -> Result<Circuit> {
    if q.ancilla.len() > m {
        return Err(Error::Parameter(format!("circuit already has {} ancillas, more than m = {m}", q.ancilla.len())));
    }
    let extra = m - q.ancilla.len();
    let mut p = q.clone();
    for i in 0..extra {
        let qubit = q.n_qubits + i;
        p.ancilla.push(qubit);
        p.traced.push(qubit);
    }
    p.n_qubits += extra;
    p.validate()?;
    Ok(p)
}

/// `C(|k⟩⟨k| ⊗ ·)` as a superoperator on the data qubits.
fn block_superoperator(c: &Circuit, k: usize) -> Result<Superoperator> {
    let m = c.ancilla.len();
    let n = c.n_qubits - m;
    let dh = 1usize << n;
    let dout = 1usize << c.n_qubits;
    let ka = ComplexMatrix::unit(1 << m, k, k);
    let mut s = ComplexMatrix::zeros(dout * dout, dh * dh);
    for i in 0..dh {
        for j in 0..dh {
            let x = assemble_input(c.n_qubits, &c.ancilla, &ka, &ComplexMatrix::unit(dh, i, j), 1)?;
            let out = simulate_matrix(c, &x, 1)?;
            for (r, z) in out.as_slice().iter().enumerate() {
                s[(r, i * dh + j)] = *z;
            }
        }
    }
    Superoperator::new(dh, dout, s)
}

fn largest_feasible_m(n: usize) -> usize {
    // register 2^(m+n) times reference 2^n
    let cap = REDUCTION_MAX_REGISTER.trailing_zeros() as usize;
    cap.saturating_sub(2 * n)
}

/// Compiles both circuits with `m` ancillas and compares `‖C₁ − C₂‖⋄` with
/// `‖Q₁ − Q₂‖⋄` and `‖Q₁ − Q₂‖⋄ + 2^{−(m−3)}`.
///
/// The compiled circuits start by dephasing their ancillas, so the compiled
/// difference splits into one block per ancilla basis state and its diamond
/// norm is the largest block norm; each block is estimated separately.
pub fn verify_distinguishability_reduction(
    q1: &Circuit,
    q2: &Circuit,
    m: usize,
    cfg: &DiamondConfig,
    thresholds: Option<(f64, f64)>,
) -> Result<ReductionReport> {
    if m == 0 {
        return Err(Error::Parameter("m must be at least 1".into()));
    }
    let p1 = pad_ancillas(q1, m)?;
    let p2 = pad_ancillas(q2, m)?;
    if p1.n_qubits != p2.n_qubits || p1.output_qubits().len() != p2.output_qubits().len() {
        return crate::error::dim_err("the two circuits have different shapes after padding");
    }
    let n = p1.n_qubits - m;
    if (1usize << (p1.n_qubits + n)) > REDUCTION_MAX_REGISTER {
        return Err(Error::Regime(format!(
            "m = {m} with {n} data qubits exceeds the simulation budget; the largest feasible m is {}",
            largest_feasible_m(n)
        )));
    }
    check_pair(&p1, &p2)?;
    let q_est = diamond_distance(&p1, &p2, cfg)?;

    let (c1, _) = compile_approximation(&p1)?;
    let (c2, _) = compile_approximation(&p2)?;
    let mut block_values = Vec::with_capacity(1 << m);
    let mut spread: f64 = 0.0;
    let mut at_witness = 0.0;
    for k in 0..1usize << m {
        let delta = block_superoperator(&c1, k)?.difference(&block_superoperator(&c2, k)?)?;
        let warm = if k == 0 { vec![q_est.witness.clone()] } else { Vec::new() };
        if k == 0 {
            at_witness = evaluate_difference(&delta, &q_est.witness, q_est.dim_f)?;
        }
        let bcfg = DiamondConfig { dim_f: Some(q_est.dim_f), ..cfg.clone() };
        let est = diamond_of_difference(&delta, &bcfg, &warm)?;
        spread = spread.max(est.spread);
        block_values.push(est.value);
    }
    let compiled = block_values.iter().cloned().fold(0.0, f64::max).max(at_witness);
    let epsilon = 2f64.powi(3 - m as i32);
    let slack = 1e-6 + spread.max(q_est.spread);
    let lower_holds = at_witness >= q_est.value - 1e-6;
    let upper_holds = compiled <= (q_est.value + epsilon).min(2.0) + slack;
    let classification = thresholds.map(|(a, b)| classify(compiled, compiled, a, b)).transpose()?;
    Ok(ReductionReport {
        m,
        epsilon,
        source_distance: q_est.value,
        source_spread: q_est.spread,
        compiled_at_source_witness: at_witness,
        compiled_distance: compiled,
        compiled_spread: spread,
        block_values,
        slack,
        lower_holds,
        upper_holds,
        pass: lower_holds && upper_holds,
        restarts: cfg.restarts,
        seed: cfg.seed,
        classification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{KrausChannel, RandomUnitaryChannel};
    use crate::circuits::{cnot, pauli_x, Gate};
    use crate::numerics::{ONE, ZERO};
    use crate::sampling::random_kraus;

    fn x_channel() -> RandomUnitaryChannel {
        RandomUnitaryChannel::unitary(pauli_x())
    }

    fn dephasing() -> KrausChannel {
        KrausChannel::new(vec![ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)]).unwrap()
    }

    fn small() -> DiamondConfig {
        DiamondConfig::new(8, 0)
    }

    #[test]
    fn identical_channels_are_at_distance_zero() {
        let id = KrausChannel::identity(2);
        assert!(diamond_distance(&id, &id, &small()).unwrap().value < 1e-12);
        assert!(diamond_distance_exhaustive(&id, &id, 5).unwrap() < 1e-12);
    }

    #[test]
    fn identity_versus_flip() {
        let id = KrausChannel::identity(2);
        let e = diamond_distance(&id, &x_channel(), &small()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-8);
        let delta = id.superoperator().difference(&x_channel().superoperator()).unwrap();
        assert!((evaluate_difference(&delta, &e.witness, 2).unwrap() - e.value).abs() < 1e-8);
        assert!((diamond_distance_exhaustive(&id, &x_channel(), 9).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn identity_versus_dephasing() {
        let id = KrausChannel::identity(2);
        let e = diamond_distance(&id, &dephasing(), &DiamondConfig::default()).unwrap();
        assert!(e.value >= 1.0 - 1e-8 && e.value <= 1.0 + 1e-6, "{}", e.value);
        assert!(e.monotone);
        let bell = PureState::normalized(vec![ONE, ZERO, ZERO, ONE]).unwrap();
        let delta = id.superoperator().difference(&dephasing().superoperator()).unwrap();
        assert!((evaluate_difference(&delta, &bell, 2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_must_be_large_enough() {
        let id = KrausChannel::identity(2);
        let cfg = DiamondConfig { dim_f: Some(1), ..small() };
        assert!(matches!(diamond_distance(&id, &dephasing(), &cfg), Err(Error::Parameter(_))));
    }

    #[test]
    fn estimator_agrees_with_grid_oracle() {
        let mut rng = seeded_rng(80, 0);
        for _ in 0..4 {
            let a = KrausChannel::new(random_kraus(2, 2, 2, &mut rng)).unwrap();
            let b = KrausChannel::new(random_kraus(2, 2, 3, &mut rng)).unwrap();
            let est = diamond_distance(&a, &b, &DiamondConfig::new(16, 1)).unwrap().value;
            let grid = diamond_distance_exhaustive(&a, &b, 13).unwrap();
            assert!((est - grid).abs() < 1e-4, "{est} vs {grid}");
            let rev = diamond_distance(&b, &a, &DiamondConfig::new(16, 1)).unwrap().value;
            assert!((est - rev).abs() < 1e-8);
        }
    }

    #[test]
    fn classification_uses_evidence() {
        let c = classify(1.2, 1.3, 1.0, 0.5).unwrap();
        assert_eq!(c.verdict, Verdict::Yes);
        assert_eq!(c.evidence, Some(Method::CertifiedLower));
        assert_eq!(classify(0.2, 0.3, 1.0, 0.5).unwrap().verdict, Verdict::No);
        assert_eq!(classify(0.7, 0.7, 1.0, 0.5).unwrap().verdict, Verdict::Undecided);
        assert!(classify(0.0, 0.0, 0.5, 1.0).is_err());
    }

    fn identity_circuit() -> Circuit {
        Circuit::new(1, vec![], vec![], vec![]).unwrap()
    }

    fn flip_circuit() -> Circuit {
        Circuit::new(1, vec![], vec![], vec![Gate::unitary(vec![0], pauli_x()).unwrap()]).unwrap()
    }

    fn dephasing_circuit() -> Circuit {
        Circuit::new(2, vec![1], vec![1], vec![Gate::unitary(vec![0, 1], cnot()).unwrap()]).unwrap()
    }

    #[test]
    fn block_reduction_matches_direct_estimate() {
        // m = 2 keeps the full compiled register small enough to estimate directly
        let p1 = pad_ancillas(&identity_circuit(), 2).unwrap();
        let p2 = pad_ancillas(&dephasing_circuit(), 2).unwrap();
        let (c1, _) = compile_approximation(&p1).unwrap();
        let (c2, _) = compile_approximation(&p2).unwrap();
        let direct = diamond_distance(&c1, &c2, &DiamondConfig::new(6, 3)).unwrap().value;
        let r = verify_distinguishability_reduction(&identity_circuit(), &dephasing_circuit(), 2, &small(), None).unwrap();
        assert!((direct - r.compiled_distance).abs() < 1e-4, "{direct} vs {}", r.compiled_distance);
        assert!(r.pass);
    }

    #[test]
    fn reduction_flags_oversized_instances() {
        let e = verify_distinguishability_reduction(&identity_circuit(), &flip_circuit(), 9, &small(), None);
        match e {
            Err(Error::Regime(msg)) => assert!(msg.contains("largest feasible m is 6"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reduction_on_flip() {
        let r = verify_distinguishability_reduction(&identity_circuit(), &flip_circuit(), 3, &small(), Some((1.5, 0.5))).unwrap();
        assert!((r.source_distance - 2.0).abs() < 1e-6);
        assert!((r.compiled_distance - 2.0).abs() < 1e-6);
        assert!(r.pass);
        assert_eq!(r.classification.unwrap().verdict, Verdict::Yes);
    }
}
