//! End-to-end check suite: every bound the library claims, measured on seeded
//! instances and reported with the kind of evidence behind each number.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::approximation::{
    build_approximation, embedding_dilation, from_dilation, perp_mixing_distance, random_perp_state, simulation_residual, BuildMode,
};
use crate::channels::{action_residual, apply, validate_cptp, Channel, ChannelMap, KrausChannel, RandomUnitaryChannel};
use crate::circuits::{ancilla_mixing_distance, check_mixing_closed_form, cnot, compile_approximation, hadamard, pauli_x, Circuit, Gate};
use crate::diamond::{verify_distinguishability_reduction, DiamondConfig};
use crate::error::{Error, Result};
use crate::metrics::{
    additivity_gap, entropy, entropy_change, min_output_entropy, multiplicativity_gap, noise_contraction, verify_entropy_sandwich,
    verify_pnorm_sandwich, Method,
};
use crate::numerics::{ComplexMatrix, UnitaryMatrix};
use crate::sampling::{random_density, random_kraus, random_unitary, seeded_rng};
use crate::standard_channels::depolarizing_channel;

pub const CHECK_NAMES: [&str; 9] = [
    "approximation-exactness",
    "perp-mixing",
    "mixing-entropy",
    "pnorm-sandwich",
    "entropy-sandwich",
    "ancilla-mixing",
    "distinguishability-reduction",
    "properties",
    "gaps",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Ancilla dimensions (or ancilla qubit counts for circuit checks).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Schatten indices; `"inf"` is accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<PIndex>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PIndex(pub f64);

impl Serialize for PIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(PIndex(x)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(PIndex(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("p must be a number or \"inf\", got {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyManifest {
    pub checks: Vec<CheckSpec>,
}

impl VerifyManifest {
    /// Every check with its default budget.
    pub fn full() -> Self {
        Self { checks: CHECK_NAMES.iter().map(|n| CheckSpec { name: n.to_string(), ..CheckSpec::default() }).collect() }
    }

    pub fn only(names: &[&str]) -> Result<Self> {
        let m = Self { checks: names.iter().map(|n| CheckSpec { name: n.to_string(), ..CheckSpec::default() }).collect() };
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: VerifyManifest = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.checks.iter().enumerate() {
            if !CHECK_NAMES.contains(&c.name.as_str()) {
                return Err(Error::Structural(format!(
                    "checks[{i}].name: unknown check {:?}; known checks are {}",
                    c.name,
                    CHECK_NAMES.join(", ")
                )));
            }
            if c.samples == Some(0) || c.restarts == Some(0) {
                return Err(Error::Parameter(format!("checks[{i}]: samples and restarts must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Clone, Debug, Serialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub tolerance: f64,
    pub method: Method,
    pub holds: bool,
}

impl Measurement {
    fn new(label: impl Into<String>, value: f64, relation: Relation, bound: f64, tolerance: f64, method: Method) -> Self {
        let holds = match relation {
            Relation::AtMost => value <= bound + tolerance,
            Relation::AtLeast => value >= bound - tolerance,
            Relation::Equal => (value - bound).abs() <= tolerance,
        };
        Self { label: label.into(), value, relation, bound, tolerance, method, holds }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub seed: u64,
    pub measurements: Vec<Measurement>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckOutcome {
    /// The measurement with the given label.
    pub fn get(&self, label: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.label == label)
    }

    /// The least favourable measurement among those whose label starts with `prefix`.
    pub fn worst(&self, prefix: &str) -> Option<&Measurement> {
        self.measurements.iter().filter(|m| m.label.starts_with(prefix)).max_by(|a, b| {
            let gap = |m: &Measurement| match m.relation {
                Relation::AtMost => m.value - m.bound,
                Relation::AtLeast => m.bound - m.value,
                Relation::Equal => (m.value - m.bound).abs(),
            };
            gap(a).total_cmp(&gap(b))
        })
    }
}

/// Wall-clock data, kept apart so reports compare byte-for-byte without it.
#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub generated_unix_seconds: u64,
    pub runtime_ms: BTreeMap<String, u128>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub pass: bool,
    pub checks: Vec<CheckOutcome>,
    pub timestamp: Timing,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// JSON without the timestamp object.
    pub fn comparable_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(o) = v.as_object_mut() {
            o.remove("timestamp");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

pub fn run_verify(manifest: &VerifyManifest) -> Result<SuiteReport> {
    manifest.validate()?;
    let mut checks = Vec::with_capacity(manifest.checks.len());
    let mut runtime_ms = BTreeMap::new();
    for spec in &manifest.checks {
        let start = Instant::now();
        let outcome = run_check(spec)?;
        runtime_ms.insert(spec.name.clone(), start.elapsed().as_millis());
        checks.push(outcome);
    }
    let generated_unix_seconds = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(SuiteReport { pass: checks.iter().all(|c| c.pass), checks, timestamp: Timing { generated_unix_seconds, runtime_ms } })
}

pub fn run_check(spec: &CheckSpec) -> Result<CheckOutcome> {
    let seed = spec.seed.unwrap_or(0);
    let (measurements, notes) = match spec.name.as_str() {
        "approximation-exactness" => approximation_exactness(spec, seed)?,
        "perp-mixing" => perp_mixing(spec, seed)?,
        "mixing-entropy" => mixing_entropy(spec, seed)?,
        "pnorm-sandwich" => pnorm_sandwich(spec, seed)?,
        "entropy-sandwich" => entropy_sandwich(spec, seed)?,
        "ancilla-mixing" => ancilla_mixing(spec, seed)?,
        "distinguishability-reduction" => reduction(spec, seed)?,
        "properties" => properties(spec, seed)?,
        "gaps" => gaps(spec, seed)?,
        other => return Err(Error::Structural(format!("unknown check {other:?}"))),
    };
    Ok(CheckOutcome { name: spec.name.clone(), pass: measurements.iter().all(|m| m.holds), seed, measurements, notes })
}

type Measured = (Vec<Measurement>, Vec<String>);

fn random_channel(din: usize, dout: usize, n: usize, rng: &mut impl rand::Rng) -> Result<Channel> {
    Ok(KrausChannel::new(random_kraus(din, dout, n, rng))?.into())
}

/// Hadamard conjugation, complete dephasing and complete depolarization of a qubit.
pub fn qubit_fixtures() -> Vec<(&'static str, Channel)> {
    let dephasing = KrausChannel::new(vec![ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)]).expect("projectors form a channel");
    vec![
        ("unitary", RandomUnitaryChannel::unitary(hadamard()).into()),
        ("dephasing", dephasing.into()),
        ("depolarizing", depolarizing_channel(2).expect("d = 2").into()),
    ]
}

fn approximation_exactness(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let dims = spec.dims.clone().unwrap_or_else(|| vec![2, 4, 8]);
    let samples = spec.samples.unwrap_or(20);
    let mut out = Vec::new();
    for &da in &dims {
        let mut rng = seeded_rng(seed, da as u64);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let phi = random_channel(2, 2, 2, &mut rng)?;
            let ac = build_approximation(&phi, da)?;
            for _ in 0..3 {
                let sigma = random_density(2, &mut rng);
                worst = worst.max(simulation_residual(&ac, &sigma)?);
            }
        }
        out.push(Measurement::new(format!("residual dim_A={da}"), worst, Relation::AtMost, 1e-10, 0.0, Method::Exact));
    }
    Ok((out, Vec::new()))
}

fn perp_mixing(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let dims = spec.dims.clone().unwrap_or_else(|| vec![2, 4, 8]);
    let samples = spec.samples.unwrap_or(10);
    let mut out = Vec::new();
    for &d in &dims {
        let mut rng = seeded_rng(seed, d as u64);
        let bound = 2.0 / d as f64;
        let phi = random_channel(2, 2, 2, &mut rng)?;
        let ac = build_approximation(&phi, d)?;
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let rho = random_perp_state(ac.split(), &mut rng);
            worst = worst.max(perp_mixing_distance(&ac, &rho)?);
        }
        out.push(Measurement::new(format!("random d={d}"), worst, Relation::AtMost, bound, 1e-9, Method::Exact));
        let fixture = from_dilation(embedding_dilation(d, 2)?, BuildMode::Symbolic)?;
        let rho = random_perp_state(fixture.split(), &mut rng);
        let tight = perp_mixing_distance(&fixture, &rho)?;
        out.push(Measurement::new(format!("embedding d={d}"), tight, Relation::Equal, bound, 1e-9, Method::Exact));
    }
    Ok((out, Vec::new()))
}

fn mixing_entropy(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let dims = spec.dims.clone().unwrap_or_else(|| vec![8]);
    let samples = spec.samples.unwrap_or(10);
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for &da in &dims {
        let mut rng = seeded_rng(seed, da as u64);
        let phi = random_channel(2, 2, 2, &mut rng)?;
        let ac = build_approximation(&phi, da)?;
        let m = ac.m();
        if m < 3.0 || da < ac.dim_h() {
            notes.push(format!("dim_A={da} lies outside the regime log₂ dim_A ≥ 3, dim_A ≥ dim_H"));
        }
        let bound = ((da * ac.dim_h()) as f64).log2() - m / 2f64.powf(m - 3.0);
        let mut least = f64::INFINITY;
        for _ in 0..samples {
            let rho = random_perp_state(ac.split(), &mut rng);
            least = least.min(entropy(&apply(&ac, &rho)?)?);
        }
        out.push(Measurement::new(format!("entropy dim_A={da}"), least, Relation::AtLeast, bound, 1e-8, Method::Exact));
    }
    Ok((out, notes))
}

fn p_list(spec: &CheckSpec) -> Vec<f64> {
    spec.p.as_ref().map(|v| v.iter().map(|p| p.0).collect()).unwrap_or_else(|| vec![1.0, 2.0, f64::INFINITY])
}

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn pnorm_sandwich(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let dims = spec.dims.clone().unwrap_or_else(|| vec![4, 8]);
    let restarts = spec.restarts.unwrap_or(32);
    let mut out = Vec::new();
    for (name, phi) in qubit_fixtures() {
        for &da in &dims {
            let ac = build_approximation(&phi, da)?;
            for p in p_list(spec) {
                let r = verify_pnorm_sandwich(&phi, &ac, p, restarts, seed)?;
                let tag = format!("{name} dim_A={da} p={}", p_label(p));
                let norm = r.middle.value;
                out.push(Measurement::new(
                    format!("lower {tag}"),
                    norm,
                    Relation::AtLeast,
                    r.original.value,
                    r.slack,
                    Method::CertifiedLower,
                ));
                out.push(Measurement::new(format!("upper {tag}"), norm, Relation::AtMost, r.bound.value, r.slack, Method::Consensus));
                let spread = r.spread_original.max(r.spread_approx);
                out.push(Measurement::new(format!("spread {tag}"), spread, Relation::AtMost, 1e-4, 0.0, Method::Consensus));
            }
        }
    }
    Ok((out, Vec::new()))
}

fn entropy_sandwich(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let dims = spec.dims.clone().unwrap_or_else(|| vec![8]);
    let restarts = spec.restarts.unwrap_or(32);
    let mut out = Vec::new();
    let mut notes = Vec::new();
    for (name, phi) in qubit_fixtures() {
        for &da in &dims {
            let ac = build_approximation(&phi, da)?;
            let r = verify_entropy_sandwich(&phi, &ac, restarts, seed)?;
            if !r.in_regime {
                notes.push(format!("{name} dim_A={da}: outside the bound regime"));
            }
            let tag = format!("{name} dim_A={da}");
            let mid = r.middle.value;
            out.push(Measurement::new(format!("upper {tag}"), mid, Relation::AtMost, r.original.value, r.slack, Method::CertifiedUpper));
            out.push(Measurement::new(format!("lower {tag}"), mid, Relation::AtLeast, r.bound.value, r.slack, Method::Consensus));
        }
    }
    Ok((out, notes))
}

/// Source circuit for the mixing checks: a random two-qubit gate between the data
/// qubit and the last ancilla, then a CNOT back.
fn mixing_source(m: usize, rng: &mut impl rand::Rng) -> Result<Circuit> {
    let u = UnitaryMatrix::new(random_unitary(4, rng).matrix().clone())?;
    Circuit::new(m + 1, (0..m).collect(), vec![], vec![Gate::unitary(vec![m, m - 1], u)?, Gate::unitary(vec![m - 1, m], cnot())?])
}

fn ancilla_mixing(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let ms = spec.dims.clone().unwrap_or_else(|| vec![2, 3]);
    let mut out = Vec::new();
    for &m in &ms {
        if m < 1 {
            return Err(Error::Parameter("ancilla-mixing needs m ≥ 1".into()));
        }
        let mut rng = seeded_rng(seed, m as u64);
        let bound = 1.0 / 2f64.powi(m as i32 - 1);
        let (c, _) = compile_approximation(&mixing_source(m, &mut rng)?)?;
        let mut worst = 0.0f64;
        let mut closed = 0.0f64;
        for f_qubits in [1usize, 2] {
            let dim_f = 1 << f_qubits;
            for k in 1..1usize << m {
                let rho = random_density(2 * dim_f, &mut rng);
                worst = worst.max(ancilla_mixing_distance(&c, k, &rho, dim_f)?);
                closed = closed.max(check_mixing_closed_form(m, 1, k, &rho, dim_f)?);
            }
        }
        out.push(Measurement::new(format!("distance m={m}"), worst, Relation::AtMost, bound, 1e-9, Method::Exact));
        out.push(Measurement::new(format!("closed form m={m}"), closed, Relation::AtMost, 1e-10, 0.0, Method::Exact));
        let id = Circuit::new(m + 1, (0..m).collect(), vec![], vec![])?;
        let (cid, _) = compile_approximation(&id)?;
        let rho = random_density(2, &mut rng);
        let tight = ancilla_mixing_distance(&cid, 1, &rho, 1)?;
        out.push(Measurement::new(format!("identity m={m}"), tight, Relation::Equal, bound, 1e-9, Method::Exact));
    }
    Ok((out, Vec::new()))
}

pub fn identity_circuit() -> Circuit {
    Circuit::new(1, vec![], vec![], vec![]).expect("valid circuit")
}

pub fn flip_circuit() -> Circuit {
    Circuit::new(1, vec![], vec![], vec![Gate::unitary(vec![0], pauli_x()).expect("1-qubit gate")]).expect("valid circuit")
}

/// CNOT onto a fresh ancilla that is then discarded.
pub fn dephasing_circuit() -> Circuit {
    Circuit::new(2, vec![1], vec![1], vec![Gate::unitary(vec![0, 1], cnot()).expect("2-qubit gate")]).expect("valid circuit")
}

fn reduction(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let m = spec.dims.as_ref().and_then(|d| d.first().copied()).unwrap_or(4);
    let cfg = DiamondConfig::new(spec.restarts.unwrap_or(16), seed);
    let mut out = Vec::new();
    let mut notes = Vec::new();
    let eps = 2f64.powi(3 - m as i32);

    let r = verify_distinguishability_reduction(&identity_circuit(), &flip_circuit(), m, &cfg, None)?;
    out.push(Measurement::new("flip source", r.source_distance, Relation::Equal, 2.0, 1e-6, Method::CertifiedLower));
    out.push(Measurement::new("flip compiled", r.compiled_distance, Relation::Equal, 2.0, 1e-6, Method::CertifiedLower));

    let r = verify_distinguishability_reduction(&identity_circuit(), &dephasing_circuit(), m, &cfg, None)?;
    out.push(Measurement::new("dephasing lower", r.compiled_at_source_witness, Relation::AtLeast, 1.0, 1e-6, Method::CertifiedLower));
    out.push(Measurement::new("dephasing upper", r.compiled_distance, Relation::AtMost, 1.0 + eps, 1e-3, Method::Consensus));
    notes.push(format!("dephasing: source {:.9}, compiled {:.9}", r.source_distance, r.compiled_distance));

    let r = verify_distinguishability_reduction(&identity_circuit(), &identity_circuit(), m, &cfg, None)?;
    out.push(Measurement::new("identical upper", r.compiled_distance, Relation::AtMost, eps, 1e-3, Method::Consensus));
    Ok((out, notes))
}

fn properties(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let samples = spec.samples.unwrap_or(100);
    let mut rng = seeded_rng(seed, 0);
    let mut round_trip = 0.0f64;
    let mut invalid = 0usize;
    for i in 0..samples {
        let (din, dout, n) = (2 + i % 2, 2 + (i / 2) % 2, 1 + i % 4);
        let k = KrausChannel::new(random_kraus(din, dout, n, &mut rng))?;
        let ch: Channel = k.clone().into();
        let choi = Channel::from(ch.to_choi()?);
        let back = Channel::from(choi.to_kraus()?);
        let stine = Channel::from(back.to_stinespring()?);
        let again = stine.to_kraus()?;
        round_trip = round_trip.max(action_residual(&k, &choi)?);
        round_trip = round_trip.max(action_residual(&k, &again)?);
        for c in [&ch, &choi, &stine] {
            if !validate_cptp(c)?.pass {
                invalid += 1;
            }
        }
    }
    let mut unital = 0.0f64;
    let mut contraction = 0usize;
    let mut monotone = 0usize;
    for i in 0..samples {
        let d = 2 + i % 3;
        let n = 1 + i % 4;
        let mut w: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(&mut rng, 0.05..1.0)).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let us = (0..n).map(|_| random_unitary(d, &mut rng)).collect();
        let ru = RandomUnitaryChannel::new(w, us)?;
        unital = unital.max(ru.map(&ComplexMatrix::identity(d)).max_abs_diff(&ComplexMatrix::identity(d)));
        let dim_b = 2;
        let rho = random_density(d * dim_b, &mut rng);
        let (after, before) = noise_contraction(&ru, &rho, dim_b)?;
        if after > before + 1e-8 {
            contraction += 1;
        }
        let sigma = random_density(d, &mut rng);
        let (s0, s1) = entropy_change(&ru, &sigma)?;
        if s1 < s0 - 1e-8 {
            monotone += 1;
        }
    }
    let phi = random_channel(3, 3, 2, &mut rng)?;
    let a = min_output_entropy(&phi, 8, seed)?;
    let b = min_output_entropy(&phi, 8, seed)?;
    let same = serde_json::to_string(&a)? == serde_json::to_string(&b)?;
    let out = vec![
        Measurement::new("round trip residual", round_trip, Relation::AtMost, 1e-9, 0.0, Method::Exact),
        Measurement::new("invalid conversions", invalid as f64, Relation::Equal, 0.0, 0.0, Method::Exact),
        Measurement::new("unitality residual", unital, Relation::AtMost, 1e-10, 0.0, Method::Exact),
        Measurement::new("contraction violations", contraction as f64, Relation::Equal, 0.0, 0.0, Method::Exact),
        Measurement::new("entropy decreases", monotone as f64, Relation::Equal, 0.0, 0.0, Method::Exact),
        Measurement::new("determinism mismatches", if same { 0.0 } else { 1.0 }, Relation::Equal, 0.0, 0.0, Method::Exact),
    ];
    Ok((out, Vec::new()))
}

fn gaps(spec: &CheckSpec, seed: u64) -> Result<Measured> {
    let restarts = spec.restarts.unwrap_or(16);
    let fixtures = qubit_fixtures();
    let mut out = Vec::new();
    for (name, phi) in fixtures.iter().filter(|(n, _)| *n != "unitary") {
        let g = additivity_gap(phi, phi, restarts, seed)?;
        out.push(Measurement::new(format!("additivity {name}"), g.gap, Relation::Equal, 0.0, 2e-3, Method::Consensus));
        out.push(Measurement::new(format!("additivity raw {name}"), g.raw_gap, Relation::AtLeast, 0.0, 1e-6, Method::CertifiedLower));
        out.push(Measurement::new(format!("additivity product {name}"), g.product_certificate, Relation::Equal, 0.0, 1e-8, Method::Exact));
        let g = multiplicativity_gap(phi, phi, 2.0, restarts, seed)?;
        out.push(Measurement::new(format!("multiplicativity {name}"), g.gap, Relation::Equal, 0.0, 2e-3, Method::Consensus));
        out.push(Measurement::new(format!("multiplicativity raw {name}"), g.raw_gap, Relation::AtLeast, 0.0, 1e-6, Method::CertifiedLower));
        out.push(Measurement::new(
            format!("multiplicativity product {name}"),
            g.product_certificate,
            Relation::Equal,
            0.0,
            1e-8,
            Method::Exact,
        ));
    }
    Ok((out, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_manifest_passes_trivially() {
        let r = run_verify(&VerifyManifest::default()).unwrap();
        assert!(r.pass && r.checks.is_empty());
    }

    #[test]
    fn unknown_check_is_rejected() {
        let e = VerifyManifest::from_json(r#"{"checks":[{"name":"nope"}]}"#);
        assert!(matches!(e, Err(Error::Structural(_))));
    }

    #[test]
    fn perp_mixing_at_four_is_tight() {
        let spec = CheckSpec { name: "perp-mixing".into(), dims: Some(vec![4]), ..CheckSpec::default() };
        let o = run_check(&spec).unwrap();
        assert!(o.pass);
        let m = o.get("embedding d=4").unwrap();
        assert!((m.value - 0.5).abs() < 1e-9 && m.bound == 0.5);
    }

    #[test]
    fn p_index_parses_inf() {
        let s: CheckSpec = serde_json::from_str(r#"{"name":"pnorm-sandwich","p":[2,"inf"]}"#).unwrap();
        assert_eq!(s.p.unwrap()[1].0, f64::INFINITY);
    }
}
