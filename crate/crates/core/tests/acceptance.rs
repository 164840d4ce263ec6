//! Acceptance suite. Each test runs one check of the verify suite at its default
//! budget and prints a single pass/fail line.

use std::time::{Duration, Instant};

use channel_forge::verify::{run_check, CheckOutcome, CheckSpec};

fn run(criterion: usize, name: &str, limit: Duration) -> CheckOutcome {
    let start = Instant::now();
    let outcome = run_check(&CheckSpec { name: name.into(), ..CheckSpec::default() }).expect("check runs");
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let failed: Vec<String> =
        outcome.measurements.iter().filter(|m| !m.holds).map(|m| format!("{}: {:.3e} vs {:.3e}", m.label, m.value, m.bound)).collect();
    let status = if outcome.pass && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {criterion} [{name}]: {status} ({} measurements, {:.1}s of {}s){}",
        outcome.measurements.len(),
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if failed.is_empty() { String::new() } else { format!(" failing: {}", failed.join("; ")) }
    );
    assert!(outcome.pass, "{name}: {failed:?}");
    assert!(in_time, "{name} took {elapsed:?}, limit {limit:?}");
    outcome
}

#[test]
fn criterion_1_approximation_is_exact_on_embedded_inputs() {
    let o = run(1, "approximation-exactness", Duration::from_secs(10));
    for d in [2, 4, 8] {
        assert!(o.get(&format!("residual dim_A={d}")).unwrap().value < 1e-10);
    }
}

#[test]
fn criterion_2_perp_states_mix_to_within_two_over_d() {
    let o = run(2, "perp-mixing", Duration::from_secs(10));
    for d in [2usize, 4, 8] {
        let tight = o.get(&format!("embedding d={d}")).unwrap();
        assert!((tight.value - 2.0 / d as f64).abs() < 1e-9);
        assert!(o.get(&format!("random d={d}")).unwrap().value <= 2.0 / d as f64 + 1e-9);
    }
}

#[test]
fn criterion_3_perp_outputs_have_high_entropy() {
    let o = run(3, "mixing-entropy", Duration::from_secs(10));
    let m = o.get("entropy dim_A=8").unwrap();
    assert!((m.bound - 1.0).abs() < 1e-12);
    assert!(m.value >= 1.0 - 1e-8);
}

#[test]
fn criterion_4_pnorm_sandwich() {
    let o = run(4, "pnorm-sandwich", Duration::from_secs(120));
    // 3 fixtures x 2 ancilla sizes x 3 values of p, three measurements each
    assert_eq!(o.measurements.len(), 54);
    assert!(o.worst("spread").unwrap().value < 1e-4);
}

#[test]
fn criterion_5_entropy_sandwich() {
    let o = run(5, "entropy-sandwich", Duration::from_secs(120));
    for fixture in ["unitary", "dephasing", "depolarizing"] {
        let lower = o.get(&format!("lower {fixture} dim_A=8")).unwrap();
        let upper = o.get(&format!("upper {fixture} dim_A=8")).unwrap();
        // lower bound is S_min(Φ) − 8·3/8
        assert!((upper.bound - lower.bound - 3.0).abs() < 1e-9);
    }
}

#[test]
fn criterion_6_ancilla_mixing_in_compiled_circuits() {
    let o = run(6, "ancilla-mixing", Duration::from_secs(60));
    for m in [2, 3] {
        assert!(o.get(&format!("closed form m={m}")).unwrap().value < 1e-10);
        let tight = o.get(&format!("identity m={m}")).unwrap();
        assert!((tight.value - 1.0 / f64::powi(2.0, m - 1)).abs() < 1e-9);
    }
}

#[test]
fn criterion_7_distinguishability_survives_compilation() {
    let o = run(7, "distinguishability-reduction", Duration::from_secs(600));
    assert!((o.get("flip source").unwrap().value - 2.0).abs() < 1e-6);
    assert!((o.get("flip compiled").unwrap().value - 2.0).abs() < 1e-6);
    assert!(o.get("dephasing lower").unwrap().value >= 1.0 - 1e-6);
    assert!(o.get("dephasing upper").unwrap().value <= 1.5 + 1e-3);
    assert!(o.get("identical upper").unwrap().value <= 0.5 + 1e-3);
}

#[test]
fn criterion_8_property_suites() {
    let o = run(8, "properties", Duration::from_secs(120));
    assert!(o.get("round trip residual").unwrap().value < 1e-9);
    assert!(o.get("unitality residual").unwrap().value < 1e-10);
    assert_eq!(o.get("determinism mismatches").unwrap().value, 0.0);
}

#[test]
fn criterion_9_gap_probes() {
    let o = run(9, "gaps", Duration::from_secs(300));
    for kind in ["additivity", "multiplicativity"] {
        for fixture in ["dephasing", "depolarizing"] {
            assert!(o.get(&format!("{kind} {fixture}")).unwrap().value.abs() <= 2e-3);
            assert!(o.get(&format!("{kind} raw {fixture}")).unwrap().value >= -1e-6);
        }
    }
}
