use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_channel-forge"));
    c.env_remove("CHANNEL_FORGE_THREADS");
    c
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_rejects_malformed_and_non_cptp_channels() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"kind":"kraus","foo":1}"#).unwrap();
    let o = run(&["validate", s(&unknown)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown.json"));

    // a single Kraus operator |0><0| loses trace on |1>
    let lossy = dir.path().join("lossy.json");
    std::fs::write(&lossy, r#"{"kind":"kraus","dim_in":2,"dim_out":2,"kraus_ops":[[[[1,0],[0,0]],[[0,0],[0,0]]]]}"#).unwrap();
    let o = run(&["validate", s(&lossy)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("trace_preservation"));
}

#[test]
fn approximation_output_validates() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    let ac = dir.path().join("ac.json");
    let summary = dir.path().join("summary.json");
    assert_eq!(code(&run(&["make-channel", "--kind", "random", "--dim", "2", "--kraus", "2", "--seed", "3", "--out", s(&phi)])), 0);
    assert_eq!(code(&run(&["approximate", "--in", s(&phi), "--dim-a", "4", "--out", s(&ac), "--summary", s(&summary)])), 0);
    let o = run(&["validate", s(&ac)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let sum = json_file(&summary);
    assert_eq!(sum["dim_A"], 4);
    assert_eq!(json_file(&ac)["kind"], "random_unitary");
}

#[test]
fn conversions_stay_valid() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    run(&["make-channel", "--kind", "depolarizing", "--dim", "3", "--out", s(&phi)]);
    for to in ["choi", "stinespring", "kraus"] {
        let out = dir.path().join(format!("{to}.json"));
        assert_eq!(code(&run(&["convert", "--in", s(&phi), "--to", to, "--out", s(&out)])), 0);
        assert_eq!(code(&run(&["validate", s(&out)])), 0, "{to}");
    }
}

#[test]
fn dephasing_circuit_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let once = dir.path().join("once.json");
    let twice = dir.path().join("twice.json");
    let circuit = data("dephasing_circuit.json");
    assert_eq!(code(&run(&["simulate", "--circuit", s(&circuit), "--state", s(&data("plus.json")), "--out", s(&once)])), 0);
    assert_eq!(code(&run(&["simulate", "--circuit", s(&circuit), "--state", s(&once), "--out", s(&twice)])), 0);
    let (a, b) = (json_file(&once), json_file(&twice));
    let flat = |v: &Value| -> Vec<f64> {
        v.as_array()
            .unwrap()
            .iter()
            .flat_map(|r| r.as_array().unwrap().iter().flat_map(|z| z.as_array().unwrap().iter().map(|x| x.as_f64().unwrap())))
            .collect()
    };
    let (fa, fb) = (flat(&a), flat(&b));
    assert_eq!(fa.len(), 8);
    for (x, y) in fa.iter().zip(&fb) {
        assert!((x - y).abs() < 1e-12);
    }
    // coherences are gone
    assert!(fa[2].abs() < 1e-12 && fa[3].abs() < 1e-12);
}

#[test]
fn json_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let phi = dir.path().join("phi.json");
    run(&["make-channel", "--kind", "random", "--dim", "2", "--kraus", "3", "--seed", "11", "--out", s(&phi)]);
    let go = || run(&["entropy-min", "--in", s(&phi), "--restarts", "8", "--seed", "5", "--json"]).stdout;
    let first = go();
    assert_eq!(first, go());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["method"], "certified-upper");
    assert_eq!(v["restarts"], 8);

    let env_run = bin()
        .env("CHANNEL_FORGE_THREADS", "1")
        .args(["entropy-min", "--in", s(&phi), "--restarts", "8", "--seed", "5", "--json"])
        .output()
        .unwrap();
    assert_eq!(env_run.stdout, first);
}

#[test]
fn diamond_distance_of_identity_and_dephasing() {
    let dir = tempfile::tempdir().unwrap();
    let (id, deph) = (dir.path().join("id.json"), dir.path().join("deph.json"));
    run(&["make-channel", "--kind", "identity", "--dim", "2", "--out", s(&id)]);
    run(&["make-channel", "--kind", "dephasing", "--dim", "2", "--out", s(&deph)]);
    let o = run(&["diamond-dist", "--a", s(&id), "--b", s(&deph), "--restarts", "8", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["method"], "certified-lower");
}

#[test]
fn trace_distance_accepts_pure_and_mixed_states() {
    let o = run(&["trace-dist", "--a", s(&data("plus.json")), "--b", s(&data("zero.json")), "--json"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["trace_distance"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn compile_report_counts_gates() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = (dir.path().join("c.json"), dir.path().join("r.json"));
    let o = run(&["compile-circuit", "--in", s(&data("dephasing_circuit.json")), "--out", s(&out), "--report", s(&report)]);
    assert_eq!(code(&o), 0);
    let r = json_file(&report);
    assert_eq!(r["total_gates"], r["expected_total"]);
    assert_eq!(json_file(&out)["ancilla_as_input"], true);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["pnorm-max", "--in", "x.json", "--p", "0.5"])), 2);
    assert_eq!(code(&run(&["verify", "--check", "no-such-check"])), 2);
    assert_eq!(code(&run(&["validate", "/definitely/missing.json"])), 2);
    assert_eq!(code(&run(&["make-channel", "--kind", "random", "--dim", "4", "--kraus", "1", "--dim-out", "2"])), 2);
    let o = bin().env("CHANNEL_FORGE_THREADS", "zero").args(["verify", "--check", "properties"]).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn resource_limits_exit_three() {
    let (q1, q2) = (data("identity_circuit.json"), data("flip_circuit.json"));
    let o = run(&["verify", "--q1", s(&q1), "--q2", s(&q2), "--m", "7", "--restarts", "2"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("largest feasible m is 6"));
}

#[test]
fn reduction_check_passes_for_flip() {
    let (q1, q2) = (data("identity_circuit.json"), data("flip_circuit.json"));
    let o = run(&["verify", "--q1", s(&q1), "--q2", s(&q2), "--m", "2", "--restarts", "4", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["source_distance"].as_f64().unwrap() - 2.0).abs() < 1e-6);
}

#[test]
fn verify_subset_reports_each_check() {
    let o = run(&["verify", "--check", "properties", "--check", "gaps", "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["properties", "gaps"]);
    assert_eq!(v["pass"], true);
}

#[test]
fn empty_manifest_passes_trivially() {
    let dir = tempfile::tempdir().unwrap();
    let mf = dir.path().join("empty.json");
    std::fs::write(&mf, r#"{"checks":[]}"#).unwrap();
    let o = run(&["verify", "--manifest", s(&mf), "--json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().is_empty());
}

#[test]
fn verify_reports_match_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let mf = dir.path().join("m.json");
    std::fs::write(&mf, r#"{"checks":[{"name":"perp-mixing","dims":[4],"seed":7}]}"#).unwrap();
    let go = || {
        let mut v: Value = serde_json::from_slice(&run(&["verify", "--manifest", s(&mf), "--json"]).stdout).unwrap();
        v.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&v).unwrap()
    };
    let first = go();
    assert_eq!(first, go());
    assert!(first.contains(r#""label":"embedding d=4""#));
}
