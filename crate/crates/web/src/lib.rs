//! Browser bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

use channel_forge::approximation::{build_approximation, simulation_residual};
use channel_forge::channels::{Channel, KrausChannel};
use channel_forge::diamond::{diamond_distance, DiamondConfig};
use channel_forge::metrics::entropy;
use channel_forge::numerics::{ComplexMatrix, DensityMatrix, C64};

fn js_err(e: channel_forge::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Qubit state with Bloch vector (x, y, z), clipped to the unit ball.
fn bloch_state(x: f64, y: f64, z: f64) -> Result<DensityMatrix, JsValue> {
    let r = (x * x + y * y + z * z).sqrt();
    let s = if r > 1.0 { 1.0 / r } else { 1.0 };
    let (x, y, z) = (x * s, y * s, z * s);
    let m = ComplexMatrix::new(
        2,
        2,
        vec![C64::new((1.0 + z) / 2.0, 0.0), C64::new(x / 2.0, -y / 2.0), C64::new(x / 2.0, y / 2.0), C64::new((1.0 - z) / 2.0, 0.0)],
    )
    .map_err(js_err)?;
    DensityMatrix::new(m).map_err(js_err)
}

/// Von Neumann entropy in bits of the qubit state with the given Bloch vector.
#[wasm_bindgen]
pub fn bloch_entropy(x: f64, y: f64, z: f64) -> Result<f64, JsValue> {
    entropy(&bloch_state(x, y, z)?).map_err(js_err)
}

fn pauli(which: &str) -> ComplexMatrix {
    let (o, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let data = match which {
        "x" => vec![o, i, i, o],
        "y" => vec![o, C64::new(0.0, -1.0), C64::new(0.0, 1.0), o],
        _ => vec![i, o, o, -i],
    };
    ComplexMatrix::new(2, 2, data).expect("2x2")
}

/// Qubit noise of strength `p` in [0, 1]: "dephasing" applies Z with
/// probability p, "depolarizing" applies each of X, Y, Z with probability p/3.
fn noisy_qubit(kind: &str, p: f64) -> Result<KrausChannel, JsValue> {
    let p = p.clamp(0.0, 1.0);
    let mut ops = vec![ComplexMatrix::identity(2).scale_real((1.0 - p).sqrt())];
    match kind {
        "dephasing" => ops.push(pauli("z").scale_real(p.sqrt())),
        "depolarizing" => {
            for w in ["x", "y", "z"] {
                ops.push(pauli(w).scale_real((p / 3.0).sqrt()));
            }
        }
        other => return Err(JsValue::from_str(&format!("unknown noise '{other}'"))),
    }
    KrausChannel::new(ops).map_err(js_err)
}

/// Diamond distance between the qubit identity and noise of strength `p`.
#[wasm_bindgen]
pub fn noise_diamond_distance(kind: &str, p: f64, restarts: usize, seed: u64) -> Result<f64, JsValue> {
    let noisy = noisy_qubit(kind, p)?;
    let cfg = DiamondConfig::new(restarts.max(1), seed);
    Ok(diamond_distance(&KrausChannel::identity(2), &noisy, &cfg).map_err(js_err)?.value)
}

/// Builds the random-unitary approximation of qubit noise on an ancilla of
/// dimension `dim_a` and reports its size and how well it simulates the noise
/// on the state with Bloch vector (x, y, z). Returns a JSON object.
#[wasm_bindgen]
pub fn approximation_summary(kind: &str, p: f64, dim_a: usize, x: f64, y: f64, z: f64) -> Result<String, JsValue> {
    let phi: Channel = noisy_qubit(kind, p)?.into();
    let ac = build_approximation(&phi, dim_a).map_err(js_err)?;
    let residual = simulation_residual(&ac, &bloch_state(x, y, z)?).map_err(js_err)?;
    let s = ac.summary();
    Ok(format!(r#"{{"dim_A":{},"dim_B":{},"m":{},"ru_terms":{},"residual":{:e}}}"#, s.dim_a, s.dim_b, s.m, s.ru_terms, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_of_pure_and_mixed() {
        assert!(bloch_entropy(0.0, 0.0, 1.0).unwrap().abs() < 1e-12);
        assert!((bloch_entropy(0.0, 0.0, 0.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dephasing_distance_is_twice_strength() {
        let d = noise_diamond_distance("dephasing", 0.3, 8, 1).unwrap();
        assert!((d - 0.6).abs() < 1e-8);
    }

    #[test]
    fn summary_reports_exact_simulation() {
        let s = approximation_summary("depolarizing", 0.5, 4, 0.3, 0.1, 0.2).unwrap();
        assert!(s.contains(r#""dim_A":4"#));
    }
}
