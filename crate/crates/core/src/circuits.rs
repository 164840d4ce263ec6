//! Qubit circuits with unitary and probability-½ random-unitary gates, an exact
//! density-matrix simulator, and the compiler that turns a mixed-state circuit
//! into a random-unitary one.

use serde::{Deserialize, Serialize};

use crate::channels::ChannelMap;
use crate::error::{dim_err, Error, Result};
use crate::numerics::{trace_norm, ComplexMatrix, DensityMatrix, UnitaryMatrix, C64, MAX_DIM, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// `ρ ↦ UρU†`
    #[serde(rename = "u")]
    Unitary,
    /// `ρ ↦ ½ρ + ½UρU†`
    #[serde(rename = "ru")]
    RandomUnitary,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub matrix: UnitaryMatrix,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>, matrix: UnitaryMatrix) -> Result<Self> {
        if targets.is_empty() || targets.len() > 2 {
            return Err(Error::Structural(format!("gates act on 1 or 2 qubits, got {}", targets.len())));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return Err(Error::Structural(format!("repeated target qubit {}", targets[0])));
        }
        if matrix.dim() != 1 << targets.len() {
            return Err(Error::Structural(format!(
                "{}-qubit gate needs a {}x{} matrix",
                targets.len(),
                1 << targets.len(),
                1 << targets.len()
            )));
        }
        Ok(Self { kind, targets, matrix })
    }

    pub fn unitary(targets: Vec<usize>, matrix: UnitaryMatrix) -> Result<Self> {
        Self::new(GateKind::Unitary, targets, matrix)
    }

    pub fn random_unitary(targets: Vec<usize>, matrix: UnitaryMatrix) -> Result<Self> {
        Self::new(GateKind::RandomUnitary, targets, matrix)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GateJson {
    kind: GateKind,
    targets: Vec<usize>,
    matrix: ComplexMatrix,
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = GateJson::deserialize(d)?;
        let u = UnitaryMatrix::new(g.matrix).map_err(serde::de::Error::custom)?;
        Gate::new(g.kind, g.targets, u).map_err(serde::de::Error::custom)
    }
}

pub fn pauli_x() -> UnitaryMatrix {
    UnitaryMatrix::from_matrix_unchecked(ComplexMatrix::from_fn(2, 2, |r, c| if r != c { ONE } else { ZERO }))
}

pub fn pauli_z() -> UnitaryMatrix {
    UnitaryMatrix::from_matrix_unchecked(ComplexMatrix::from_real_diag(&[1.0, -1.0]))
}

pub fn hadamard() -> UnitaryMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    UnitaryMatrix::from_matrix_unchecked(ComplexMatrix::from_fn(2, 2, |r, c| C64::new(if r == 1 && c == 1 { -s } else { s }, 0.0)))
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U`, control on the first target.
pub fn controlled(u: &UnitaryMatrix) -> UnitaryMatrix {
    let m = ComplexMatrix::from_fn(4, 4, |r, c| match (r >> 1, c >> 1) {
        (0, 0) => {
            if r == c {
                ONE
            } else {
                ZERO
            }
        }
        (1, 1) => u.matrix()[(r & 1, c & 1)],
        _ => ZERO,
    });
    UnitaryMatrix::from_matrix_unchecked(m)
}

pub fn cnot() -> UnitaryMatrix {
    controlled(&pauli_x())
}

pub fn cz() -> UnitaryMatrix {
    controlled(&pauli_z())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circuit {
    pub n_qubits: usize,
    /// Qubits prepared in `|0⟩` (space `A`).
    #[serde(default)]
    pub ancilla: Vec<usize>,
    /// Qubits discarded at the end (space `B`).
    #[serde(default)]
    pub traced: Vec<usize>,
    pub gates: Vec<Gate>,
    /// When set, ancilla qubits are read from the input like any other qubit.
    #[serde(default)]
    pub ancilla_as_input: bool,
}

impl Circuit {
    pub fn new(n_qubits: usize, ancilla: Vec<usize>, traced: Vec<usize>, gates: Vec<Gate>) -> Result<Self> {
        let c = Self { n_qubits, ancilla, traced, gates, ancilla_as_input: false };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Structural("a circuit needs at least one qubit".into()));
        }
        if self.n_qubits >= usize::BITS as usize || 1usize << self.n_qubits > MAX_DIM {
            return dim_err(format!("{} qubits exceed the dimension cap {MAX_DIM}", self.n_qubits));
        }
        for (name, set) in [("ancilla", &self.ancilla), ("traced", &self.traced)] {
            check_set(name, set, self.n_qubits)?;
        }
        for (i, g) in self.gates.iter().enumerate() {
            if let Some(&t) = g.targets.iter().find(|&&t| t >= self.n_qubits) {
                return Err(Error::Structural(format!("gates[{i}]: target {t} outside {} qubits", self.n_qubits)));
            }
            Gate::new(g.kind, g.targets.clone(), g.matrix.clone()).map_err(|e| Error::Structural(format!("gates[{i}]: {e}")))?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Circuit = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    /// Qubits read from the input state, ascending.
    pub fn input_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|q| self.ancilla_as_input || !self.ancilla.contains(q)).collect()
    }

    /// Qubits present in the output, ascending.
    pub fn output_qubits(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|q| !self.traced.contains(q)).collect()
    }
}

fn check_set(name: &str, set: &[usize], n: usize) -> Result<()> {
    for (i, &q) in set.iter().enumerate() {
        if q >= n {
            return Err(Error::Structural(format!("{name}[{i}]: qubit {q} outside {n} qubits")));
        }
        if set[..i].contains(&q) {
            return Err(Error::Structural(format!("{name}[{i}]: qubit {q} listed twice")));
        }
    }
    Ok(())
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

/// Bit pattern of `value` (big-endian over `qubits`) inside an `n`-qubit index.
fn scatter(qubits: &[usize], value: usize, n: usize) -> usize {
    let t = qubits.len();
    qubits.iter().enumerate().fold(0, |acc, (i, &q)| acc | (((value >> (t - 1 - i)) & 1) << (n - 1 - q)))
}

/// Full-register indices of the `qubits` subsystem with every other qubit at 0,
/// times the reference dimension.
fn index_map(qubits: &[usize], n: usize, dim_f: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity((1 << qubits.len()) * dim_f);
    for v in 0..1usize << qubits.len() {
        let base = scatter(qubits, v, n) * dim_f;
        out.extend((0..dim_f).map(|f| base + f));
    }
    out
}

/// In-place `M ← (U on targets) M` over an `n`-qubit register tensored with `dim_f`.
fn apply_left(m: &mut ComplexMatrix, n: usize, dim_f: usize, targets: &[usize], u: &ComplexMatrix) {
    let t = targets.len();
    let k = 1usize << t;
    let mask = scatter(targets, k - 1, n);
    let offs: Vec<usize> = (0..k).map(|b| scatter(targets, b, n) * dim_f).collect();
    let cols = m.cols();
    let data = m.as_mut_slice();
    let mut buf = vec![ZERO; k];
    for q0 in (0..1usize << n).filter(|q| q & mask == 0) {
        for f in 0..dim_f {
            let base = q0 * dim_f + f;
            for c in 0..cols {
                for (b, slot) in buf.iter_mut().enumerate() {
                    *slot = data[(base + offs[b]) * cols + c];
                }
                for b in 0..k {
                    let s: C64 = (0..k).map(|b2| u[(b, b2)] * buf[b2]).sum();
                    data[(base + offs[b]) * cols + c] = s;
                }
            }
        }
    }
}

fn conjugate_in_place(m: &ComplexMatrix, n: usize, dim_f: usize, targets: &[usize], u: &ComplexMatrix) -> ComplexMatrix {
    let mut x = m.clone();
    apply_left(&mut x, n, dim_f, targets, u);
    let mut y = x.adjoint();
    apply_left(&mut y, n, dim_f, targets, u);
    y.adjoint()
}

fn apply_gate(rho: &ComplexMatrix, n: usize, dim_f: usize, g: &Gate, adjoint: bool) -> ComplexMatrix {
    let u = if adjoint { g.matrix.matrix().adjoint() } else { g.matrix.matrix().clone() };
    let turned = conjugate_in_place(rho, n, dim_f, &g.targets, &u);
    match g.kind {
        GateKind::Unitary => turned,
        GateKind::RandomUnitary => {
            let mut out = rho.scale_real(0.5);
            out.axpy(C64::new(0.5, 0.0), &turned);
            out
        }
    }
}

fn check_reference(c: &Circuit, x: &ComplexMatrix, dim_f: usize) -> Result<()> {
    c.validate()?;
    if dim_f == 0 {
        return Err(Error::Parameter("reference dimension must be positive".into()));
    }
    let d_in = (1usize << c.input_qubits().len()) * dim_f;
    if x.rows() != d_in || x.cols() != d_in {
        return dim_err(format!("input is {}x{}, circuit expects {d_in}x{d_in}", x.rows(), x.cols()));
    }
    if (1usize << c.n_qubits).saturating_mul(dim_f) > MAX_DIM {
        return dim_err(format!("register with reference exceeds the dimension cap {MAX_DIM}"));
    }
    Ok(())
}

/// `(C ⊗ 1_F)(X)` for any square `X` on `inputs ⊗ F`; no state validation.
pub fn simulate_matrix(c: &Circuit, x: &ComplexMatrix, dim_f: usize) -> Result<ComplexMatrix> {
    check_reference(c, x, dim_f)?;
    Ok(run(c, x, dim_f))
}

fn run(c: &Circuit, x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
    let n = c.n_qubits;
    let full = (1usize << n) * dim_f;
    let inputs = c.input_qubits();
    let map = index_map(&inputs, n, dim_f);
    let mut rho = ComplexMatrix::zeros(full, full);
    for (i, &fi) in map.iter().enumerate() {
        for (j, &fj) in map.iter().enumerate() {
            rho[(fi, fj)] = x[(i, j)];
        }
    }
    for g in &c.gates {
        rho = apply_gate(&rho, n, dim_f, g, false);
    }
    trace_out(&rho, n, dim_f, &c.output_qubits(), &sorted(&c.traced))
}

fn trace_out(rho: &ComplexMatrix, n: usize, dim_f: usize, keep: &[usize], traced: &[usize]) -> ComplexMatrix {
    let kept = index_map(keep, n, dim_f);
    let offs: Vec<usize> = (0..1usize << traced.len()).map(|b| scatter(traced, b, n) * dim_f).collect();
    ComplexMatrix::from_fn(kept.len(), kept.len(), |i, j| offs.iter().map(|o| rho[(kept[i] + o, kept[j] + o)]).sum())
}

/// Output state of `c` on `ρ` (inputs ⊗ `F`). Ancillas start in `|0⟩` unless the
/// circuit reads them from the input; traced qubits are discarded at the end.
pub fn simulate(c: &Circuit, rho: &DensityMatrix, dim_f: usize) -> Result<DensityMatrix> {
    let out = simulate_matrix(c, rho.matrix(), dim_f)?;
    Ok(DensityMatrix::from_matrix_unchecked(out.hermitian_part()))
}

fn adjoint_run(c: &Circuit, y: &ComplexMatrix) -> ComplexMatrix {
    let n = c.n_qubits;
    let full = 1usize << n;
    let keep = c.output_qubits();
    let traced = sorted(&c.traced);
    let kept = index_map(&keep, n, 1);
    let offs: Vec<usize> = (0..1usize << traced.len()).map(|b| scatter(&traced, b, n)).collect();
    let mut x = ComplexMatrix::zeros(full, full);
    for (i, &ki) in kept.iter().enumerate() {
        for (j, &kj) in kept.iter().enumerate() {
            for o in &offs {
                x[(ki + o, kj + o)] = y[(i, j)];
            }
        }
    }
    for g in c.gates.iter().rev() {
        x = apply_gate(&x, n, 1, g, true);
    }
    let inputs = index_map(&c.input_qubits(), n, 1);
    ComplexMatrix::from_fn(inputs.len(), inputs.len(), |i, j| x[(inputs[i], inputs[j])])
}

impl ChannelMap for Circuit {
    fn dim_in(&self) -> usize {
        1 << self.input_qubits().len()
    }

    fn dim_out(&self) -> usize {
        1 << self.output_qubits().len()
    }

    fn map(&self, x: &ComplexMatrix) -> ComplexMatrix {
        run(self, x, 1)
    }

    fn adjoint_map(&self, y: &ComplexMatrix) -> ComplexMatrix {
        adjoint_run(self, y)
    }

    fn map_with_reference(&self, x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
        run(self, x, dim_f)
    }
}

/// One `ru(Z)` per qubit.
pub fn dephase_gates(qubits: &[usize]) -> Vec<Gate> {
    qubits.iter().map(|&q| Gate::random_unitary(vec![q], pauli_z()).expect("1-qubit gate")).collect()
}

/// `ru(Z)` then `ru(X)` per qubit: the single-qubit completely depolarizing channel.
pub fn noise_gates(qubits: &[usize]) -> Vec<Gate> {
    qubits
        .iter()
        .flat_map(|&q| {
            [
                Gate::random_unitary(vec![q], pauli_z()).expect("1-qubit gate"),
                Gate::random_unitary(vec![q], pauli_x()).expect("1-qubit gate"),
            ]
        })
        .collect()
}

fn controlled_noise(control: usize, target: usize) -> [Gate; 2] {
    [
        Gate::random_unitary(vec![control, target], cz()).expect("2-qubit gate"),
        Gate::random_unitary(vec![control, target], cnot()).expect("2-qubit gate"),
    ]
}

/// One mixing stage controlled by ancilla `a[j]`: depolarize every other qubit of
/// `a ∪ h` when `a[j]` is set, then depolarize `a[j]` when any other ancilla is set.
pub fn mixing_stage(a: &[usize], h: &[usize], j: usize) -> Vec<Gate> {
    let ctrl = a[j];
    let mut others: Vec<usize> = a.iter().chain(h).copied().filter(|&q| q != ctrl).collect();
    // ancillas first, each group ascending
    let (mut oa, mut oh): (Vec<usize>, Vec<usize>) = others.drain(..).partition(|q| a.contains(q));
    oa.sort_unstable();
    oh.sort_unstable();
    let mut gates: Vec<Gate> = oa.iter().chain(&oh).flat_map(|&t| controlled_noise(ctrl, t)).collect();
    gates.extend(oa.iter().flat_map(|&c| controlled_noise(c, ctrl)));
    gates
}

/// All `m` mixing stages over ancillas `a` and data qubits `h`.
pub fn conditional_mixer_on(a: &[usize], h: &[usize]) -> Vec<Gate> {
    (0..a.len()).flat_map(|j| mixing_stage(a, h, j)).collect()
}

/// Mixer with ancillas `0..m` and data qubits `m..m+n`.
pub fn conditional_mixer(m: usize, n: usize) -> Result<Vec<Gate>> {
    if m == 0 {
        return Err(Error::Parameter("the mixer needs at least one ancilla qubit".into()));
    }
    let a: Vec<usize> = (0..m).collect();
    let h: Vec<usize> = (m..m + n).collect();
    Ok(conditional_mixer_on(&a, &h))
}

/// `m + m(2(m+n−1) + 2(m−1)) + gates + 2|B|`
pub fn compiled_gate_count(m: usize, n: usize, q_gates: usize, traced: usize) -> usize {
    let per_stage = if m == 0 { 0 } else { 2 * (m + n - 1) + 2 * (m - 1) };
    m + m * per_stage + q_gates + 2 * traced
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StageCounts {
    pub dephase: usize,
    pub mixer: usize,
    pub unitary: usize,
    pub noise: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CompileReport {
    pub m: usize,
    pub n: usize,
    pub gate_counts: StageCounts,
    pub total_gates: usize,
    pub random_unitary_gates: usize,
    pub expected_total: usize,
}

/// `C = N_B ∘ U ∘ M ∘ D_A`, a random-unitary circuit on all qubits with
/// `C(|0⟩⟨0|_A ⊗ σ) = Q(σ) ⊗ Ĩ_B`.
pub fn compile_approximation(q: &Circuit) -> Result<(Circuit, CompileReport)> {
    q.validate()?;
    if q.ancilla_as_input {
        return Err(Error::Structural("the source circuit must prepare its ancillas".into()));
    }
    if let Some(i) = q.gates.iter().position(|g| g.kind != GateKind::Unitary) {
        return Err(Error::Structural(format!("gates[{i}]: source circuits may only contain unitary gates")));
    }
    let a = sorted(&q.ancilla);
    let h: Vec<usize> = (0..q.n_qubits).filter(|x| !a.contains(x)).collect();
    let b = sorted(&q.traced);
    let dephase = dephase_gates(&a);
    let mixer = conditional_mixer_on(&a, &h);
    let noise = noise_gates(&b);
    let gate_counts = StageCounts { dephase: dephase.len(), mixer: mixer.len(), unitary: q.gates.len(), noise: noise.len() };
    let mut gates = dephase;
    gates.extend(mixer);
    gates.extend(q.gates.iter().cloned());
    gates.extend(noise);
    let total_gates = gates.len();
    let random_unitary_gates = gates.iter().filter(|g| g.kind == GateKind::RandomUnitary).count();
    let c = Circuit { n_qubits: q.n_qubits, ancilla: a.clone(), traced: Vec::new(), gates, ancilla_as_input: true };
    let report = CompileReport {
        m: a.len(),
        n: h.len(),
        gate_counts,
        total_gates,
        random_unitary_gates,
        expected_total: compiled_gate_count(a.len(), h.len(), q.gates.len(), b.len()),
    };
    Ok((c, report))
}

/// Places `x_a` on `a` and `x_rest` on the remaining qubits and the reference.
pub fn assemble_input(n: usize, a: &[usize], x_a: &ComplexMatrix, x_rest: &ComplexMatrix, dim_f: usize) -> Result<ComplexMatrix> {
    let a = sorted(a);
    let rest: Vec<usize> = (0..n).filter(|q| !a.contains(q)).collect();
    if x_a.rows() != 1 << a.len() || x_rest.rows() != (1 << rest.len()) * dim_f {
        return dim_err("factor dimensions do not match the qubit split");
    }
    let ma = index_map(&a, n, dim_f);
    let mr = index_map(&rest, n, dim_f);
    let full = (1usize << n) * dim_f;
    let mut out = ComplexMatrix::zeros(full, full);
    for (i, &ai) in ma.iter().step_by(dim_f).enumerate() {
        for (j, &aj) in ma.iter().step_by(dim_f).enumerate() {
            let s = x_a[(i, j)];
            if s == ZERO {
                continue;
            }
            for (r, &ri) in mr.iter().enumerate() {
                for (t, &rj) in mr.iter().enumerate() {
                    out[(ai + ri, aj + rj)] += s * x_rest[(r, t)];
                }
            }
        }
    }
    Ok(out)
}

fn reduce_to_reference(x: &ComplexMatrix, dim_f: usize) -> ComplexMatrix {
    let d = x.rows() / dim_f;
    ComplexMatrix::from_fn(dim_f, dim_f, |f, g| (0..d).map(|i| x[(i * dim_f + f, i * dim_f + g)]).sum())
}

fn kron_small(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    crate::numerics::kron(a, b)
}

/// `‖(C ⊗ 1_F)(|k⟩⟨k|_A ⊗ ρ) − Ĩ_{A⊗H} ⊗ tr_H ρ‖₁` for a compiled circuit and `ρ` on `H ⊗ F`.
pub fn ancilla_mixing_distance(c: &Circuit, k: usize, rho: &DensityMatrix, dim_f: usize) -> Result<f64> {
    if !c.ancilla_as_input {
        return Err(Error::Precondition("expected a compiled circuit that reads its ancillas".into()));
    }
    if !c.traced.is_empty() {
        return Err(Error::Precondition("compiled circuits keep every qubit".into()));
    }
    let m = c.ancilla.len();
    if k == 0 || k >= 1 << m {
        return Err(Error::Precondition(format!("basis index k = {k} must lie in [1, {}]", (1usize << m) - 1)));
    }
    let ka = ComplexMatrix::unit(1 << m, k, k);
    let x = assemble_input(c.n_qubits, &c.ancilla, &ka, rho.matrix(), dim_f)?;
    let out = simulate_matrix(c, &x, dim_f)?;
    let d = 1usize << c.n_qubits;
    let target = kron_small(&ComplexMatrix::identity(d).scale_real(1.0 / d as f64), &reduce_to_reference(rho.matrix(), dim_f));
    trace_norm(&(&out - &target).hermitian_part())
}

/// `(I_A + |e_j⟩⟨e_j| − |0⟩⟨0|)/2^m ⊗ Ĩ_H ⊗ tr_H ρ`, with `e_j` the string whose only set
/// bit is ancilla `j`.
pub fn mixing_closed_form(m: usize, n: usize, j: usize, rho: &DensityMatrix, dim_f: usize) -> Result<ComplexMatrix> {
    if j >= m {
        return Err(Error::Parameter(format!("stage {j} outside {m} ancillas")));
    }
    let da = 1usize << m;
    let dh = 1usize << n;
    let ej = 1usize << (m - 1 - j);
    let mut pa = ComplexMatrix::identity(da);
    pa[(ej, ej)] += ONE;
    pa[(0, 0)] -= ONE;
    let pa = pa.scale_real(1.0 / da as f64);
    let ih = ComplexMatrix::identity(dh).scale_real(1.0 / dh as f64);
    Ok(kron_small(&kron_small(&pa, &ih), &reduce_to_reference(rho.matrix(), dim_f)))
}

/// Runs `D_A` and the mixer on `|k⟩⟨k| ⊗ ρ` (ancillas `0..m`, data `m..m+n`) up to and
/// including the stage of the first set ancilla of `k`, and returns the largest
/// entry-wise deviation from the closed form at that stage.
pub fn check_mixing_closed_form(m: usize, n: usize, k: usize, rho: &DensityMatrix, dim_f: usize) -> Result<f64> {
    if m == 0 || k == 0 || k >= 1 << m {
        return Err(Error::Precondition(format!("need m ≥ 1 and k in [1, 2^m − 1], got m = {m}, k = {k}")));
    }
    let j = (0..m).find(|&j| (k >> (m - 1 - j)) & 1 == 1).expect("k is nonzero");
    let a: Vec<usize> = (0..m).collect();
    let h: Vec<usize> = (m..m + n).collect();
    let mut gates = dephase_gates(&a);
    for s in 0..=j {
        gates.extend(mixing_stage(&a, &h, s));
    }
    let c = Circuit { n_qubits: m + n, ancilla: a, traced: Vec::new(), gates, ancilla_as_input: true };
    let x = kron_small(&ComplexMatrix::unit(1 << m, k, k), rho.matrix());
    let out = simulate_matrix(&c, &x, dim_f)?;
    Ok(out.max_abs_diff(&mixing_closed_form(m, n, j, rho, dim_f)?))
}

/// Places `q_out` on the kept qubits and `Ĩ` on the traced ones, all qubits ascending.
pub fn pad_traced_with_mixed(q: &Circuit, q_out: &ComplexMatrix) -> Result<ComplexMatrix> {
    let b = sorted(&q.traced);
    let db = 1usize << b.len();
    assemble_input(q.n_qubits, &b, &ComplexMatrix::identity(db).scale_real(1.0 / db as f64), q_out, 1)
}

/// `‖C(|0⟩⟨0| ⊗ σ) − Q(σ) ⊗ Ĩ_B‖₁`
pub fn compile_simulation_residual(q: &Circuit, c: &Circuit, sigma: &DensityMatrix) -> Result<f64> {
    let q_out = simulate_matrix(q, sigma.matrix(), 1)?;
    let a = sorted(&q.ancilla);
    let zero = ComplexMatrix::unit(1 << a.len(), 0, 0);
    let x = assemble_input(q.n_qubits, &a, &zero, sigma.matrix(), 1)?;
    let c_out = simulate_matrix(c, &x, 1)?;
    trace_norm(&(&c_out - &pad_traced_with_mixed(q, &q_out)?).hermitian_part())
}
