use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use channel_forge::approximation::{build_approximation_with, BuildMode};
use channel_forge::channels::{validate_cptp, Channel, ChannelMap, KrausChannel, RandomUnitaryChannel};
use channel_forge::circuits::{compile_approximation, simulate, Circuit};
use channel_forge::diamond::{diamond_distance, verify_distinguishability_reduction, DiamondConfig};
use channel_forge::metrics::{additivity_gap, max_output_pnorm, min_output_entropy, multiplicativity_gap, Method, OptResult};
use channel_forge::numerics::{trace_norm, ComplexMatrix, DensityMatrix, PureState, UnitaryMatrix};
use channel_forge::sampling::{random_kraus, random_unitary, seeded_rng};
use channel_forge::standard_channels::{depolarizing_channel, weyl_family};
use channel_forge::verify::{run_verify, VerifyManifest, CHECK_NAMES};
use channel_forge::Error;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "channel-forge", version, about = "Quantum channel approximation and verification toolkit")]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the main result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a channel file describes a CPTP map.
    Validate { file: PathBuf },
    /// Rewrite a channel in another representation.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Repr,
    },
    /// Write a standard or seeded random channel.
    MakeChannel {
        #[arg(long, value_enum)]
        kind: MakeKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Output dimension for `random`.
        #[arg(long)]
        dim_out: Option<usize>,
        /// Number of Kraus operators for `random`.
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum)]
        repr: Option<Repr>,
    },
    /// Build the random-unitary approximation of a channel.
    Approximate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "dim-a")]
        dim_a: usize,
        /// Only store the action (Choi matrix) instead of expanding every unitary.
        #[arg(long)]
        action_only: bool,
        /// Also write dimensions and term count here.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Estimate the minimum output entropy.
    EntropyMin {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        budget: Budget,
    },
    /// Estimate the maximum output Schatten p-norm.
    PnormMax {
        #[arg(long = "in")]
        input: PathBuf,
        /// Schatten index, a number ≥ 1 or `inf`.
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[command(flatten)]
        budget: Budget,
    },
    /// Additivity or multiplicativity gap of two channels.
    Gap {
        #[arg(long, value_enum)]
        kind: GapKind,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_parser = parse_p, default_value = "2")]
        p: f64,
        #[command(flatten)]
        budget: Budget,
    },
    /// Trace distance ½‖ρ − σ‖₁ between two states.
    TraceDist {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Diamond-norm distance estimate between two channels.
    DiamondDist {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long = "dim-f")]
        dim_f: Option<usize>,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compile a mixed-state circuit into a random-unitary circuit.
    CompileCircuit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Simulate a circuit on a state (density matrix or pure state file).
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long = "dim-f", default_value_t = 1)]
        dim_f: usize,
    },
    /// Run the check suite, or compare two circuits before and after compilation.
    Verify {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Run only these checks.
        #[arg(long = "check")]
        checks: Vec<String>,
        #[arg(long)]
        q1: Option<PathBuf>,
        #[arg(long)]
        q2: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Yes threshold: distance at least this.
        #[arg(long)]
        yes_above: Option<f64>,
        /// No threshold: distance at most this.
        #[arg(long)]
        no_below: Option<f64>,
    },
}

#[derive(clap::Args)]
struct Budget {
    #[arg(long, default_value_t = 32)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Repr {
    Kraus,
    Choi,
    Stinespring,
    RandomUnitary,
}

impl Repr {
    fn name(self) -> &'static str {
        match self {
            Repr::Kraus => "kraus",
            Repr::Choi => "choi",
            Repr::Stinespring => "stinespring",
            Repr::RandomUnitary => "random_unitary",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MakeKind {
    Identity,
    Depolarizing,
    Dephasing,
    Weyl,
    Unitary,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum GapKind {
    Additivity,
    Multiplicativity,
}

fn parse_p(s: &str) -> Result<f64, String> {
    if s == "inf" || s == "infinity" {
        return Ok(f64::INFINITY);
    }
    let p: f64 = s.parse().map_err(|_| format!("'{s}' is not a number or 'inf'"))?;
    if p < 1.0 {
        return Err(format!("p = {p} must be at least 1"));
    }
    Ok(p)
}

enum Failure {
    Lib(Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Lib(Error::ResourceCap(_) | Error::Regime(_)) => EXIT_CAP,
            Failure::Lib(Error::Numerical(_)) => EXIT_FAIL,
            _ => EXIT_USAGE,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(p, e) => format!("{}: {e}", p.display()),
            Failure::Usage(s) => s.clone(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn with_path<T>(path: &Path, r: channel_forge::Result<T>) -> CliResult<T> {
    r.map_err(|e| match e {
        Error::Schema(inner) => Failure::Usage(format!("{}: {inner}", path.display())),
        Error::Structural(s) => Failure::Usage(format!("{}: {s}", path.display())),
        Error::Validation(s) => Failure::Usage(format!("{}: {s}", path.display())),
        other => Failure::Lib(other),
    })
}

fn load_channel(path: &Path) -> CliResult<Channel> {
    with_path(path, Channel::from_json(&read(path)?))
}

fn load_circuit(path: &Path) -> CliResult<Circuit> {
    with_path(path, Circuit::from_json(&read(path)?))
}

/// A density matrix, or a pure state given as `{"amplitudes": ...}`.
fn load_state(path: &Path) -> CliResult<DensityMatrix> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let parsed = if value.get("amplitudes").is_some() {
        serde_json::from_value::<PureState>(value).map(|s| s.density())
    } else {
        serde_json::from_value::<DensityMatrix>(value)
    };
    parsed.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Result of one subcommand: the payload, its text rendering, and whether checks passed.
struct Output {
    value: Value,
    text: String,
    pass: bool,
}

impl Output {
    fn ok(value: Value, text: String) -> Self {
        Self { value, text, pass: true }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report serializes")
}

fn amplitudes(psi: &PureState) -> Value {
    Value::Array(psi.amplitudes().iter().map(|z| json!([z.re, z.im])).collect())
}

fn opt_report(kind: &str, r: &OptResult, method: Method, p: Option<f64>) -> Value {
    json!({
        "quantity": kind,
        "p": p.map(p_value),
        "value": r.value,
        "method": method,
        "witness": amplitudes(&r.witness),
        "spread": r.spread,
        "restarts": r.restarts_used,
        "iterations": r.iterations,
        "converged": r.converged,
        "seed": r.seed,
        "restart_values": r.restart_values,
    })
}

fn p_value(p: f64) -> Value {
    if p.is_infinite() {
        json!("inf")
    } else {
        json!(p)
    }
}

fn channel_output(ch: &Channel) -> Output {
    let value: Value = serde_json::from_str(&ch.to_json()).expect("channel JSON");
    Output::ok(value, ch.to_json())
}

fn make_channel(kind: MakeKind, dim: usize, dim_out: Option<usize>, kraus: usize, seed: u64) -> CliResult<Channel> {
    if dim == 0 {
        return Err(Failure::Usage("--dim must be positive".into()));
    }
    let mut rng = seeded_rng(seed, 0);
    Ok(match kind {
        MakeKind::Identity => KrausChannel::identity(dim).into(),
        MakeKind::Depolarizing => depolarizing_channel(dim)?.into(),
        MakeKind::Dephasing => KrausChannel::new((0..dim).map(|i| ComplexMatrix::unit(dim, i, i)).collect())?.into(),
        MakeKind::Weyl => weyl_family(dim)?.uniform_mixture().into(),
        MakeKind::Unitary => RandomUnitaryChannel::unitary(UnitaryMatrix::new(random_unitary(dim, &mut rng).matrix().clone())?).into(),
        MakeKind::Random => {
            let dout = dim_out.unwrap_or(dim);
            if dout == 0 || kraus == 0 || kraus * dout < dim {
                return Err(Failure::Usage(format!(
                    "need --kraus × --dim-out ≥ --dim for a trace-preserving map, got {kraus} × {dout} < {dim}"
                )));
            }
            KrausChannel::new(random_kraus(dim, dout, kraus, &mut rng))?.into()
        }
    })
}

fn run(cli: &Cli) -> CliResult<Output> {
    match &cli.command {
        Command::Validate { file } => {
            let ch = load_channel(file)?;
            let report = validate_cptp(&ch)?;
            let mut text = format!("{} ({}→{}): {}\n", ch.kind(), ch.dim_in(), ch.dim_out(), if report.pass { "valid" } else { "INVALID" });
            for c in &report.checks {
                text.push_str(&format!(
                    "  {:<24} residual {:.3e}  tolerance {:.0e}  {}\n",
                    c.name,
                    c.residual,
                    c.tolerance,
                    if c.pass { "ok" } else { "FAIL" }
                ));
            }
            Ok(Output { value: to_value(&report), text, pass: report.pass })
        }
        Command::Convert { input, to } => Ok(channel_output(&load_channel(input)?.convert(to.name())?)),
        Command::MakeChannel { kind, dim, dim_out, kraus, seed, repr } => {
            let ch = make_channel(*kind, *dim, *dim_out, *kraus, *seed)?;
            let ch = match repr {
                Some(r) => ch.convert(r.name())?,
                None => ch,
            };
            Ok(channel_output(&ch))
        }
        Command::Approximate { input, dim_a, action_only, summary } => {
            let phi = load_channel(input)?;
            let mode = if *action_only { BuildMode::ActionOnly } else { BuildMode::Symbolic };
            let ac = build_approximation_with(&phi, *dim_a, mode)?;
            if let Some(path) = summary {
                write(path, &serde_json::to_string_pretty(&ac.summary()).expect("summary serializes"))?;
            }
            Ok(channel_output(&ac.to_channel()))
        }
        Command::EntropyMin { input, budget } => {
            let phi = load_channel(input)?;
            let r = min_output_entropy(&phi, budget.restarts, budget.seed)?;
            let text = format!("S_min ≤ {:.12} bits (spread {:.2e}, {} restarts)\n", r.value, r.spread, r.restarts_used);
            Ok(Output::ok(opt_report("min_output_entropy", &r, Method::CertifiedUpper, None), text))
        }
        Command::PnormMax { input, p, budget } => {
            let phi = load_channel(input)?;
            let r = max_output_pnorm(&phi, *p, budget.restarts, budget.seed)?;
            let text = format!("nu_{} ≥ {:.12} (spread {:.2e}, {} restarts)\n", p, r.value, r.spread, r.restarts_used);
            Ok(Output::ok(opt_report("max_output_pnorm", &r, Method::CertifiedLower, Some(*p)), text))
        }
        Command::Gap { kind, a, b, p, budget } => {
            let (x, y) = (load_channel(a)?, load_channel(b)?);
            let g = match kind {
                GapKind::Additivity => additivity_gap(&x, &y, budget.restarts, budget.seed)?,
                GapKind::Multiplicativity => multiplicativity_gap(&x, &y, *p, budget.restarts, budget.seed)?,
            };
            let mut value = to_value(&g);
            value["method"] = json!(Method::Consensus);
            value["product_certificate_method"] = json!(Method::Exact);
            let text = format!("{} gap {:.3e} (raw {:.3e}; product certificate {:.3e})\n", g.kind, g.gap, g.raw_gap, g.product_certificate);
            Ok(Output::ok(value, text))
        }
        Command::TraceDist { a, b } => {
            let (x, y) = (load_state(a)?, load_state(b)?);
            if x.dim() != y.dim() {
                return Err(Failure::Lib(Error::Dimension(format!("states of dimension {} and {}", x.dim(), y.dim()))));
            }
            let d = 0.5 * trace_norm(&(x.matrix() - y.matrix()))?;
            Ok(Output::ok(json!({"trace_distance": d, "method": Method::Exact}), format!("{d:.12}\n")))
        }
        Command::DiamondDist { a, b, dim_f, restarts, seed } => {
            let (x, y) = (load_channel(a)?, load_channel(b)?);
            let cfg = DiamondConfig { dim_f: *dim_f, ..DiamondConfig::new(*restarts, *seed) };
            let e = diamond_distance(&x, &y, &cfg)?;
            let mut value = to_value(&e);
            value["method"] = json!(Method::CertifiedLower);
            value["witness"] = amplitudes(&e.witness);
            let text = format!("diamond distance ≥ {:.12} (spread {:.2e}, dim_F = {})\n", e.value, e.spread, e.dim_f);
            Ok(Output::ok(value, text))
        }
        Command::CompileCircuit { input, report } => {
            let q = load_circuit(input)?;
            let (c, rep) = compile_approximation(&q)?;
            if let Some(path) = report {
                write(path, &serde_json::to_string_pretty(&rep).expect("report serializes"))?;
            }
            let value: Value = serde_json::from_str(&c.to_json()).expect("circuit JSON");
            Ok(Output::ok(value, c.to_json()))
        }
        Command::Simulate { circuit, state, dim_f } => {
            let c = load_circuit(circuit)?;
            let rho = load_state(state)?;
            let out = simulate(&c, &rho, *dim_f)?;
            let text = serde_json::to_string_pretty(&out).expect("state serializes");
            Ok(Output::ok(to_value(&out), text))
        }
        Command::Verify { manifest, checks, q1, q2, m, restarts, seed, yes_above, no_below } => {
            if q1.is_some() || q2.is_some() {
                let (Some(p1), Some(p2)) = (q1, q2) else {
                    return Err(Failure::Usage("--q1 and --q2 go together".into()));
                };
                let thresholds = match (yes_above, no_below) {
                    (Some(a), Some(b)) => Some((*a, *b)),
                    (None, None) => None,
                    _ => return Err(Failure::Usage("--yes-above and --no-below go together".into())),
                };
                let cfg = DiamondConfig::new(*restarts, *seed);
                let r = verify_distinguishability_reduction(&load_circuit(p1)?, &load_circuit(p2)?, *m, &cfg, thresholds)?;
                let text = format!(
                    "source {:.9}  compiled {:.9} (at source witness {:.9})  epsilon {}  lower {}  upper {}\n",
                    r.source_distance,
                    r.compiled_distance,
                    r.compiled_at_source_witness,
                    r.epsilon,
                    if r.lower_holds { "ok" } else { "FAIL" },
                    if r.upper_holds { "ok" } else { "FAIL" }
                );
                return Ok(Output { value: to_value(&r), text, pass: r.pass });
            }
            let mut mf = match manifest {
                Some(path) => with_path(path, VerifyManifest::from_json(&read(path)?))?,
                None => VerifyManifest::full(),
            };
            if !checks.is_empty() {
                for name in checks {
                    if !CHECK_NAMES.contains(&name.as_str()) {
                        return Err(Failure::Usage(format!("unknown check '{name}'; known: {}", CHECK_NAMES.join(", "))));
                    }
                }
                mf.checks.retain(|c| checks.contains(&c.name));
                if manifest.is_none() {
                    mf = VerifyManifest::only(&checks.iter().map(String::as_str).collect::<Vec<_>>())?;
                }
            }
            let report = run_verify(&mf)?;
            let mut text = String::new();
            for c in &report.checks {
                let ms = report.timestamp.runtime_ms.get(&c.name).copied().unwrap_or(0);
                text.push_str(&format!("{:<30} {}  ({} ms)\n", c.name, if c.pass { "pass" } else { "FAIL" }, ms));
                for m in c.measurements.iter().filter(|m| !m.holds) {
                    text.push_str(&format!("    {}: {:.6e} vs bound {:.6e}\n", m.label, m.value, m.bound));
                }
            }
            text.push_str(if report.pass { "all checks passed\n" } else { "some checks FAILED\n" });
            Ok(Output { value: to_value(&report), text, pass: report.pass })
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("CHANNEL_FORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("CHANNEL_FORGE_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Usage(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(out) => {
            let body = if cli.json {
                serde_json::to_string_pretty(&out.value).expect("output serializes") + "\n"
            } else if out.text.ends_with('\n') {
                out.text
            } else {
                out.text + "\n"
            };
            if let Some(path) = &cli.out {
                if let Err(f) = write(path, &body) {
                    eprintln!("error: {}", f.message());
                    return ExitCode::from(f.code());
                }
            } else {
                print!("{body}");
            }
            ExitCode::from(if out.pass { 0 } else { EXIT_FAIL })
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
