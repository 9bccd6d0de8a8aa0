//! relmachine: run nested simulations, adversarial scenarios, and metrics
//! over their traces from the command line.
//!
//! Exit codes: 0 success (including step-limit timeouts), 2 malformed
//! input, 3 access-guard violation, 4 runtime error.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use relmachine::experiments::{self, ScenarioFile, ScenarioOutcome};
use relmachine::machine::file::MachineFile;
use relmachine::machine::MachineSpec;
use relmachine::metrics::{self, MetricsReport};
use relmachine::model::{ModelError, ModelParams, PaddingStrategy, RelativeModel};
use relmachine::oracle::OracleBinding;
use relmachine::quantum::{
    self, evolve, evolve_exact, EvolutionParams, Hamiltonian, HamiltonianFile, QuantumState,
};
use relmachine::trace;
use relmachine::SnapshotMode;

const EXIT_BAD_INPUT: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

#[derive(Parser)]
#[command(
    name = "relmachine",
    version,
    about = "Nested-simulation engine: a global interpreter drives an encoded local machine, \
             services constant-local-cost oracle queries, and instruments what the inside \
             provably cannot see."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a local machine inside the relative model and write its
    /// trace as JSON-lines.
    Simulate(SimulateArgs),
    /// Run a scenario configuration (games, spoof, benchmarks, Schrödinger).
    Scenario(ScenarioArgs),
    /// Compute clock/space metrics from a trace file.
    Metrics(MetricsArgs),
    /// Cross-check truncated-Taylor evolution against the exact
    /// eigendecomposition route.
    QuantumCheck(QuantumCheckArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Machine definition file (JSON).
    #[arg(long)]
    machine: PathBuf,
    /// Initial local tape contents.
    #[arg(long, default_value = "")]
    input: String,
    /// Local steps to run before stopping.
    #[arg(long, default_value_t = 100)]
    max_local_steps: u64,
    /// Seed for all randomness; mandatory when anything is stochastic.
    #[arg(long)]
    seed: Option<u64>,
    /// Constant padding before every local update.
    #[arg(long)]
    pad_const: Option<u64>,
    /// Explicit per-step padding schedule, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pad_schedule: Option<Vec<u64>>,
    /// Uniform padding range "lo,hi" (stochastic: requires --seed).
    #[arg(long, value_delimiter = ',')]
    pad_uniform: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = SnapshotModeArg::Full)]
    snapshots: SnapshotModeArg,
    /// Trace output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SnapshotModeArg {
    Full,
    Summary,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario configuration file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Report output path; overrides the config's `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Trace file produced by `simulate`.
    #[arg(long)]
    trace: PathBuf,
    /// Oracle output length used as the space-factor denominator.
    #[arg(long, default_value_t = 1)]
    output_length: u64,
    /// Skip space metrics (allows summary-mode traces).
    #[arg(long)]
    time_only: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Args)]
struct QuantumCheckArgs {
    /// Hamiltonian file (JSON); omit to use a seeded random one.
    #[arg(long)]
    hamiltonian: Option<PathBuf>,
    /// Qubits for the seeded random Hamiltonian.
    #[arg(long, default_value_t = 2)]
    n_qubits: u32,
    #[arg(long, default_value_t = 0.7)]
    tau: f64,
    #[arg(long, default_value_t = 1e-9)]
    epsilon: f64,
    /// Seed; mandatory unless --hamiltonian is given.
    #[arg(long)]
    seed: Option<u64>,
    /// Also check the fixed-point amplitude codec at this precision.
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Scenario(args) => cmd_scenario(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::QuantumCheck(args) => cmd_quantum_check(args),
    }
}

fn verbose() -> bool {
    std::env::var("RELMACHINE_LOG")
        .map(|v| !v.is_empty())
        .unwrap_or(false)
}

fn log(msg: impl Display) {
    if verbose() {
        eprintln!("relmachine: {msg}");
    }
}

fn fail(code: u8, msg: impl Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn read_file(path: &Path) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_BAD_INPUT, format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), ExitCode> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| fail(EXIT_RUNTIME, format!("{}: {e}", p.display())))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn model_error_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Guard(_) | ModelError::Aborted => EXIT_GUARD,
        ModelError::Layout(_)
        | ModelError::LayoutTooSmall { .. }
        | ModelError::InputSymbol(_)
        | ModelError::AlphabetMismatch
        | ModelError::Malformed(_) => EXIT_BAD_INPUT,
        _ => EXIT_RUNTIME,
    }
}

/// Bind the standard oracles to any query states of this machine.
fn standard_bindings(spec: &MachineSpec) -> Vec<OracleBinding> {
    let mut bindings = Vec::new();
    for q in spec.query_states().values() {
        let arg_len = q.arg.len() as usize;
        let binding = match q.oracle.as_str() {
            "parity" => Some(OracleBinding::parity()),
            "identity" => Some(OracleBinding::identity(arg_len)),
            _ => None,
        };
        if let Some(b) = binding {
            if !bindings
                .iter()
                .any(|x: &OracleBinding| x.identifier == b.identifier)
            {
                bindings.push(b);
            }
        }
    }
    bindings
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    outcome: &'a str,
    local_steps: u64,
    global_steps: u64,
    tau_tilde: u64,
    final_local_tape: String,
    final_state: String,
}

fn cmd_simulate(args: SimulateArgs) -> ExitCode {
    let text = match read_file(&args.machine) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let spec = match MachineFile::from_json(&text).and_then(MachineFile::into_spec) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_BAD_INPUT, format!("{}: {e}", args.machine.display())),
    };

    let padding = match (&args.pad_const, &args.pad_schedule, &args.pad_uniform) {
        (Some(n), None, None) => PaddingStrategy::Constant(*n),
        (None, Some(s), None) => PaddingStrategy::Schedule(s.clone()),
        (None, None, Some(range)) => {
            let [lo, hi] = range.as_slice() else {
                return fail(EXIT_BAD_INPUT, "--pad-uniform takes exactly `lo,hi`");
            };
            PaddingStrategy::Uniform { lo: *lo, hi: *hi }
        }
        (None, None, None) => PaddingStrategy::None,
        _ => return fail(EXIT_BAD_INPUT, "use at most one padding flag"),
    };
    let stochastic = spec.has_probabilistic() || matches!(padding, PaddingStrategy::Uniform { .. });
    let seed =
        match (args.seed, stochastic) {
            (Some(s), _) => s,
            (None, false) => 0,
            (None, true) => return fail(
                EXIT_BAD_INPUT,
                "--seed is mandatory for stochastic runs (probabilistic machine or random padding)",
            ),
        };
    let mode = match args.snapshots {
        SnapshotModeArg::Full => SnapshotMode::Full,
        SnapshotModeArg::Summary => SnapshotMode::Summary,
    };

    let bindings = standard_bindings(&spec);
    let mut model = match RelativeModel::init(
        ModelParams::new(spec, args.input.clone(), seed)
            .with_padding(padding)
            .with_mode(mode)
            .with_oracles(bindings),
    ) {
        Ok(m) => m,
        Err(e) => return fail(model_error_code(&e), e),
    };

    log(format!(
        "running up to {} local steps",
        args.max_local_steps
    ));
    let outcome = match model.run_local_steps(args.max_local_steps) {
        Ok(summary) => match summary.halted {
            Some(relmachine::Halt::Accept) => "accept",
            Some(relmachine::Halt::Reject) => "reject",
            None => "step_limit",
        },
        Err(e) => return fail(model_error_code(&e), e),
    };

    let jsonl = trace::export_jsonl(model.trace());
    if let Err(code) = write_output(args.out.as_deref(), &jsonl) {
        return code;
    }
    let summary = SimulateSummary {
        outcome,
        local_steps: model.tau(),
        global_steps: model.t(),
        tau_tilde: model.tau_tilde(),
        final_local_tape: model.local_snapshot().render(),
        final_state: model.local_state_name().to_string(),
    };
    if args.out.is_some() {
        println!(
            "{}",
            serde_json::to_string(&summary).expect("summary serializes")
        );
    } else {
        log(format!("outcome: {outcome}"));
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct ReportEnvelope<T: Serialize> {
    scenario: String,
    artifact_version: &'static str,
    config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    trial_log: Option<String>,
    #[serde(flatten)]
    body: T,
}

fn cmd_scenario(args: ScenarioArgs) -> ExitCode {
    let text = match read_file(&args.config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let mut file = match ScenarioFile::from_json(&text) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_BAD_INPUT, format!("{}: {e}", args.config.display())),
    };
    if let Some(trials) = args.trials {
        file.trials = trials;
    }
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    let out_path: Option<PathBuf> = args.out.or_else(|| file.output.as_ref().map(PathBuf::from));

    log(format!(
        "scenario `{}`, {} trials",
        file.scenario, file.trials
    ));
    let outcome = match experiments::run_scenario(&file) {
        Ok(o) => o,
        Err(e) => {
            let code = match &e {
                experiments::ExperimentError::Model(m) => model_error_code(m),
                experiments::ExperimentError::UnknownScenario(_)
                | experiments::ExperimentError::UnknownDetector(_)
                | experiments::ExperimentError::UnknownMachine(_)
                | experiments::ExperimentError::UnknownBenchOracle(_)
                | experiments::ExperimentError::Adversary(_)
                | experiments::ExperimentError::DegeneratePads(_)
                | experiments::ExperimentError::NoTrials => EXIT_BAD_INPUT,
                _ => EXIT_RUNTIME,
            };
            return fail(code, e);
        }
    };

    // Per-trial logs go to a sibling file; the report references it.
    let trial_log = match (&out_path, &outcome) {
        (Some(out), ScenarioOutcome::Game { game, .. }) => {
            let path = out.with_extension("trials.jsonl");
            let lines: String = game
                .outcomes
                .iter()
                .map(|t| serde_json::to_string(t).expect("trial serializes") + "\n")
                .collect();
            if let Err(code) = write_output(Some(&path), &lines) {
                return code;
            }
            Some(path.display().to_string())
        }
        (Some(out), ScenarioOutcome::Measure(m)) => {
            let path = out.with_extension("trials.jsonl");
            let lines: String = m
                .outcomes
                .iter()
                .map(|t| serde_json::to_string(t).expect("trial serializes") + "\n")
                .collect();
            if let Err(code) = write_output(Some(&path), &lines) {
                return code;
            }
            Some(path.display().to_string())
        }
        _ => None,
    };

    let effective = serde_json::to_string(&file).expect("config serializes");
    let envelope = ReportEnvelope {
        scenario: file.scenario.clone(),
        artifact_version: env!("CARGO_PKG_VERSION"),
        config_hash: experiments::config_hash(&effective),
        trial_log,
        body: outcome,
    };
    let json = serde_json::to_string_pretty(&envelope).expect("report serializes") + "\n";
    if let Err(code) = write_output(out_path.as_deref(), &json) {
        return code;
    }
    ExitCode::SUCCESS
}

fn cmd_metrics(args: MetricsArgs) -> ExitCode {
    let text = match read_file(&args.trace) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let lines = match trace::parse_jsonl(&text) {
        Ok(l) => l,
        Err(e) => return fail(EXIT_BAD_INPUT, format!("{}: {e}", args.trace.display())),
    };
    let trace = trace::trace_from_lines(&lines);
    if trace.k.is_empty() {
        return fail(
            EXIT_BAD_INPUT,
            "trace records no completed local steps; nothing to report",
        );
    }
    let mut report = match MetricsReport::from_trace(&trace, Some(args.output_length)) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_BAD_INPUT, e),
    };
    if !args.time_only {
        // Space metrics come from the independent per-step recount, which
        // needs a full-mode trace; cross-check it against the recorded
        // online footprints.
        for row in &mut report.per_tau {
            let recount =
                match metrics::space_used(&trace, row.tau) {
                    Ok(g) => g,
                    Err(metrics::MetricsError::SummaryMode) => return fail(
                        EXIT_BAD_INPUT,
                        "summary-mode trace lacks per-step records, so space metrics cannot be \
                         recomputed; re-run simulate with --snapshots full, or pass --time-only",
                    ),
                    Err(e) => return fail(EXIT_RUNTIME, e),
                };
            if recount != row.g_tau {
                return fail(
                    EXIT_RUNTIME,
                    format!(
                        "space recount mismatch at tau {}: trace says {}, step log says {}",
                        row.tau, row.g_tau, recount
                    ),
                );
            }
        }
    }
    let content = match args.format {
        FormatArg::Json => report.to_json() + "\n",
        FormatArg::Csv => report.to_csv(),
    };
    if let Err(code) = write_output(args.out.as_deref(), &content) {
        return code;
    }
    ExitCode::SUCCESS
}

#[derive(Serialize)]
struct QuantumCheckReport {
    n_qubits: u32,
    tau: f64,
    epsilon: f64,
    truncation_order: u32,
    deviation_from_exact: f64,
    norm_drift: f64,
    hermitian: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    codec_round_trip: Option<CodecCheck>,
}

#[derive(Serialize)]
struct CodecCheck {
    precision: u32,
    quantization_bound: f64,
    worst_component_error: f64,
}

fn cmd_quantum_check(args: QuantumCheckArgs) -> ExitCode {
    let h: Hamiltonian = match &args.hamiltonian {
        Some(path) => {
            let text = match read_file(path) {
                Ok(t) => t,
                Err(code) => return code,
            };
            match HamiltonianFile::from_json(&text).and_then(HamiltonianFile::into_hamiltonian) {
                Ok(h) => h,
                Err(e) => return fail(EXIT_BAD_INPUT, format!("{}: {e}", path.display())),
            }
        }
        None => {
            let Some(seed) = args.seed else {
                return fail(
                    EXIT_BAD_INPUT,
                    "--seed is mandatory when using a random Hamiltonian",
                );
            };
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            quantum::random_hermitian(args.n_qubits, &mut rng)
        }
    };
    let psi0 = QuantumState::zero_basis(h.n_qubits);
    let order = match quantum::taylor_order_for(&h, args.tau, args.epsilon) {
        Ok(j) => j,
        Err(e) => return fail(EXIT_BAD_INPUT, e),
    };
    let params = EvolutionParams::new(args.tau, args.epsilon);
    let approx = match evolve(&psi0, &h, &params) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let exact = match evolve_exact(&psi0, &h, args.tau) {
        Ok(s) => s,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let codec_round_trip = match args.precision {
        None => None,
        Some(p) => {
            let codec = match quantum::fixed::FixedPointCodec::new(p) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_BAD_INPUT, e),
            };
            // The codec's bound covers [-1, 1]; a truncated evolution can
            // overshoot unit norm by up to epsilon, so check the state as
            // it would go onto the tape: renormalized.
            let state = match quantum::renormalize(&approx) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_RUNTIME, e),
            };
            let bits = quantum::encode_state(&state, &codec);
            let back = match quantum::decode_state(&bits, h.n_qubits, &codec) {
                Ok(s) => s,
                Err(e) => return fail(EXIT_RUNTIME, e),
            };
            let worst = state
                .amplitudes
                .iter()
                .zip(&back.amplitudes)
                .flat_map(|(a, b)| [(a.re - b.re).abs(), (a.im - b.im).abs()])
                .fold(0.0f64, f64::max);
            Some(CodecCheck {
                precision: p,
                quantization_bound: codec.quantization_error(),
                worst_component_error: worst,
            })
        }
    };
    let report = QuantumCheckReport {
        n_qubits: h.n_qubits,
        tau: args.tau,
        epsilon: args.epsilon,
        truncation_order: order,
        deviation_from_exact: quantum::distance(&approx, &exact),
        norm_drift: (quantum::norm(&approx) - 1.0).abs(),
        hermitian: h.check_hermitian(quantum::HERMITIAN_TOL).is_ok(),
        codec_round_trip,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    if let Err(code) = write_output(args.out.as_deref(), &json) {
        return code;
    }
    ExitCode::SUCCESS
}
