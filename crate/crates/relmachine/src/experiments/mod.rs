//! The scenario harness: each undecidability result becomes a reproducible
//! adversarial game with statistical acceptance.
//!
//! The games cannot prove a theorem; they operationalize one. The access
//! guard makes the forbidden information structurally unreachable, and a
//! suite of natural detector strategies then scores at chance — while a
//! control arm that *is* allowed to query the answer scores 1.0. Reports
//! state both halves.

pub mod detectors;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus;
use crate::machine::{self, Halt, MachineConfig, MachineSpec};
use crate::metrics::{self, ComplexityProfile, ProfileRow};
use crate::model::{ModelError, ModelParams, PaddingStrategy, RelativeModel, SpoofReport};
use crate::oracle::OracleBinding;
use crate::quantum::{
    self, decode_state, encode_state, evolve, evolve_exact, fixed, measure_with_uncertainty,
    restart_driver_regions, schrodinger_driver_binding, state_bits, EvolutionMode, EvolutionParams,
    FixedPointError, Hamiltonian, QuantumError, QuantumState,
};
use crate::tape::{Symbol, Tape, WriteOp};
use crate::trace::SnapshotMode;
use detectors::{local_machine_by_name, Detector};
use stats::{chi_square_independence, ChiSquareReport, StatReport};

/// Cap on detector runtime inside a trial; every shipped detector halts in
/// well under this.
const MAX_DETECTOR_LOCAL_STEPS: u64 = 64;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("the two pad values must differ (got {0} twice): the arms are indistinguishable by construction")]
    DegeneratePads(u64),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("unknown local machine `{0}`")]
    UnknownMachine(String),
    #[error("unknown oracle `{0}` in benchmark")]
    UnknownBenchOracle(String),
    #[error("scenario `{0}` is not one of simtime|psimtime|measure|spoof_accept|oracle_benchmark|schrodinger")]
    UnknownScenario(String),
    #[error("bad adversary parameters: {0}")]
    Adversary(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
}

/// One trial of a binary guessing game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub truth: bool,
    pub guess: bool,
    pub success: bool,
}

/// Result of a pad-guessing game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameResult {
    pub stat: StatReport,
    /// Independence of pad choice and final local tape state (probabilistic
    /// game only).
    pub chi_square: Option<ChiSquareReport>,
    /// Trials aborted by the access guard, counted as automatic failures.
    pub guard_failures: u64,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

/// Who plays the detector in a pad game.
pub enum PadDetector {
    Standard(Detector),
    /// An arbitrary local machine; its guess is local cell 0 after it
    /// halts. Probabilistic machines draw from the logged local stream.
    Machine(MachineSpec),
}

fn run_pad_game(
    detector: &PadDetector,
    pads: (u64, u64),
    trials: u64,
    seed: u64,
    with_chi_square: bool,
) -> Result<GameResult, ExperimentError> {
    if pads.0 == pads.1 {
        return Err(ExperimentError::DegeneratePads(pads.0));
    }
    if trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    // All per-trial randomness is derived up front, so trials are
    // independent of one another and the loop is a plain fold in trial
    // order (parallel execution would commute).
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(bool, u64, u64, u64)> = (0..trials)
        .map(|_| {
            (
                master.gen_bool(0.5),
                master.gen(),
                master.gen(),
                master.gen(),
            )
        })
        .collect();
    let mut outcomes = Vec::with_capacity(trials as usize);
    let mut successes = 0;
    let mut guard_failures = 0;
    // Rows: pad arm; columns: category of the final local tape.
    let mut table = vec![vec![0u64; 9]; 2];
    for (trial, &(truth, model_seed, local_seed, input_seed)) in draws.iter().enumerate() {
        let trial = trial as u64;
        let pad = if truth { pads.1 } else { pads.0 };
        let (spec, input, bindings) = match detector {
            PadDetector::Standard(d) => d.instantiate(truth, input_seed),
            PadDetector::Machine(spec) => (spec.clone(), String::new(), Vec::new()),
        };
        let mut model = RelativeModel::init(
            ModelParams::new(spec, input, model_seed)
                .with_local_seed(local_seed)
                .with_mode(SnapshotMode::Summary)
                .with_padding(PaddingStrategy::Constant(pad))
                .with_oracles(bindings),
        )?;
        let run = model.run_local_steps(MAX_DETECTOR_LOCAL_STEPS);
        let guess = model.local_cell(0) == Symbol::ONE;
        let success = match run {
            Ok(_) => guess == truth,
            // Guarded access aborts the trial as an automatic failure,
            // whatever is on the tape.
            Err(ModelError::Guard(_)) => {
                guard_failures += 1;
                false
            }
            Err(e) => return Err(e.into()),
        };
        successes += success as u64;
        if with_chi_square {
            let cat = category_of(&model);
            table[truth as usize][cat] += 1;
        }
        outcomes.push(TrialOutcome {
            trial,
            truth,
            guess,
            success,
        });
    }
    Ok(GameResult {
        stat: StatReport::from_counts(successes, trials),
        chi_square: with_chi_square.then(|| chi_square_independence(&table)),
        guard_failures,
        outcomes,
    })
}

fn category_of(model: &RelativeModel) -> usize {
    let digit = |s: Symbol| match s {
        Symbol::ZERO => 1usize,
        Symbol::ONE => 2,
        _ => 0,
    };
    digit(model.local_cell(0)) * 3 + digit(model.local_cell(1))
}

/// The timing game: the adversary secretly pads every local update with one
/// of two equiprobable pad counts; the detector, run inside the model,
/// guesses which.
pub fn run_simtime_game(
    detector: Detector,
    pads: (u64, u64),
    trials: u64,
    seed: u64,
) -> Result<GameResult, ExperimentError> {
    run_pad_game(&PadDetector::Standard(detector), pads, trials, seed, false)
}

/// The probabilistic variant: same protocol, a (possibly probabilistic)
/// local machine as detector, plus a chi-square independence check between
/// the pad choice and the final local tape state.
pub fn run_psimtime_game(
    detector: PadDetector,
    pads: (u64, u64),
    trials: u64,
    seed: u64,
) -> Result<GameResult, ExperimentError> {
    run_pad_game(&detector, pads, trials, seed, true)
}

// ---------------------------------------------------------------------------
// MEASURE
// ---------------------------------------------------------------------------

/// The adversary's approximation of f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureApprox {
    /// f applied to the midpoint of the uncertainty interval: in-envelope
    /// at every measurement precision by construction.
    Midpoint,
    /// f(x) + delta: drops out of the envelope once the measurement gets
    /// finer than delta.
    Offset { delta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureParams {
    pub k_bits: u32,
    pub approx: MeasureApprox,
    pub trials: u64,
    pub seed: u64,
    /// f(x) = slope·x + intercept, slope > 0.
    pub slope: f64,
    pub intercept: f64,
}

impl MeasureParams {
    pub fn new(k_bits: u32, approx: MeasureApprox, trials: u64, seed: u64) -> MeasureParams {
        MeasureParams {
            k_bits,
            approx,
            trials,
            seed,
            slope: 2.0,
            intercept: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasureTrial {
    pub trial: u64,
    pub honest: bool,
    pub guessed_honest: bool,
    pub in_envelope: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureResult {
    pub stat: StatReport,
    pub approx_trials: u64,
    pub approx_caught: u64,
    /// Detector accuracy restricted to approximation trials.
    pub approx_accuracy: f64,
    /// Approximation trials whose value fell outside the envelope — the
    /// decidable cases, reported separately.
    pub envelope_violations: u64,
    #[serde(skip)]
    pub outcomes: Vec<MeasureTrial>,
}

/// The measurement game: each trial hides x, hands the interval-membership
/// detector only the k-bit truncation and a coin-flip choice of f(x) or
/// f̃(x), and scores its guess of which function ran.
pub fn run_measure_game(params: &MeasureParams) -> Result<MeasureResult, ExperimentError> {
    if params.trials == 0 {
        return Err(ExperimentError::NoTrials);
    }
    if params.slope <= 0.0 || params.slope.is_nan() {
        return Err(ExperimentError::Adversary(
            "measure game needs a strictly increasing f".into(),
        ));
    }
    if !(1..=52).contains(&params.k_bits) {
        return Err(ExperimentError::Adversary(
            "measurement precision must be 1..=52 fraction bits".into(),
        ));
    }
    let f = |x: f64| params.slope * x + params.intercept;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut outcomes = Vec::with_capacity(params.trials as usize);
    let mut successes = 0;
    let mut approx_trials = 0;
    let mut approx_caught = 0;
    let mut envelope_violations = 0;
    for trial in 0..params.trials {
        let x: f64 = rng.gen_range(0.0..1.0);
        let honest: bool = rng.gen_bool(0.5);
        let m = measure_with_uncertainty(x, params.k_bits);
        let y = if honest {
            f(x)
        } else {
            match params.approx {
                MeasureApprox::Midpoint => f((m.lo + m.hi) / 2.0),
                MeasureApprox::Offset { delta } => f(x) + delta,
            }
        };
        // The detector sees only (m, y): membership of y in f over the
        // uncertainty set.
        let in_envelope = f(m.lo) <= y && y < f(m.hi);
        let guessed_honest = in_envelope;
        let success = guessed_honest == honest;
        successes += success as u64;
        if !honest {
            approx_trials += 1;
            approx_caught += (!guessed_honest) as u64;
            envelope_violations += (!in_envelope) as u64;
        }
        outcomes.push(MeasureTrial {
            trial,
            honest,
            guessed_honest,
            in_envelope,
            success,
        });
    }
    Ok(MeasureResult {
        stat: StatReport::from_counts(successes, params.trials),
        approx_trials,
        approx_caught,
        approx_accuracy: if approx_trials == 0 {
            1.0
        } else {
            approx_caught as f64 / approx_trials as f64
        },
        envelope_violations,
        outcomes,
    })
}

// ---------------------------------------------------------------------------
// Spoof-accept
// ---------------------------------------------------------------------------

/// Exhaustive desk-scale enumeration of every candidate tape over the
/// non-blank alphabet: does the machine halt from all of them within the
/// horizon, and which accepting tape comes first lexicographically? Serves
/// as the independent oracle for the spoof search.
pub struct ExhaustiveCheck {
    pub all_halt: bool,
    pub first_accepting: Option<String>,
    pub accepting_count: u64,
    pub candidates: u64,
}

pub fn exhaustive_halt_check(
    spec: &MachineSpec,
    window: u64,
    horizon: u64,
) -> Result<ExhaustiveCheck, ExperimentError> {
    let symbols: Vec<Symbol> = spec.alphabet().non_blank().collect();
    let sigma = symbols.len() as u64;
    let total = sigma.pow(window.min(16) as u32);
    let mut all_halt = true;
    let mut first_accepting = None;
    let mut accepting_count = 0;
    for index in 0..total {
        let mut candidate = vec![symbols[0]; window as usize];
        let mut rem = index;
        for slot in candidate.iter_mut().rev() {
            *slot = symbols[(rem % sigma) as usize];
            rem /= sigma;
        }
        let mut config = MachineConfig {
            head: 0,
            state: spec.start(),
            tape: {
                let mut tape = Tape::new(spec.alphabet().clone());
                for (i, &s) in candidate.iter().enumerate() {
                    tape.apply_write(WriteOp {
                        symbol: s,
                        index: i as i64,
                        global_time: 0,
                    })
                    .map_err(ModelError::from)?;
                }
                tape
            },
        };
        let outcome = machine::run::<ChaCha8Rng>(spec, &mut config, horizon, None);
        match outcome {
            Ok(machine::RunOutcome::Halted { halt, .. }) => {
                if halt == Halt::Accept {
                    accepting_count += 1;
                    if first_accepting.is_none() {
                        first_accepting = Some(candidate.iter().map(|s| s.0).collect());
                    }
                }
            }
            Ok(machine::RunOutcome::Timeout { .. }) | Err(_) => all_halt = false,
        }
    }
    Ok(ExhaustiveCheck {
        all_halt,
        first_accepting,
        accepting_count,
        candidates: total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpoofScenarioReport {
    pub machine: String,
    pub input: String,
    pub horizon: u64,
    pub candidate_bound: u64,
    /// Verified caller assertion: the machine halts within the horizon from
    /// every candidate tape.
    pub halts_from_every_candidate: bool,
    pub spoof: SpoofReport,
    /// Local steps from install to ACCEPT, when the spoof succeeded.
    pub accepted_after_local_steps: Option<u64>,
    pub global_to_local_ratio: f64,
}

/// Run the spoof-accept demonstration end to end: verify the halting
/// assumption exhaustively, search and install, then let the machine accept
/// on its own.
pub fn run_spoof_accept_scenario(
    spec: MachineSpec,
    input: &str,
    horizon: u64,
    candidate_bound: u64,
    seed: u64,
    machine_name: &str,
) -> Result<SpoofScenarioReport, ExperimentError> {
    let window = input.chars().count().max(1) as u64;
    let check = exhaustive_halt_check(&spec, window, horizon)?;
    let mut model =
        RelativeModel::init(ModelParams::new(spec, input, seed).with_mode(SnapshotMode::Summary))?;
    let spoof = model.spoof_accept(horizon, candidate_bound)?;
    let mut accepted_after = None;
    if spoof.found {
        let mut steps = 0;
        while model.halted().is_none() && steps < horizon {
            model.advance_local()?;
            steps += 1;
        }
        if model.halted() == Some(Halt::Accept) {
            accepted_after = Some(steps);
        }
    }
    let local = spoof.install_local_steps.max(1);
    Ok(SpoofScenarioReport {
        machine: machine_name.to_string(),
        input: input.to_string(),
        horizon,
        candidate_bound,
        halts_from_every_candidate: check.all_halt,
        global_to_local_ratio: spoof.search_global_steps as f64 / local as f64,
        spoof,
        accepted_after_local_steps: accepted_after,
    })
}

// ---------------------------------------------------------------------------
// Oracle benchmark
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchOracle {
    Parity,
    Identity,
    Schrodinger { epsilon: f64, precision: u32 },
}

impl BenchOracle {
    fn name(&self) -> &'static str {
        match self {
            BenchOracle::Parity => "parity",
            BenchOracle::Identity => "identity",
            BenchOracle::Schrodinger { .. } => "schrodinger",
        }
    }
}

/// Per-query measurement used by the benchmark and the acceptance suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QueryCost {
    pub n: u64,
    pub local_steps: u64,
    pub global_steps: u64,
    pub output_cells_written: u64,
    pub scrap_cells: u64,
}

/// Run one query of `kind` at size `n` and measure its costs exactly.
pub fn measure_query(kind: BenchOracle, n: u64, seed: u64) -> Result<QueryCost, ExperimentError> {
    let (binding, input): (OracleBinding, String) = match kind {
        BenchOracle::Parity => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n);
            let input: String = (0..n)
                .map(|_| if rng.gen_bool(0.5) { '1' } else { '0' })
                .collect();
            (OracleBinding::parity(), input)
        }
        BenchOracle::Identity => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n);
            let input: String = (0..n)
                .map(|_| if rng.gen_bool(0.5) { '1' } else { '0' })
                .collect();
            (OracleBinding::identity(n as usize), input)
        }
        BenchOracle::Schrodinger { epsilon, precision } => {
            let n_qubits = n as u32;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n);
            let h = quantum::random_hermitian(n_qubits, &mut rng);
            let binding = quantum::schrodinger_oracle_binding(h, epsilon, precision)?;
            let psi = QuantumState::zero_basis(n_qubits);
            let codec = fixed::FixedPointCodec::new(precision)?;
            let mut bits = encode_state(&psi, &codec);
            bits.extend(fixed::f64_to_bits(0.7));
            let input: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            (binding, input)
        }
    };
    let arg_len = input.len() as u64;
    let out_len = binding.declared_output_len as u64;
    let spec = corpus::single_query(
        &binding.identifier.clone(),
        crate::tape::Interval::new(0, arg_len as i64),
        None,
    );
    let mut model = RelativeModel::init(
        ModelParams::new(spec, input, seed)
            .with_oracles(vec![binding])
            .with_local_len(arg_len + out_len + 8)
            .with_mode(SnapshotMode::Summary),
    )?;
    let report = model.advance_local()?;
    let trace = model.trace();
    let distinct_out: std::collections::BTreeSet<i64> =
        trace.write_ops[0].iter().map(|w| w.index).collect();
    Ok(QueryCost {
        n,
        local_steps: report.tau,
        global_steps: report.global_cost,
        output_cells_written: distinct_out.len() as u64,
        scrap_cells: trace.space_per_tau[0] - distinct_out.len() as u64,
    })
}

/// Benchmark a set of oracles across input sizes; each row is one query.
/// The profile constructor rejects any oracle whose local cost is not
/// identically constant.
///
/// Benchmark semantics: queries never add computational power with respect
/// to the global clock — the profiles quantify how much cost a
/// constant-local-time query shifts onto `t` (and onto scrap cells), which
/// is what distinguishes this arrangement from an oracle that answers for
/// free at every level.
pub fn run_oracle_benchmark(
    oracles: &[BenchOracle],
    sizes: &[u64],
    seed: u64,
) -> Result<Vec<ComplexityProfile>, ExperimentError> {
    let mut profiles = Vec::new();
    for &kind in oracles {
        let mut rows = Vec::new();
        for &n in sizes {
            let cost = measure_query(kind, n, seed)?;
            rows.push(ProfileRow {
                n,
                local_steps: cost.local_steps,
                global_steps: cost.global_steps,
                scrap_cells: cost.scrap_cells,
            });
        }
        profiles.push(metrics::complexity_profile(kind.name(), rows)?);
    }
    Ok(profiles)
}

// ---------------------------------------------------------------------------
// Schrödinger end-to-end scenario
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    PauliX,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerParams {
    pub n_qubits: u32,
    pub steps: u32,
    pub epsilon: f64,
    pub precision: u32,
    pub dtau: f64,
    pub mode: EvolutionMode,
    pub hamiltonian: HamiltonianChoice,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchrodingerStepRow {
    pub step: u32,
    pub k_tau: u64,
    pub gamma_t: u64,
    pub gamma_g: f64,
    /// ‖truncated − exact‖₂ on the float path (pure truncation error).
    pub float_deviation: f64,
    /// ‖decoded tape state − exact‖₂ (truncation plus quantization).
    pub tape_deviation: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchrodingerScenarioReport {
    pub n_qubits: u32,
    pub steps: u32,
    pub epsilon: f64,
    pub precision: u32,
    pub dtau: f64,
    pub mode: EvolutionMode,
    pub local_steps_used: u64,
    pub quantization_bound: f64,
    pub per_step: Vec<SchrodingerStepRow>,
    pub max_float_deviation: f64,
    pub max_tape_deviation: f64,
    pub max_norm_drift: f64,
    /// Final decoded state as [re, im] pairs.
    pub final_state: Vec<[f64; 2]>,
}

/// Drive a local machine that queries the Schrödinger oracle once per local
/// step along the grid `dtau, 2·dtau, …`, then compare every step against
/// the exact eigendecomposition route.
pub fn run_schrodinger_scenario(
    params: &SchrodingerParams,
) -> Result<SchrodingerScenarioReport, ExperimentError> {
    if params.n_qubits > quantum::MAX_QUBITS {
        return Err(QuantumError::DeskScale(params.n_qubits).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let h = match params.hamiltonian {
        HamiltonianChoice::PauliX => Hamiltonian::pauli_x(),
        HamiltonianChoice::Random => quantum::random_hermitian(params.n_qubits, &mut rng),
    };
    if h.n_qubits != params.n_qubits {
        return Err(ExperimentError::Adversary(format!(
            "hamiltonian is {} qubits but the scenario asks for {}",
            h.n_qubits, params.n_qubits
        )));
    }
    let codec = fixed::FixedPointCodec::new(params.precision)?;
    let psi0 = QuantumState::zero_basis(params.n_qubits);
    let psi_bits = state_bits(params.n_qubits, params.precision) as i64;
    let binding = schrodinger_driver_binding(
        h.clone(),
        params.epsilon,
        params.precision,
        params.dtau,
        params.mode,
    )?;

    let (arg, out, input_bits) = match params.mode {
        EvolutionMode::RestartFromInitial => {
            let (arg, out) = restart_driver_regions(params.n_qubits, params.precision);
            let mut bits = encode_state(&psi0, &codec);
            bits.extend(encode_state(&psi0, &codec));
            bits.extend(fixed::u32_to_bits(0));
            (arg, out, bits)
        }
        EvolutionMode::StepFromCurrent => (
            crate::tape::Interval::new(0, psi_bits),
            crate::tape::Interval::new(0, psi_bits),
            encode_state(&psi0, &codec),
        ),
    };
    let input: String = input_bits
        .iter()
        .map(|&b| if b { '1' } else { '0' })
        .collect();
    let spec = MachineSpec::new(
        vec!["query".into(), "accept".into(), "reject".into()],
        crate::machine::StateId(0),
        crate::machine::StateId(1),
        crate::machine::StateId(2),
        crate::tape::Alphabet::binary(),
        Default::default(),
        Default::default(),
        {
            let mut q = std::collections::BTreeMap::new();
            q.insert(
                crate::machine::StateId(0),
                crate::machine::QuerySpec {
                    oracle: binding.identifier.clone(),
                    arg,
                    out: Some(out),
                    next: None,
                },
            );
            q
        },
    )
    .expect("driver machine is valid");

    let mut model = RelativeModel::init(
        ModelParams::new(spec, input, params.seed)
            .with_oracles(vec![binding.clone()])
            .with_local_len(arg.len() + out.len() + 8)
            .with_mode(SnapshotMode::Summary),
    )?;

    // The oracle evolves what is actually on the tape: the quantized psi0.
    let psi0_tape = {
        let snap = model.local_snapshot();
        let bits: Vec<bool> = (0..psi_bits)
            .map(|i| snap.get(model.layout().local.start + i) == Symbol::ONE)
            .collect();
        decode_state(&bits, params.n_qubits, &codec)?
    };

    let dim = 1usize << params.n_qubits;
    let quantization_bound = codec.quantization_error() * ((2 * dim) as f64).sqrt();
    let out_offset = match params.mode {
        EvolutionMode::RestartFromInitial => psi_bits,
        EvolutionMode::StepFromCurrent => 0,
    };

    let mut per_step = Vec::new();
    let start_tau = model.tau();
    for step in 1..=params.steps {
        let report = model.advance_local()?;
        let tau_i = step as f64 * params.dtau;
        let snap = model.local_snapshot();
        let bits: Vec<bool> = (0..psi_bits)
            .map(|i| snap.get(model.layout().local.start + out_offset + i) == Symbol::ONE)
            .collect();
        let psi_tape = decode_state(&bits, params.n_qubits, &codec)?;
        let exact = evolve_exact(&psi0_tape, &h, tau_i)?;
        let truncated = evolve(&psi0_tape, &h, &EvolutionParams::new(tau_i, params.epsilon))?;
        let trace = model.trace();
        let j = trace.k.len() - 1;
        let gamma_g = if j == 0 {
            trace.space_per_tau[0] as f64 / binding.declared_output_len as f64
        } else {
            (trace.space_per_tau[j] as i64 - trace.space_per_tau[j - 1] as i64) as f64
                / binding.declared_output_len as f64
        };
        per_step.push(SchrodingerStepRow {
            step,
            k_tau: report.k,
            gamma_t: report.global_cost,
            gamma_g,
            float_deviation: quantum::distance(&truncated, &exact),
            tape_deviation: quantum::distance(&psi_tape, &exact),
            norm_drift: (quantum::norm(&psi_tape) - 1.0).abs(),
        });
    }
    let final_state = {
        let snap = model.local_snapshot();
        let bits: Vec<bool> = (0..psi_bits)
            .map(|i| snap.get(model.layout().local.start + out_offset + i) == Symbol::ONE)
            .collect();
        decode_state(&bits, params.n_qubits, &codec)?
            .amplitudes
            .iter()
            .map(|z| [z.re, z.im])
            .collect()
    };
    let maxf = per_step
        .iter()
        .map(|r| r.float_deviation)
        .fold(0.0, f64::max);
    let maxt = per_step
        .iter()
        .map(|r| r.tape_deviation)
        .fold(0.0, f64::max);
    let maxn = per_step.iter().map(|r| r.norm_drift).fold(0.0, f64::max);
    Ok(SchrodingerScenarioReport {
        n_qubits: params.n_qubits,
        steps: params.steps,
        epsilon: params.epsilon,
        precision: params.precision,
        dtau: params.dtau,
        mode: params.mode,
        local_steps_used: model.tau() - start_tau,
        quantization_bound,
        per_step,
        max_float_deviation: maxf,
        max_tape_deviation: maxt,
        max_norm_drift: maxn,
        final_state,
    })
}

// ---------------------------------------------------------------------------
// Scenario file dispatch
// ---------------------------------------------------------------------------

/// A scenario configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<String>,
    #[serde(default)]
    pub adversary: serde_json::Value,
    #[serde(default = "default_trials")]
    pub trials: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_trials() -> u64 {
    1
}

impl ScenarioFile {
    pub fn from_json(json: &str) -> Result<ScenarioFile, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Typed results of a scenario run.
#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioOutcome {
    Game {
        detector: String,
        #[serde(flatten)]
        game: GameResult,
    },
    Measure(MeasureResult),
    Spoof(SpoofScenarioReport),
    Benchmark {
        profiles: Vec<ComplexityProfile>,
    },
    Schrodinger(SchrodingerScenarioReport),
}

#[derive(Deserialize)]
struct PadsAdversary {
    pads: [u64; 2],
}

#[derive(Deserialize)]
struct MeasureAdversary {
    approx: String,
    #[serde(default)]
    delta: Option<f64>,
    k_bits: u32,
}

#[derive(Deserialize)]
struct SpoofAdversary {
    machine: String,
    input: String,
    horizon: u64,
    candidate_bound: u64,
}

#[derive(Deserialize)]
struct BenchAdversary {
    oracles: Vec<String>,
    sizes: Vec<u64>,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_precision")]
    precision: u32,
}

fn default_epsilon() -> f64 {
    1e-9
}

fn default_precision() -> u32 {
    16
}

#[derive(Deserialize)]
struct SchrodingerAdversary {
    n_qubits: u32,
    steps: u32,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_precision")]
    precision: u32,
    dtau: f64,
    #[serde(default = "default_mode")]
    mode: String,
    #[serde(default = "default_hamiltonian")]
    hamiltonian: String,
}

fn default_mode() -> String {
    "restart".into()
}

fn default_hamiltonian() -> String {
    "random".into()
}

fn adversary<T: serde::de::DeserializeOwned>(
    value: &serde_json::Value,
) -> Result<T, ExperimentError> {
    serde_json::from_value(value.clone()).map_err(|e| ExperimentError::Adversary(e.to_string()))
}

/// Dispatch a parsed scenario file.
pub fn run_scenario(file: &ScenarioFile) -> Result<ScenarioOutcome, ExperimentError> {
    match file.scenario.as_str() {
        "simtime" | "psimtime" => {
            let adv: PadsAdversary = adversary(&file.adversary)?;
            let pads = (adv.pads[0], adv.pads[1]);
            let name = file.detector.as_deref().unwrap_or("constant");
            if file.scenario == "simtime" {
                let detector = Detector::by_name(name)
                    .ok_or_else(|| ExperimentError::UnknownDetector(name.into()))?;
                let game = run_simtime_game(detector, pads, file.trials, file.seed)?;
                Ok(ScenarioOutcome::Game {
                    detector: name.into(),
                    game,
                })
            } else {
                let detector = if let Some(d) = Detector::by_name(name) {
                    PadDetector::Standard(d)
                } else if let Some(spec) = local_machine_by_name(name) {
                    PadDetector::Machine(spec)
                } else {
                    return Err(ExperimentError::UnknownDetector(name.into()));
                };
                let game = run_psimtime_game(detector, pads, file.trials, file.seed)?;
                Ok(ScenarioOutcome::Game {
                    detector: name.into(),
                    game,
                })
            }
        }
        "measure" => {
            let adv: MeasureAdversary = adversary(&file.adversary)?;
            let approx = match adv.approx.as_str() {
                "midpoint" => MeasureApprox::Midpoint,
                "offset" => MeasureApprox::Offset {
                    delta: adv.delta.ok_or_else(|| {
                        ExperimentError::Adversary("offset approximation needs `delta`".into())
                    })?,
                },
                other => {
                    return Err(ExperimentError::Adversary(format!(
                        "unknown approximation `{other}`"
                    )))
                }
            };
            let params = MeasureParams::new(adv.k_bits, approx, file.trials, file.seed);
            Ok(ScenarioOutcome::Measure(run_measure_game(&params)?))
        }
        "spoof_accept" => {
            let adv: SpoofAdversary = adversary(&file.adversary)?;
            let spec = local_machine_by_name(&adv.machine)
                .ok_or_else(|| ExperimentError::UnknownMachine(adv.machine.clone()))?;
            Ok(ScenarioOutcome::Spoof(run_spoof_accept_scenario(
                spec,
                &adv.input,
                adv.horizon,
                adv.candidate_bound,
                file.seed,
                &adv.machine,
            )?))
        }
        "oracle_benchmark" => {
            let adv: BenchAdversary = adversary(&file.adversary)?;
            let kinds: Vec<BenchOracle> = adv
                .oracles
                .iter()
                .map(|name| match name.as_str() {
                    "parity" => Ok(BenchOracle::Parity),
                    "identity" => Ok(BenchOracle::Identity),
                    "schrodinger" => Ok(BenchOracle::Schrodinger {
                        epsilon: adv.epsilon,
                        precision: adv.precision,
                    }),
                    other => Err(ExperimentError::UnknownBenchOracle(other.into())),
                })
                .collect::<Result<_, _>>()?;
            Ok(ScenarioOutcome::Benchmark {
                profiles: run_oracle_benchmark(&kinds, &adv.sizes, file.seed)?,
            })
        }
        "schrodinger" => {
            let adv: SchrodingerAdversary = adversary(&file.adversary)?;
            let mode = match adv.mode.as_str() {
                "restart" | "restart_from_initial" => EvolutionMode::RestartFromInitial,
                "step" | "step_from_current" => EvolutionMode::StepFromCurrent,
                other => {
                    return Err(ExperimentError::Adversary(format!(
                        "unknown evolution mode `{other}`"
                    )))
                }
            };
            let hamiltonian = match adv.hamiltonian.as_str() {
                "pauli_x" => HamiltonianChoice::PauliX,
                "random" => HamiltonianChoice::Random,
                other => {
                    return Err(ExperimentError::Adversary(format!(
                        "unknown hamiltonian `{other}`"
                    )))
                }
            };
            let params = SchrodingerParams {
                n_qubits: adv.n_qubits,
                steps: adv.steps,
                epsilon: adv.epsilon,
                precision: adv.precision,
                dtau: adv.dtau,
                mode,
                hamiltonian,
                seed: file.seed,
            };
            Ok(ScenarioOutcome::Schrodinger(run_schrodinger_scenario(
                &params,
            )?))
        }
        other => Err(ExperimentError::UnknownScenario(other.into())),
    }
}

/// FNV-1a over the raw config text; embedded in reports so a rerun can be
/// checked against the exact configuration that produced it.
pub fn config_hash(text: &str) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
