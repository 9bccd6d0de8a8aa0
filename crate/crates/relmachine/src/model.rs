//! The nested simulator: a global interpreter advances the global clock one
//! micro-operation at a time, simulates the local machine encoded on its
//! tape, services oracle queries in one local step, and records the full
//! instrumentation trace.
//!
//! The reference global machine is a direct interpreter: one local
//! transition costs exactly one global step. Everything slower than that is
//! an explicit strategy plugin (padding, approximation, spoofing), never
//! hidden behavior.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::machine::codec::{decode_machine, encode_machine, MalformedEncoding};
use crate::machine::{self, Halt, MachineConfig, MachineSpec, Move, StateId};
use crate::oracle::{OracleBinding, OracleFailure};
use crate::tape::{
    Actor, Alphabet, GuardViolation, Interval, LayoutError, Symbol, Tape, TapeError, TapeLayout,
    WriteOp,
};
use crate::trace::{OpKind, RngDraw, RngDrawKind, SnapshotMode, StepRecord, Trace};

/// Adversarial padding: how many busywork global steps the global machine
/// inserts before each local update. The local tape and machine state are
/// untouched at every recorded update time, whatever the distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PaddingStrategy {
    None,
    Constant(u64),
    /// Uniform over `lo..=hi`.
    Uniform {
        lo: u64,
        hi: u64,
    },
    /// Uniform over the listed values.
    Choice(Vec<u64>),
    /// Explicit per-local-step schedule; zero beyond the end.
    Schedule(Vec<u64>),
}

impl PaddingStrategy {
    fn sample(&self, rng: &mut ChaCha8Rng, step_index: u64) -> (u64, bool) {
        match self {
            PaddingStrategy::None => (0, false),
            PaddingStrategy::Constant(n) => (*n, false),
            PaddingStrategy::Uniform { lo, hi } => (rng.gen_range(*lo..=*hi), true),
            PaddingStrategy::Choice(values) => (values[rng.gen_range(0..values.len())], true),
            PaddingStrategy::Schedule(values) => {
                (values.get(step_index as usize).copied().unwrap_or(0), false)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error("{what} needs {needed} cells but only {available} are available")]
    LayoutTooSmall {
        what: &'static str,
        needed: u64,
        available: u64,
    },
    #[error("local input symbol `{0}` is not in the local alphabet")]
    InputSymbol(Symbol),
    #[error("local alphabet is not a subset of the global alphabet")]
    AlphabetMismatch,
    #[error(transparent)]
    Malformed(#[from] MalformedEncoding),
    #[error(transparent)]
    Guard(#[from] GuardViolation),
    #[error("run aborted by an earlier guard violation")]
    Aborted,
    #[error("local machine already halted ({0:?})")]
    LocalHalted(Halt),
    #[error("transition undefined on (state {state}, symbol `{symbol}`)")]
    UndefinedTransition { state: String, symbol: Symbol },
    #[error(transparent)]
    Oracle(#[from] OracleFailure),
    #[error(transparent)]
    Tape(#[from] TapeError),
    #[error("spoof search requires a deterministic, query-free local machine")]
    SpoofUnsupported,
    #[error("operation requires the interpreter to be between local steps")]
    MidStep,
}

/// Completion role of a global-machine write into the local region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WriteRole {
    Intermediate,
    /// Last write of a local update. `next` switches the local state; `None`
    /// keeps the current state (query self-loop, spoof install).
    Completes {
        next: Option<StateId>,
    },
}

#[derive(Debug, Clone)]
enum MicroOp {
    Pad,
    Apply {
        write: Symbol,
        mv: Move,
        next: StateId,
    },
    FetchRead {
        cell: i64,
    },
    ScrapWrite {
        offset: u64,
        symbol: Symbol,
    },
    /// A run of `total` elementary compute operations cycling over
    /// `workspace` scrap cells from `base`. Still one scrap write per
    /// global step — the op re-queues itself — but queued in constant
    /// space, so a 4^n-cost evaluation does not materialize 4^n queue
    /// entries.
    ComputeBurst {
        done: u64,
        total: u64,
        base: u64,
        workspace: u64,
    },
    LocalWrite {
        cell: i64,
        symbol: Symbol,
        role: WriteRole,
    },
}

/// Construction parameters for a relative model.
pub struct ModelParams {
    pub local_spec: MachineSpec,
    pub local_input: String,
    pub oracles: Vec<OracleBinding>,
    pub seed: u64,
    /// Separate seed for the local machine's own probabilistic transitions;
    /// defaults to a stream derived from `seed`. Fixing it pins the local
    /// frame across padding strategies.
    pub local_seed: Option<u64>,
    pub snapshot_mode: SnapshotMode,
    pub padding: PaddingStrategy,
    /// Explicit region placement; derived from the spec and input when
    /// absent.
    pub layout: Option<TapeLayout>,
    /// Local region size when the layout is derived.
    pub local_len: Option<u64>,
    /// Where, inside the local region, the input and the head start.
    /// Centering it gives wandering machines room on both sides.
    pub input_offset: u64,
}

impl ModelParams {
    pub fn new(local_spec: MachineSpec, local_input: impl Into<String>, seed: u64) -> ModelParams {
        ModelParams {
            local_spec,
            local_input: local_input.into(),
            oracles: Vec::new(),
            seed,
            local_seed: None,
            snapshot_mode: SnapshotMode::Full,
            padding: PaddingStrategy::None,
            layout: None,
            local_len: None,
            input_offset: 0,
        }
    }

    pub fn with_oracles(mut self, oracles: Vec<OracleBinding>) -> Self {
        self.oracles = oracles;
        self
    }

    pub fn with_padding(mut self, padding: PaddingStrategy) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_mode(mut self, mode: SnapshotMode) -> Self {
        self.snapshot_mode = mode;
        self
    }

    pub fn with_local_len(mut self, len: u64) -> Self {
        self.local_len = Some(len);
        self
    }

    pub fn with_layout(mut self, layout: TapeLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn with_local_seed(mut self, seed: u64) -> Self {
        self.local_seed = Some(seed);
        self
    }

    pub fn with_input_offset(mut self, offset: u64) -> Self {
        self.input_offset = offset;
        self
    }
}

/// Outcome of one completed local step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalStepReport {
    pub tau: u64,
    /// Global time at which the update completed (k_τ).
    pub k: u64,
    /// Global steps this update consumed.
    pub global_cost: u64,
    pub halted: Option<Halt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub local_steps: u64,
    pub halted: Option<Halt>,
}

/// Result of a spoof-accept search.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SpoofReport {
    pub found: bool,
    pub installed: Option<String>,
    pub candidates_tried: u64,
    /// Global steps spent staging and simulating candidates plus installing
    /// the winner.
    pub search_global_steps: u64,
    /// Local steps the install consumed (always 1 when found).
    pub install_local_steps: u64,
}

/// The relative model: global interpreter state, the shared tape, both
/// clocks, and the trace.
pub struct RelativeModel {
    local_spec: MachineSpec,
    layout: TapeLayout,
    tape: Tape,
    t: u64,
    tau: u64,
    tau_tilde: u64,
    local_head: i64,
    local_state: StateId,
    halted: Option<Halt>,
    aborted: bool,
    oracles: BTreeMap<String, OracleBinding>,
    padding: PaddingStrategy,
    rng_global: ChaCha8Rng,
    rng_local: ChaCha8Rng,
    queue: VecDeque<MicroOp>,
    trace: Trace,
    mode: SnapshotMode,
    // Open-interval accumulators, moved into the trace at each completion.
    current_runtime: Vec<crate::tape::TapeState>,
    current_runtime_len: u64,
    current_writes: Vec<WriteOp>,
    touched_scrap: BTreeSet<i64>,
    written_local: BTreeSet<i64>,
    input_len: u64,
    input_offset: u64,
}

/// Scrap offsets used by the reference schedules.
const PAD_CELL: u64 = 0;
const FETCH_BASE: u64 = 1;

impl RelativeModel {
    /// Build a model: encode the local machine into the encoding region,
    /// decode it back off the tape, write the input into the local region,
    /// and start both clocks at zero with an empty trace.
    pub fn init(params: ModelParams) -> Result<RelativeModel, ModelError> {
        let ModelParams {
            local_spec,
            local_input,
            oracles,
            seed,
            local_seed,
            snapshot_mode,
            padding,
            layout,
            local_len,
            input_offset,
        } = params;

        let global_alphabet = Alphabet::global();
        if !local_spec.alphabet().is_subset_of(&global_alphabet) {
            return Err(ModelError::AlphabetMismatch);
        }
        let encoding_bits = encode_machine(&local_spec);
        let input_symbols: Vec<Symbol> = local_input.chars().map(Symbol).collect();
        for &s in &input_symbols {
            if !local_spec.alphabet().contains(s) {
                return Err(ModelError::InputSymbol(s));
            }
        }

        let layout = match layout {
            Some(l) => l,
            None => {
                let local =
                    local_len.unwrap_or_else(|| (input_symbols.len() as u64 * 2 + 64).max(256));
                TapeLayout::contiguous(encoding_bits.len() as u64, local, 64)
            }
        };
        layout.check()?;
        if (encoding_bits.len() as u64) > layout.encoding.len() {
            return Err(ModelError::LayoutTooSmall {
                what: "machine encoding",
                needed: encoding_bits.len() as u64,
                available: layout.encoding.len(),
            });
        }
        if input_offset + input_symbols.len() as u64 > layout.local.len() {
            return Err(ModelError::LayoutTooSmall {
                what: "local input",
                needed: input_offset + input_symbols.len() as u64,
                available: layout.local.len(),
            });
        }

        let mut tape = Tape::new(global_alphabet);
        tape.bulk_load(
            encoding_bits
                .iter()
                .enumerate()
                .map(|(i, &bit)| (layout.encoding.start + i as i64, Symbol::from_bit(bit)))
                .chain(
                    input_symbols
                        .iter()
                        .enumerate()
                        .map(|(i, &s)| (layout.local.start + input_offset as i64 + i as i64, s)),
                ),
        )?;

        // The spec the interpreter runs is the one decoded off the tape:
        // the written bits are the contiguous non-blank prefix of the
        // encoding region.
        let mut stored_bits = Vec::with_capacity(encoding_bits.len());
        for (expected, (cell, symbol)) in
            (layout.encoding.start..).zip(tape.region_support(&layout.encoding))
        {
            if cell != expected {
                break;
            }
            match symbol.as_bit() {
                Some(b) => stored_bits.push(b),
                None => break,
            }
        }
        let local_spec = decode_machine(&stored_bits)?;

        let mut seeder = ChaCha8Rng::seed_from_u64(seed);
        let global_stream: u64 = seeder.gen();
        let local_stream: u64 = local_seed.unwrap_or_else(|| seeder.gen());

        let mut trace = Trace::new(layout.clone(), snapshot_mode);
        trace
            .local_snapshots
            .push(tape.snapshot(Some(&layout.local)));
        trace
            .local_states
            .push(local_spec.state_name(local_spec.start()).to_string());

        Ok(RelativeModel {
            local_head: layout.local.start + input_offset as i64,
            local_state: local_spec.start(),
            halted: None,
            aborted: false,
            oracles: oracles
                .into_iter()
                .map(|b| (b.identifier.clone(), b))
                .collect(),
            padding,
            rng_global: ChaCha8Rng::seed_from_u64(global_stream),
            rng_local: ChaCha8Rng::seed_from_u64(local_stream),
            queue: VecDeque::new(),
            trace,
            mode: snapshot_mode,
            current_runtime: Vec::new(),
            current_runtime_len: 0,
            current_writes: Vec::new(),
            touched_scrap: BTreeSet::new(),
            written_local: BTreeSet::new(),
            input_len: input_symbols.len() as u64,
            input_offset,
            local_spec,
            layout,
            tape,
            t: 0,
            tau: 0,
            tau_tilde: 0,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn tau_tilde(&self) -> u64 {
        self.tau_tilde
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn layout(&self) -> &TapeLayout {
        &self.layout
    }

    pub fn local_spec(&self) -> &MachineSpec {
        &self.local_spec
    }

    pub fn halted(&self) -> Option<Halt> {
        self.halted
    }

    pub fn local_state(&self) -> StateId {
        self.local_state
    }

    pub fn local_state_name(&self) -> &str {
        self.local_spec.state_name(self.local_state)
    }

    /// Local tape state S′ right now.
    pub fn local_snapshot(&self) -> crate::tape::TapeState {
        self.tape.snapshot(Some(&self.layout.local))
    }

    /// Symbol at a local-coordinate cell of S′.
    pub fn local_cell(&self, offset: i64) -> Symbol {
        self.tape.read(self.layout.local.start + offset)
    }

    /// Snapshots accumulated in the currently open runtime set.
    pub fn open_runtime_len(&self) -> u64 {
        self.current_runtime_len
    }

    /// Install or replace the adversarial padding strategy.
    pub fn set_padding(&mut self, padding: PaddingStrategy) {
        self.padding = padding;
    }

    fn record_step(&mut self, actor: Actor, op: OpKind, cell: i64, symbol: Option<Symbol>) {
        if self.mode == SnapshotMode::Full {
            self.trace.step_log.push(StepRecord {
                t: self.t,
                actor,
                op,
                cell,
                symbol: symbol.map(|s| s.0),
                state: self.local_state_name().to_string(),
                tau: self.tau,
                tau_tilde: self.tau_tilde,
            });
        }
    }

    fn write_scrap(&mut self, offset: u64, symbol: Symbol) -> Result<i64, ModelError> {
        let cell = self.layout.scrap.start + offset as i64;
        self.layout.ensure_scrap_contains(cell);
        self.tape.apply_write(WriteOp {
            symbol,
            index: cell,
            global_time: self.t,
        })?;
        self.touched_scrap.insert(cell);
        Ok(cell)
    }

    fn write_local(&mut self, cell: i64, symbol: Symbol) -> Result<(), ModelError> {
        let op = WriteOp {
            symbol,
            index: cell,
            global_time: self.t,
        };
        self.tape.apply_write(op)?;
        self.current_writes.push(op);
        self.written_local.insert(cell);
        self.tau_tilde += 1;
        self.trace.k_tilde.push(self.t);
        Ok(())
    }

    /// Close the current interval: push k_τ, freeze the runtime set, write
    /// ops, and space footprint, and snapshot the local frame.
    fn complete_update(&mut self) {
        self.tau += 1;
        self.trace.k.push(self.t);
        self.trace.runtime_set_sizes.push(self.current_runtime_len);
        if self.mode == SnapshotMode::Full {
            self.trace
                .runtime_sets
                .push(std::mem::take(&mut self.current_runtime));
        }
        self.current_runtime_len = 0;
        self.trace
            .write_ops
            .push(std::mem::take(&mut self.current_writes));
        let g = self.touched_scrap.len() as u64 + self.written_local.len() as u64;
        self.trace.space_per_tau.push(g);
        self.touched_scrap.clear();
        self.written_local.clear();
        self.trace
            .local_snapshots
            .push(self.tape.snapshot(Some(&self.layout.local)));
        self.trace
            .local_states
            .push(self.local_state_name().to_string());
        if self.local_spec.is_halt(self.local_state) {
            self.halted = Some(if self.local_state == self.local_spec.accept() {
                Halt::Accept
            } else {
                Halt::Reject
            });
        }
    }

    /// Plan the next local update: sampled padding, then either one direct
    /// transition application or the full oracle schedule.
    fn schedule(&mut self) -> Result<(), ModelError> {
        if let Some(h) = self.halted {
            return Err(ModelError::LocalHalted(h));
        }
        let (pads, sampled) = self.padding.sample(&mut self.rng_global, self.tau);
        if sampled {
            self.trace.rng_log.push(RngDraw {
                tau: self.tau,
                kind: RngDrawKind::PadSample,
                value: pads,
            });
        }
        for _ in 0..pads {
            self.queue.push_back(MicroOp::Pad);
        }
        if let Some(query) = self.local_spec.query_spec(self.local_state) {
            let query = query.clone();
            self.schedule_query(&query)?;
        } else {
            self.schedule_transition()?;
        }
        Ok(())
    }

    fn schedule_transition(&mut self) -> Result<(), ModelError> {
        let symbol = self.tape.read(self.local_head);
        let transition = if let Some(t) = self
            .local_spec
            .transitions()
            .get(&(self.local_state, symbol))
        {
            *t
        } else if let Some(dist) = self
            .local_spec
            .probabilistic()
            .get(&(self.local_state, symbol))
        {
            let draw: f64 = self.rng_local.gen();
            self.trace.rng_log.push(RngDraw {
                tau: self.tau,
                kind: RngDrawKind::LocalTransition,
                value: draw.to_bits(),
            });
            dist.pick(draw)
        } else {
            return Err(ModelError::UndefinedTransition {
                state: self.local_state_name().to_string(),
                symbol,
            });
        };
        self.queue.push_back(MicroOp::Apply {
            write: transition.write,
            mv: transition.mv,
            next: transition.next,
        });
        Ok(())
    }

    fn schedule_query(&mut self, query: &machine::QuerySpec) -> Result<(), ModelError> {
        let name = query.oracle.clone();
        let binding = self
            .oracles
            .get(&name)
            .ok_or_else(|| OracleFailure::UnknownOracle(name.clone()))?
            .clone();
        let arg_abs = Interval::new(
            self.layout.local.start + query.arg.start,
            self.layout.local.start + query.arg.end,
        );
        if !self.layout.local.contains_interval(&arg_abs) || arg_abs.is_empty() {
            return Err(OracleFailure::ArgOutsideLocal(name).into());
        }
        let mut input = Vec::with_capacity(arg_abs.len() as usize);
        for cell in arg_abs.cells() {
            match self.tape.read(cell).as_bit() {
                Some(b) => input.push(b),
                None => return Err(OracleFailure::NonBinaryArgument(name, cell).into()),
            }
        }
        let output =
            binding
                .evaluator
                .evaluate(&input)
                .map_err(|reason| OracleFailure::Evaluator {
                    name: name.clone(),
                    reason,
                })?;
        if output.len() != binding.declared_output_len {
            return Err(OracleFailure::OutputLength {
                name,
                produced: output.len(),
                declared: binding.declared_output_len,
            }
            .into());
        }
        let out_local = query.out.unwrap_or(Interval::new(
            query.arg.start,
            query.arg.start + output.len() as i64,
        ));
        let out_abs = Interval::new(
            self.layout.local.start + out_local.start,
            self.layout.local.start + out_local.end,
        );
        if !self.layout.local.contains_interval(&out_abs) || out_abs.len() != output.len() as u64 {
            return Err(OracleFailure::OutputOverflow(name).into());
        }
        let cost = binding.evaluator.cost(&input);

        // Fetch: read each argument cell, copy it into the scrap fetch area.
        for (i, cell) in arg_abs.cells().enumerate() {
            self.queue.push_back(MicroOp::FetchRead { cell });
            self.queue.push_back(MicroOp::ScrapWrite {
                offset: FETCH_BASE + i as u64,
                symbol: Symbol::from_bit(input[i]),
            });
        }
        // Compute: elementary operations cycling over the declared workspace.
        if cost.steps > 0 {
            self.queue.push_back(MicroOp::ComputeBurst {
                done: 0,
                total: cost.steps,
                base: FETCH_BASE + input.len() as u64,
                workspace: cost.workspace_cells.max(1),
            });
        }
        // Write-out: the last output bit completes the local step.
        for (i, &bit) in output.iter().enumerate() {
            let role = if i + 1 == output.len() {
                WriteRole::Completes { next: query.next }
            } else {
                WriteRole::Intermediate
            };
            self.queue.push_back(MicroOp::LocalWrite {
                cell: out_abs.start + i as i64,
                symbol: Symbol::from_bit(bit),
                role,
            });
        }
        Ok(())
    }

    /// Execute exactly one global-machine micro-operation: the global clock
    /// advances by one, the snapshot and write logs are updated, and — only
    /// if this step finished a local update — the local clock ticks.
    pub fn global_step(&mut self) -> Result<(), ModelError> {
        if self.aborted {
            return Err(ModelError::Aborted);
        }
        if self.queue.is_empty() {
            self.schedule().inspect_err(|e| {
                if matches!(e, ModelError::Guard(_)) {
                    self.aborted = true;
                }
            })?;
        }
        let op = self.queue.pop_front().expect("schedule filled the queue");

        // Guard check before anything happens: a violating access aborts
        // the run without executing.
        if let MicroOp::Apply { mv, .. } = &op {
            let target = self.local_head + mv.offset();
            if let Err(v) = self
                .layout
                .authorize(Actor::Local, self.local_head)
                .and_then(|()| self.layout.authorize(Actor::Local, target))
            {
                self.aborted = true;
                return Err(v.into());
            }
        }

        self.t += 1;
        let mut completed = false;
        let (actor, kind, cell, symbol) = match op {
            MicroOp::Pad => {
                let cell = self.write_scrap(PAD_CELL, Symbol::PAD)?;
                (Actor::Global, OpKind::Pad, cell, Symbol::PAD)
            }
            MicroOp::Apply { write, mv, next } => {
                let cell = self.local_head;
                self.write_local(cell, write)?;
                self.local_head += mv.offset();
                self.local_state = next;
                completed = true;
                (Actor::Local, OpKind::Apply, cell, write)
            }
            MicroOp::FetchRead { cell } => {
                let symbol = self.tape.read(cell);
                (Actor::Global, OpKind::Read, cell, symbol)
            }
            MicroOp::ScrapWrite { offset, symbol } => {
                let cell = self.write_scrap(offset, symbol)?;
                (Actor::Global, OpKind::WriteScrap, cell, symbol)
            }
            MicroOp::ComputeBurst {
                done,
                total,
                base,
                workspace,
            } => {
                let symbol = Symbol::from_bit(done % 2 == 1);
                let cell = self.write_scrap(base + done % workspace, symbol)?;
                if done + 1 < total {
                    self.queue.push_front(MicroOp::ComputeBurst {
                        done: done + 1,
                        total,
                        base,
                        workspace,
                    });
                }
                (Actor::Global, OpKind::WriteScrap, cell, symbol)
            }
            MicroOp::LocalWrite { cell, symbol, role } => {
                self.write_local(cell, symbol)?;
                if let WriteRole::Completes { next } = role {
                    if let Some(next) = next {
                        self.local_state = next;
                    }
                    completed = true;
                }
                (Actor::Global, OpKind::WriteLocal, cell, symbol)
            }
        };

        if completed {
            self.complete_update();
        } else {
            self.current_runtime_len += 1;
            if self.mode == SnapshotMode::Full {
                self.current_runtime.push(self.tape.snapshot(None));
            }
        }
        // Recorded after all clock bookkeeping: the step's tau/tau_tilde are
        // the values in force once the step is done.
        self.record_step(actor, kind, cell, Some(symbol));
        Ok(())
    }

    /// Run global steps until the local transition function's output is in
    /// place and the local clock has ticked once.
    pub fn advance_local(&mut self) -> Result<LocalStepReport, ModelError> {
        if let Some(h) = self.halted {
            return Err(ModelError::LocalHalted(h));
        }
        let start_tau = self.tau;
        let start_t = self.t;
        while self.tau == start_tau {
            self.global_step()?;
        }
        Ok(LocalStepReport {
            tau: self.tau,
            k: self.t,
            global_cost: self.t - start_t,
            halted: self.halted,
        })
    }

    /// Service one oracle query: the local machine must currently sit in a
    /// query state bound to `oracle_id`. The whole query — fetch, compute,
    /// write-out — costs exactly one local step.
    pub fn query_oracle(&mut self, oracle_id: &str) -> Result<LocalStepReport, ModelError> {
        match self.local_spec.query_spec(self.local_state) {
            Some(q) if q.oracle == oracle_id => self.advance_local(),
            Some(q) => Err(OracleFailure::UnknownOracle(format!(
                "state is bound to `{}`, not `{oracle_id}`",
                q.oracle
            ))
            .into()),
            None => Err(OracleFailure::UnknownOracle(format!(
                "local state `{}` is not a query state",
                self.local_state_name()
            ))
            .into()),
        }
    }

    /// Advance up to `max_local_steps` local steps or until the local
    /// machine halts.
    pub fn run_local_steps(&mut self, max_local_steps: u64) -> Result<RunSummary, ModelError> {
        let mut done = 0;
        while done < max_local_steps {
            if self.halted.is_some() {
                break;
            }
            self.advance_local()?;
            done += 1;
        }
        Ok(RunSummary {
            local_steps: done,
            halted: self.halted,
        })
    }

    /// Brute-force a local tape state that forces the local machine to
    /// accept within `horizon` local steps, then install it as the next
    /// local update — one local step, however long the search took.
    ///
    /// Candidates are drawn from the non-blank local alphabet over the
    /// input-sized window, in lexicographic order, at most `candidate_bound`
    /// of them. The search is staged and simulated in the scrap region; the
    /// caller asserts the machine halts within `horizon` from any candidate.
    pub fn spoof_accept(
        &mut self,
        horizon: u64,
        candidate_bound: u64,
    ) -> Result<SpoofReport, ModelError> {
        if !self.queue.is_empty() {
            return Err(ModelError::MidStep);
        }
        if let Some(h) = self.halted {
            return Err(ModelError::LocalHalted(h));
        }
        if self.local_spec.has_queries() || self.local_spec.has_probabilistic() {
            return Err(ModelError::SpoofUnsupported);
        }
        let window = self.input_len.max(1);
        let window_start = self.layout.local.start + self.input_offset as i64;
        let symbols: Vec<Symbol> = self.local_spec.alphabet().non_blank().collect();
        let sigma = symbols.len() as u64;
        let total = sigma.checked_pow(window.min(32) as u32).unwrap_or(u64::MAX);
        let head_offset = self.local_head - window_start;
        let search_start_t = self.t;

        let mut winner: Option<Vec<Symbol>> = None;
        let mut tried = 0;
        for index in 0..total.min(candidate_bound) {
            tried += 1;
            // Decode the candidate: leftmost window cell is the most
            // significant digit.
            let mut candidate = vec![symbols[0]; window as usize];
            let mut rem = index;
            for slot in candidate.iter_mut().rev() {
                *slot = symbols[(rem % sigma) as usize];
                rem /= sigma;
            }
            // Stage it in the scrap region, one write per cell.
            let sim_base = FETCH_BASE + horizon;
            for (i, &s) in candidate.iter().enumerate() {
                self.queue.push_back(MicroOp::ScrapWrite {
                    offset: sim_base + i as u64,
                    symbol: s,
                });
            }
            // Forward-simulate the local machine on the staged copy; each
            // simulated step is one charged scrap operation.
            let mut config = MachineConfig {
                head: head_offset,
                state: self.local_state,
                tape: {
                    let mut tape = Tape::new(self.local_spec.alphabet().clone());
                    for (i, &s) in candidate.iter().enumerate() {
                        tape.apply_write(WriteOp {
                            symbol: s,
                            index: i as i64,
                            global_time: 0,
                        })?;
                    }
                    tape
                },
            };
            let mut accepted = false;
            for _ in 0..horizon {
                let sim_cell = config.head;
                match machine::step::<ChaCha8Rng>(&self.local_spec, &mut config, None) {
                    Ok(machine::StepOutcome::Continue) => {}
                    Ok(machine::StepOutcome::Halted(h)) => {
                        self.queue.push_back(MicroOp::ScrapWrite {
                            offset: (sim_base as i64 + horizon as i64 + sim_cell)
                                .max(FETCH_BASE as i64) as u64,
                            symbol: config.tape.read(sim_cell),
                        });
                        accepted = h == Halt::Accept;
                        break;
                    }
                    // Undefined transitions make the candidate non-accepting.
                    Err(_) => break,
                }
                self.queue.push_back(MicroOp::ScrapWrite {
                    offset: (sim_base as i64 + horizon as i64 + sim_cell).max(FETCH_BASE as i64)
                        as u64,
                    symbol: config.tape.read(sim_cell),
                });
            }
            while !self.queue.is_empty() {
                self.global_step()?;
            }
            if accepted {
                winner = Some(candidate);
                break;
            }
        }

        let Some(candidate) = winner else {
            return Ok(SpoofReport {
                found: false,
                installed: None,
                candidates_tried: tried,
                search_global_steps: self.t - search_start_t,
                install_local_steps: 0,
            });
        };

        // Install the winning tape as the next local update: every window
        // cell is written, and the final write ticks the local clock once.
        // The local control state is left untouched.
        for (i, &s) in candidate.iter().enumerate() {
            let role = if i + 1 == candidate.len() {
                WriteRole::Completes { next: None }
            } else {
                WriteRole::Intermediate
            };
            self.queue.push_back(MicroOp::LocalWrite {
                cell: window_start + i as i64,
                symbol: s,
                role,
            });
        }
        let tau_before = self.tau;
        while !self.queue.is_empty() {
            self.global_step()?;
        }
        debug_assert_eq!(self.tau, tau_before + 1);
        Ok(SpoofReport {
            found: true,
            installed: Some(candidate.iter().map(|s| s.0).collect()),
            candidates_tried: tried,
            search_global_steps: self.t - search_start_t,
            install_local_steps: 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn model(spec: MachineSpec, input: &str, seed: u64) -> RelativeModel {
        RelativeModel::init(ModelParams::new(spec, input, seed)).unwrap()
    }

    #[test]
    fn init_places_input_on_local_region() {
        let m = model(corpus::unary_increment(), "11", 1);
        assert_eq!(m.t(), 0);
        assert_eq!(m.tau(), 0);
        assert_eq!(m.local_snapshot().render(), "11");
    }

    #[test]
    fn init_rejects_oversized_input() {
        let spec = corpus::unary_increment();
        let layout = TapeLayout::contiguous(4096, 2, 16);
        let err = RelativeModel::init(ModelParams::new(spec, "111", 1).with_layout(layout));
        assert!(matches!(err, Err(ModelError::LayoutTooSmall { .. })));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let mk = || {
            let mut m = model(corpus::fair_coin(4), "", 42);
            m.set_padding(PaddingStrategy::Uniform { lo: 0, hi: 5 });
            m.run_local_steps(4).unwrap();
            (m.local_snapshot(), m.t(), m.trace().k.clone())
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn reference_interpreter_costs_one_global_step_per_local_step() {
        let mut m = model(corpus::unary_increment(), "111", 7);
        let mut costs = Vec::new();
        while m.halted().is_none() {
            costs.push(m.advance_local().unwrap().global_cost);
        }
        assert_eq!(costs, vec![1, 1, 1, 1]);
        assert_eq!(m.local_snapshot().render(), "1111");
        assert_eq!(m.halted(), Some(Halt::Accept));
    }

    #[test]
    fn worked_example_k1_is_1_and_k2_is_10() {
        let mut m = model(corpus::oscillator(), "", 3);
        m.set_padding(PaddingStrategy::Schedule(vec![0, 8]));
        m.advance_local().unwrap();
        assert_eq!(m.trace().k, vec![1]);
        assert_eq!(m.tau(), 1);
        let report = m.advance_local().unwrap();
        assert_eq!(m.trace().k, vec![1, 10]);
        assert_eq!(report.k, 10);
        assert_eq!(m.tau(), 2);
        assert_eq!(m.t(), 10);
    }

    #[test]
    fn constant_padding_gives_constant_interval() {
        let mut m = model(corpus::oscillator(), "", 3);
        m.set_padding(PaddingStrategy::Constant(9));
        for _ in 0..5 {
            m.advance_local().unwrap();
        }
        let k = &m.trace().k;
        for j in 0..k.len() {
            assert_eq!(m.trace().interval_len(j), Some(10));
        }
    }

    #[test]
    fn choice_padding_samples_the_support_and_logs_draws() {
        let mut m = model(corpus::oscillator(), "", 3);
        m.set_padding(PaddingStrategy::Choice(vec![1, 9]));
        for _ in 0..40 {
            m.advance_local().unwrap();
        }
        let trace = m.trace();
        let mut seen = std::collections::BTreeSet::new();
        for j in 0..trace.k.len() {
            let len = trace.interval_len(j).unwrap();
            assert!(len == 2 || len == 10, "interval {len}");
            seen.insert(len);
        }
        assert_eq!(seen.len(), 2, "both pad arms should occur over 40 steps");
        assert_eq!(trace.rng_log.len(), 40);
    }

    #[test]
    fn global_step_fills_the_open_runtime_set() {
        let mut m = model(corpus::oscillator(), "", 3);
        m.set_padding(PaddingStrategy::Constant(2));
        m.global_step().unwrap();
        assert_eq!(m.t(), 1);
        assert_eq!(m.tau(), 0);
        assert_eq!(m.open_runtime_len(), 1);
    }

    #[test]
    fn clock_separation_global_activity_is_not_local_time() {
        // Padding and oracle scrap work advance t freely; tau moves only
        // when the transition function's output lands.
        let mut m = model(corpus::oscillator(), "", 3);
        m.set_padding(PaddingStrategy::Constant(5));
        for _ in 0..5 {
            m.global_step().unwrap();
            assert_eq!(m.tau(), 0);
        }
        assert_eq!(m.t(), 5);
        m.global_step().unwrap();
        assert_eq!((m.t(), m.tau()), (6, 1));
    }

    #[test]
    fn runtime_set_size_matches_interval_length() {
        let mut m = model(corpus::oscillator(), "", 3);
        m.set_padding(PaddingStrategy::Uniform { lo: 0, hi: 6 });
        for _ in 0..20 {
            m.advance_local().unwrap();
        }
        let trace = m.trace();
        for j in 0..trace.k.len() {
            assert_eq!(
                trace.runtime_set_sizes[j] + 1,
                trace.interval_len(j).unwrap()
            );
            assert_eq!(
                trace.runtime_sets[j].len() as u64,
                trace.runtime_set_sizes[j]
            );
        }
    }

    #[test]
    fn local_writes_are_recorded_with_global_time() {
        let mut m = model(corpus::unary_increment(), "1", 3);
        m.advance_local().unwrap();
        let w = &m.trace().write_ops[0];
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].global_time, 1);
        assert!(m.layout().local.contains(w[0].index));
    }

    #[test]
    fn padding_leaves_the_local_frame_invariant() {
        let run = |padding: PaddingStrategy, seed: u64| {
            let mut m = RelativeModel::init(
                ModelParams::new(corpus::fair_coin(6), "", seed).with_local_seed(99),
            )
            .unwrap();
            m.set_padding(padding);
            m.run_local_steps(6).unwrap();
            (
                m.trace().local_snapshots.clone(),
                m.trace().local_states.clone(),
            )
        };
        let a = run(PaddingStrategy::None, 1);
        let b = run(PaddingStrategy::Constant(9), 2);
        let c = run(PaddingStrategy::Uniform { lo: 0, hi: 100 }, 3);
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn guard_aborts_local_escape() {
        let spec = corpus::scrap_walker();
        let layout = TapeLayout::contiguous(4096, 4, 16);
        let mut m = RelativeModel::init(ModelParams::new(spec, "", 5).with_layout(layout)).unwrap();
        let err = loop {
            match m.advance_local() {
                Ok(_) => {}
                Err(e) => break e,
            }
        };
        assert!(matches!(err, ModelError::Guard(_)));
        assert!(matches!(m.global_step(), Err(ModelError::Aborted)));
    }

    #[test]
    fn identity_query_costs_one_local_step_and_enough_writes() {
        let spec = corpus::single_query("identity", Interval::new(0, 8), None);
        let mut m = RelativeModel::init(
            ModelParams::new(spec, "10110010", 5).with_oracles(vec![OracleBinding::identity(8)]),
        )
        .unwrap();
        let report = m.advance_local().unwrap();
        assert_eq!(m.tau(), 1);
        assert!(report.global_cost >= 8);
        assert_eq!(m.trace().write_ops[0].len(), 8);
        assert_eq!(m.local_snapshot().render(), "10110010");
    }

    #[test]
    fn parity_query_local_cost_is_constant_and_global_cost_grows() {
        let mut global_costs = Vec::new();
        for n in [4u64, 8, 16] {
            let spec = corpus::single_query("parity", Interval::new(0, n as i64), None);
            let input: String = "10".repeat(n as usize / 2);
            let mut m = RelativeModel::init(
                ModelParams::new(spec, input, 5).with_oracles(vec![OracleBinding::parity()]),
            )
            .unwrap();
            let report = m.advance_local().unwrap();
            assert_eq!(m.tau(), 1);
            global_costs.push(report.global_cost);
        }
        assert!(global_costs[0] < global_costs[1] && global_costs[1] < global_costs[2]);
    }

    #[test]
    fn unknown_oracle_is_a_failure() {
        let spec = corpus::single_query("missing", Interval::new(0, 2), None);
        let mut m = RelativeModel::init(ModelParams::new(spec, "10", 5)).unwrap();
        assert!(matches!(
            m.advance_local(),
            Err(ModelError::Oracle(OracleFailure::UnknownOracle(_)))
        ));
    }

    #[test]
    fn spoof_finds_first_cell_one() {
        let mut m = model(corpus::first_cell_one(), "000", 5);
        let report = m.spoof_accept(4, 1 << 10).unwrap();
        assert!(report.found);
        assert_eq!(report.installed.as_deref(), Some("100"));
        assert_eq!(report.install_local_steps, 1);
        assert_eq!(m.tau(), 1);
        // The machine now accepts on its own.
        let r = m.advance_local().unwrap();
        assert_eq!(r.halted, Some(Halt::Accept));
    }

    #[test]
    fn spoof_reports_not_found_when_nothing_accepts() {
        let mut m = model(corpus::always_reject(), "000", 5);
        let report = m.spoof_accept(4, 1 << 10).unwrap();
        assert!(!report.found);
        assert_eq!(report.candidates_tried, 8);
        assert_eq!(m.tau(), 0);
    }

    #[test]
    fn halted_machine_cannot_advance() {
        let mut m = model(corpus::unary_increment(), "", 5);
        m.advance_local().unwrap();
        assert_eq!(m.halted(), Some(Halt::Accept));
        assert!(matches!(
            m.advance_local(),
            Err(ModelError::LocalHalted(Halt::Accept))
        ));
    }

    #[test]
    fn undefined_local_transition_propagates() {
        // equality_checker is undefined on (start, blank).
        let mut m = model(corpus::equality_checker(), "", 5);
        assert!(matches!(
            m.advance_local(),
            Err(ModelError::UndefinedTransition { .. })
        ));
    }

    #[test]
    fn k_tilde_restricted_to_completions_recovers_k() {
        let spec = corpus::query_driver("identity", 4, None);
        let mut m = RelativeModel::init(
            ModelParams::new(spec, "1011", 5).with_oracles(vec![OracleBinding::identity(4)]),
        )
        .unwrap();
        m.set_padding(PaddingStrategy::Constant(3));
        for _ in 0..5 {
            m.advance_local().unwrap();
        }
        let trace = m.trace();
        assert!(trace.k.iter().all(|k| trace.k_tilde.contains(k)));
        assert!(trace.k_tilde.len() > trace.k.len());
        assert_eq!(trace.tau(), 5);
        assert_eq!(m.tau_tilde() as usize, trace.k_tilde.len());
    }
}
