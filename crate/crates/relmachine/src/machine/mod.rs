//! Turing machine specifications (deterministic and probabilistic), single
//! step semantics, and the self-delimiting binary encoding that places a
//! machine onto the global tape.
//!
//! Local machines here are always Turing-machine-shaped (plus oracle query
//! states); richer local machine families are an extension point.

pub mod codec;
pub mod file;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tape::{Alphabet, Interval, Symbol, Tape, TapeError, WriteOp};

/// Index into a machine's state table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Move {
    pub fn offset(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Right => 1,
        }
    }
}

/// Target of one deterministic transition: write, next state, head move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub write: Symbol,
    pub next: StateId,
    pub mv: Move,
}

/// A finite distribution over transition targets. Probabilities must sum to
/// one within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticTransition {
    pub successors: Vec<(Transition, f64)>,
}

pub const PROB_SUM_TOL: f64 = 1e-12;

impl ProbabilisticTransition {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.successors.is_empty() {
            return Err(SpecError::EmptyDistribution);
        }
        let mut sum = 0.0;
        for (_, p) in &self.successors {
            if *p < 0.0 || p.is_nan() {
                return Err(SpecError::NegativeProbability(*p));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(SpecError::ProbabilitySum(sum));
        }
        Ok(())
    }

    /// Sample a successor; the caller owns and logs the random source.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Transition {
        self.pick(rng.gen::<f64>())
    }

    /// Deterministic successor choice from a uniform draw in [0, 1); split
    /// out so the draw itself can be logged for bit-exact replay.
    pub fn pick(&self, draw: f64) -> Transition {
        let mut acc = 0.0;
        for (t, p) in &self.successors {
            acc += p;
            if draw < acc {
                return *t;
            }
        }
        self.successors.last().expect("validated non-empty").0
    }
}

/// Oracle attachment for a query state. Regions are in local-tape
/// coordinates (offset from the local region's first cell). When the local
/// machine enters the state, the global machine evaluates the named oracle
/// on `arg`, writes the output over `out`, and only then lets the local
/// clock tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub oracle: String,
    pub arg: Interval,
    /// Output placement; defaults to overwriting the argument from its
    /// first cell.
    pub out: Option<Interval>,
    /// State after the query completes; defaults to the query state itself,
    /// which makes a lone query state a query-every-step driver.
    pub next: Option<StateId>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("machine needs at least start/accept/reject states")]
    TooFewStates,
    #[error("state index {0} out of range")]
    StateOutOfRange(u16),
    #[error("accept and reject must be distinct states")]
    AcceptRejectCollision,
    #[error("symbol `{0}` is not in the machine alphabet")]
    SymbolNotInAlphabet(Symbol),
    #[error("transition defined on halt state {0}")]
    TransitionOnHaltState(u16),
    #[error("state {0} has both a transition table entry and a probabilistic entry on `{1}`")]
    AmbiguousTransition(u16, Symbol),
    #[error("query state {0} may not be accept or reject")]
    QueryOnHaltState(u16),
    #[error("query state {0} also has ordinary transitions")]
    QueryStateHasTransitions(u16),
    #[error("empty probability distribution")]
    EmptyDistribution,
    #[error("negative probability {0}")]
    NegativeProbability(f64),
    #[error("probabilities sum to {0}, not 1")]
    ProbabilitySum(f64),
    #[error("duplicate state name `{0}`")]
    DuplicateStateName(String),
    #[error(transparent)]
    Alphabet(#[from] crate::tape::AlphabetError),
}

/// A Turing machine: states with distinguished START/ACCEPT/REJECT, a finite
/// alphabet, a partial transition map, optional probabilistic rows, and
/// optional oracle query states.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineSpec {
    states: Vec<String>,
    start: StateId,
    accept: StateId,
    reject: StateId,
    alphabet: Alphabet,
    transitions: BTreeMap<(StateId, Symbol), Transition>,
    probabilistic: BTreeMap<(StateId, Symbol), ProbabilisticTransition>,
    query_states: BTreeMap<StateId, QuerySpec>,
}

impl MachineSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        states: Vec<String>,
        start: StateId,
        accept: StateId,
        reject: StateId,
        alphabet: Alphabet,
        transitions: BTreeMap<(StateId, Symbol), Transition>,
        probabilistic: BTreeMap<(StateId, Symbol), ProbabilisticTransition>,
        query_states: BTreeMap<StateId, QuerySpec>,
    ) -> Result<MachineSpec, SpecError> {
        let spec = MachineSpec {
            states,
            start,
            accept,
            reject,
            alphabet,
            transitions,
            probabilistic,
            query_states,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), SpecError> {
        if self.states.len() < 2 {
            return Err(SpecError::TooFewStates);
        }
        for (i, name) in self.states.iter().enumerate() {
            if self.states[..i].contains(name) {
                return Err(SpecError::DuplicateStateName(name.clone()));
            }
        }
        let n = self.states.len() as u16;
        for s in [self.start, self.accept, self.reject] {
            if s.0 >= n {
                return Err(SpecError::StateOutOfRange(s.0));
            }
        }
        if self.accept == self.reject {
            return Err(SpecError::AcceptRejectCollision);
        }
        for ((state, sym), t) in &self.transitions {
            if state.0 >= n || t.next.0 >= n {
                return Err(SpecError::StateOutOfRange(state.0.max(t.next.0)));
            }
            if self.is_halt(*state) {
                return Err(SpecError::TransitionOnHaltState(state.0));
            }
            for s in [*sym, t.write] {
                if !self.alphabet.contains(s) {
                    return Err(SpecError::SymbolNotInAlphabet(s));
                }
            }
            if self.probabilistic.contains_key(&(*state, *sym)) {
                return Err(SpecError::AmbiguousTransition(state.0, *sym));
            }
        }
        for ((state, sym), dist) in &self.probabilistic {
            if state.0 >= n {
                return Err(SpecError::StateOutOfRange(state.0));
            }
            if self.is_halt(*state) {
                return Err(SpecError::TransitionOnHaltState(state.0));
            }
            if !self.alphabet.contains(*sym) {
                return Err(SpecError::SymbolNotInAlphabet(*sym));
            }
            dist.validate()?;
            for (t, _) in &dist.successors {
                if t.next.0 >= n {
                    return Err(SpecError::StateOutOfRange(t.next.0));
                }
                if !self.alphabet.contains(t.write) {
                    return Err(SpecError::SymbolNotInAlphabet(t.write));
                }
            }
        }
        for (state, q) in &self.query_states {
            if state.0 >= n {
                return Err(SpecError::StateOutOfRange(state.0));
            }
            if self.is_halt(*state) {
                return Err(SpecError::QueryOnHaltState(state.0));
            }
            if self
                .transitions
                .keys()
                .chain(self.probabilistic.keys())
                .any(|(s, _)| s == state)
            {
                return Err(SpecError::QueryStateHasTransitions(state.0));
            }
            if let Some(next) = q.next {
                if next.0 >= n {
                    return Err(SpecError::StateOutOfRange(next.0));
                }
            }
        }
        Ok(())
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0 as usize]
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| StateId(i as u16))
    }

    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn accept(&self) -> StateId {
        self.accept
    }

    pub fn reject(&self) -> StateId {
        self.reject
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn is_halt(&self, state: StateId) -> bool {
        state == self.accept || state == self.reject
    }

    pub fn query_spec(&self, state: StateId) -> Option<&QuerySpec> {
        self.query_states.get(&state)
    }

    pub fn has_probabilistic(&self) -> bool {
        !self.probabilistic.is_empty()
    }

    pub fn has_queries(&self) -> bool {
        !self.query_states.is_empty()
    }

    pub fn transitions(&self) -> &BTreeMap<(StateId, Symbol), Transition> {
        &self.transitions
    }

    pub fn probabilistic(&self) -> &BTreeMap<(StateId, Symbol), ProbabilisticTransition> {
        &self.probabilistic
    }

    pub fn query_states(&self) -> &BTreeMap<StateId, QuerySpec> {
        &self.query_states
    }

    /// Resolve the pending transition for `(state, symbol)`, sampling
    /// probabilistic rows from `rng`. `None` means the partial transition
    /// function is undefined there.
    pub fn resolve<R: Rng>(
        &self,
        state: StateId,
        symbol: Symbol,
        rng: Option<&mut R>,
    ) -> Result<Option<Transition>, StepError> {
        if let Some(t) = self.transitions.get(&(state, symbol)) {
            return Ok(Some(*t));
        }
        if let Some(dist) = self.probabilistic.get(&(state, symbol)) {
            let rng = rng.ok_or(StepError::MissingRng)?;
            return Ok(Some(dist.sample(rng)));
        }
        Ok(None)
    }
}

/// A machine's run-time configuration: head, control state, and its tape.
#[derive(Debug, Clone)]
pub struct MachineConfig {
    pub head: i64,
    pub state: StateId,
    pub tape: Tape,
}

impl MachineConfig {
    /// Fresh configuration at the start state with `input` written from
    /// cell 0 rightward.
    pub fn with_input(spec: &MachineSpec, input: &str) -> Result<MachineConfig, TapeError> {
        let mut tape = Tape::new(spec.alphabet().clone());
        for (i, c) in input.chars().enumerate() {
            tape.apply_write(WriteOp {
                symbol: Symbol(c),
                index: i as i64,
                global_time: 0,
            })?;
        }
        Ok(MachineConfig {
            head: 0,
            state: spec.start(),
            tape,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Halt {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    /// One cell possibly rewritten, state updated, head moved one cell.
    Continue,
    Halted(Halt),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("machine already halted")]
    AlreadyHalted,
    #[error("transition undefined on (state {state}, symbol `{symbol}`)")]
    UndefinedTransition { state: u16, symbol: Symbol },
    #[error("probabilistic transition requires a random source")]
    MissingRng,
    #[error("query state {0} cannot step outside a relative model")]
    QueryOutsideModel(u16),
    #[error(transparent)]
    Tape(#[from] TapeError),
}

/// Apply one transition-function step in place.
pub fn step<R: Rng>(
    spec: &MachineSpec,
    config: &mut MachineConfig,
    rng: Option<&mut R>,
) -> Result<StepOutcome, StepError> {
    if spec.is_halt(config.state) {
        return Err(StepError::AlreadyHalted);
    }
    if spec.query_spec(config.state).is_some() {
        return Err(StepError::QueryOutsideModel(config.state.0));
    }
    let symbol = config.tape.read(config.head);
    let t = spec
        .resolve(config.state, symbol, rng)?
        .ok_or(StepError::UndefinedTransition {
            state: config.state.0,
            symbol,
        })?;
    config.tape.apply_write(WriteOp {
        symbol: t.write,
        index: config.head,
        global_time: 0,
    })?;
    config.head += t.mv.offset();
    config.state = t.next;
    if spec.is_halt(config.state) {
        Ok(StepOutcome::Halted(if config.state == spec.accept() {
            Halt::Accept
        } else {
            Halt::Reject
        }))
    } else {
        Ok(StepOutcome::Continue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Halted { halt: Halt, steps: u64 },
    Timeout { steps: u64 },
}

/// Iterate `step` up to `max_steps` times.
pub fn run<R: Rng>(
    spec: &MachineSpec,
    config: &mut MachineConfig,
    max_steps: u64,
    mut rng: Option<&mut R>,
) -> Result<RunOutcome, StepError> {
    for n in 0..max_steps {
        match step(spec, config, rng.as_deref_mut())? {
            StepOutcome::Continue => {}
            StepOutcome::Halted(halt) => return Ok(RunOutcome::Halted { halt, steps: n + 1 }),
        }
    }
    Ok(RunOutcome::Timeout { steps: max_steps })
}

impl fmt::Display for MachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "machine({} states, {} symbols, {} transitions)",
            self.states.len(),
            self.alphabet.len(),
            self.transitions.len() + self.probabilistic.len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use rand_chacha::ChaCha8Rng;

    type NoRng = Option<&'static mut ChaCha8Rng>;

    #[test]
    fn unary_increment_appends_one_and_accepts() {
        let spec = corpus::unary_increment();
        let mut config = MachineConfig::with_input(&spec, "111").unwrap();
        let outcome = run(&spec, &mut config, 100, NoRng::None).unwrap();
        assert!(matches!(
            outcome,
            RunOutcome::Halted {
                halt: Halt::Accept,
                ..
            }
        ));
        assert_eq!(config.tape.snapshot(None).render(), "1111");
    }

    #[test]
    fn unary_increment_on_two_ones() {
        let spec = corpus::unary_increment();
        let mut config = MachineConfig::with_input(&spec, "11").unwrap();
        let outcome = run(&spec, &mut config, 100, NoRng::None).unwrap();
        assert!(matches!(
            outcome,
            RunOutcome::Halted {
                halt: Halt::Accept,
                ..
            }
        ));
        assert_eq!(config.tape.snapshot(None).render(), "111");
    }

    #[test]
    fn step_on_halted_machine_is_an_error() {
        let spec = corpus::unary_increment();
        let mut config = MachineConfig::with_input(&spec, "").unwrap();
        config.state = spec.accept();
        assert_eq!(
            step(&spec, &mut config, NoRng::None),
            Err(StepError::AlreadyHalted)
        );
    }

    #[test]
    fn one_step_accepter_halts_in_one_step() {
        // δ(blank, START) = (blank, ACCEPT, R)
        let mut transitions = BTreeMap::new();
        transitions.insert(
            (StateId(0), Symbol::BLANK),
            Transition {
                write: Symbol::BLANK,
                next: StateId(1),
                mv: Move::Right,
            },
        );
        let spec = MachineSpec::new(
            vec!["start".into(), "accept".into(), "reject".into()],
            StateId(0),
            StateId(1),
            StateId(2),
            Alphabet::binary(),
            transitions,
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap();
        let mut config = MachineConfig::with_input(&spec, "").unwrap();
        let outcome = run(&spec, &mut config, 10, NoRng::None).unwrap();
        assert_eq!(
            outcome,
            RunOutcome::Halted {
                halt: Halt::Accept,
                steps: 1
            }
        );
    }

    #[test]
    fn oscillator_times_out() {
        let spec = corpus::oscillator();
        let mut config = MachineConfig::with_input(&spec, "").unwrap();
        let outcome = run(&spec, &mut config, 10, NoRng::None).unwrap();
        assert_eq!(outcome, RunOutcome::Timeout { steps: 10 });
    }

    #[test]
    fn undefined_transition_is_surfaced_not_rejected() {
        // Machine with an empty transition table.
        let spec = MachineSpec::new(
            vec!["start".into(), "accept".into(), "reject".into()],
            StateId(0),
            StateId(1),
            StateId(2),
            Alphabet::binary(),
            BTreeMap::new(),
            BTreeMap::new(),
            BTreeMap::new(),
        )
        .unwrap();
        let mut config = MachineConfig::with_input(&spec, "").unwrap();
        assert_eq!(
            step(&spec, &mut config, NoRng::None),
            Err(StepError::UndefinedTransition {
                state: 0,
                symbol: Symbol::BLANK
            })
        );
    }

    #[test]
    fn degenerate_distribution_behaves_deterministically() {
        use rand::SeedableRng;
        let t = Transition {
            write: Symbol::ZERO,
            next: StateId(1),
            mv: Move::Left,
        };
        let mut probabilistic = BTreeMap::new();
        probabilistic.insert(
            (StateId(0), Symbol::BLANK),
            ProbabilisticTransition {
                successors: vec![(t, 1.0)],
            },
        );
        let spec = MachineSpec::new(
            vec!["start".into(), "accept".into(), "reject".into()],
            StateId(0),
            StateId(1),
            StateId(2),
            Alphabet::binary(),
            BTreeMap::new(),
            probabilistic,
            BTreeMap::new(),
        )
        .unwrap();
        for seed in [1u64, 2, 99] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut config = MachineConfig::with_input(&spec, "").unwrap();
            let out = step(&spec, &mut config, Some(&mut rng)).unwrap();
            assert_eq!(out, StepOutcome::Halted(Halt::Accept));
            assert_eq!(config.tape.read(0), Symbol::ZERO);
            assert_eq!(config.head, -1);
        }
    }

    #[test]
    fn probability_sum_is_checked() {
        let t = Transition {
            write: Symbol::ZERO,
            next: StateId(0),
            mv: Move::Left,
        };
        let dist = ProbabilisticTransition {
            successors: vec![(t, 0.5), (t, 0.4)],
        };
        assert!(matches!(dist.validate(), Err(SpecError::ProbabilitySum(_))));
    }

    #[test]
    fn single_cell_locality() {
        // Every step changes at most the pre-step head cell.
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let spec = corpus::random_machine(&mut rng, false);
            let mut config = MachineConfig::with_input(&spec, "1011").unwrap();
            let mut step_rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..40 {
                let before = config.tape.clone();
                let head = config.head;
                match step(&spec, &mut config, Some(&mut step_rng)) {
                    Ok(StepOutcome::Continue) => {}
                    _ => break,
                }
                let mut diff = 0;
                let cells: std::collections::BTreeSet<i64> = before
                    .support()
                    .map(|(i, _)| i)
                    .chain(config.tape.support().map(|(i, _)| i))
                    .collect();
                for i in cells {
                    if before.read(i) != config.tape.read(i) {
                        assert_eq!(i, head, "non-head cell changed");
                        diff += 1;
                    }
                }
                assert!(diff <= 1);
            }
        }
    }
}
