//! Small, named machines used by tests, games, and as CLI examples, plus a
//! random-machine generator for property corpora.

use std::collections::BTreeMap;

use rand::Rng;

use crate::machine::{MachineSpec, Move, ProbabilisticTransition, QuerySpec, StateId, Transition};
use crate::tape::{Alphabet, Interval, Symbol};

fn t(write: char, next: u16, mv: Move) -> Transition {
    Transition {
        write: Symbol(write),
        next: StateId(next),
        mv,
    }
}

fn build(
    states: &[&str],
    start: u16,
    accept: u16,
    reject: u16,
    transitions: Vec<((u16, char), Transition)>,
) -> MachineSpec {
    let table: BTreeMap<(StateId, Symbol), Transition> = transitions
        .into_iter()
        .map(|((s, c), tr)| ((StateId(s), Symbol(c)), tr))
        .collect();
    MachineSpec::new(
        states.iter().map(|s| s.to_string()).collect(),
        StateId(start),
        StateId(accept),
        StateId(reject),
        Alphabet::binary(),
        table,
        BTreeMap::new(),
        BTreeMap::new(),
    )
    .expect("corpus machine is valid")
}

/// Three-state unary increment: scans right over `1`s and writes one more at
/// the first blank, then accepts.
pub fn unary_increment() -> MachineSpec {
    build(
        &["start", "accept", "reject"],
        0,
        1,
        2,
        vec![
            ((0, '1'), t('1', 0, Move::Right)),
            ((0, '_'), t('1', 1, Move::Right)),
        ],
    )
}

/// Bounces between two cells forever; never halts.
pub fn oscillator() -> MachineSpec {
    build(
        &["left", "right", "accept", "reject"],
        0,
        2,
        3,
        vec![
            ((0, '_'), t('_', 1, Move::Right)),
            ((0, '0'), t('0', 1, Move::Right)),
            ((0, '1'), t('1', 1, Move::Right)),
            ((1, '_'), t('_', 0, Move::Left)),
            ((1, '0'), t('0', 0, Move::Left)),
            ((1, '1'), t('1', 0, Move::Left)),
        ],
    )
}

/// Accepts iff its first and third cells hold the same binary symbol.
/// Halts within three steps from any 3-cell binary tape.
pub fn equality_checker() -> MachineSpec {
    build(
        &[
            "start",
            "saw0",
            "saw0_skip",
            "saw1",
            "saw1_skip",
            "accept",
            "reject",
        ],
        0,
        5,
        6,
        vec![
            ((0, '0'), t('0', 1, Move::Right)),
            ((0, '1'), t('1', 3, Move::Right)),
            ((1, '0'), t('0', 2, Move::Right)),
            ((1, '1'), t('1', 2, Move::Right)),
            ((1, '_'), t('_', 2, Move::Right)),
            ((2, '0'), t('0', 5, Move::Right)),
            ((2, '1'), t('1', 6, Move::Right)),
            ((2, '_'), t('_', 6, Move::Right)),
            ((3, '0'), t('0', 4, Move::Right)),
            ((3, '1'), t('1', 4, Move::Right)),
            ((3, '_'), t('_', 4, Move::Right)),
            ((4, '1'), t('1', 5, Move::Right)),
            ((4, '0'), t('0', 6, Move::Right)),
            ((4, '_'), t('_', 6, Move::Right)),
        ],
    )
}

/// Accepts iff its first cell holds `1`.
pub fn first_cell_one() -> MachineSpec {
    build(
        &["start", "accept", "reject"],
        0,
        1,
        2,
        vec![
            ((0, '1'), t('1', 1, Move::Right)),
            ((0, '0'), t('0', 2, Move::Right)),
            ((0, '_'), t('_', 2, Move::Right)),
        ],
    )
}

/// Rejects every tape (never accepts anything); halts in one step.
pub fn always_reject() -> MachineSpec {
    build(
        &["start", "accept", "reject"],
        0,
        1,
        2,
        vec![
            ((0, '0'), t('0', 2, Move::Right)),
            ((0, '1'), t('1', 2, Move::Right)),
            ((0, '_'), t('_', 2, Move::Right)),
        ],
    )
}

/// Writes `n` fair coin flips left to right, then accepts. Its randomness
/// comes from the model's logged local stream.
pub fn fair_coin(n: u16) -> MachineSpec {
    assert!(n >= 1);
    let mut states: Vec<String> = (0..n).map(|i| format!("flip{i}")).collect();
    states.push("accept".into());
    states.push("reject".into());
    let accept = n;
    let reject = n + 1;
    let mut probabilistic = BTreeMap::new();
    for i in 0..n {
        let next = if i + 1 < n { i + 1 } else { accept };
        for c in ['0', '1', '_'] {
            probabilistic.insert(
                (StateId(i), Symbol(c)),
                ProbabilisticTransition {
                    successors: vec![
                        (t('0', next, Move::Right), 0.5),
                        (t('1', next, Move::Right), 0.5),
                    ],
                },
            );
        }
    }
    MachineSpec::new(
        states,
        StateId(0),
        StateId(accept),
        StateId(reject),
        Alphabet::binary(),
        BTreeMap::new(),
        probabilistic,
        BTreeMap::new(),
    )
    .expect("corpus machine is valid")
}

/// Walks right off the end of its own region; trips the access guard.
pub fn scrap_walker() -> MachineSpec {
    build(
        &["walk", "accept", "reject"],
        0,
        1,
        2,
        vec![
            ((0, '_'), t('1', 0, Move::Right)),
            ((0, '0'), t('1', 0, Move::Right)),
            ((0, '1'), t('1', 0, Move::Right)),
        ],
    )
}

/// A single self-looping query state driving `oracle` once per local step.
/// The argument spans `arg_len` cells from local cell 0; output placement
/// comes from `out`.
pub fn query_driver(oracle: &str, arg_len: u64, out: Option<Interval>) -> MachineSpec {
    let mut query_states = BTreeMap::new();
    query_states.insert(
        StateId(0),
        QuerySpec {
            oracle: oracle.to_string(),
            arg: Interval::new(0, arg_len as i64),
            out,
            next: None,
        },
    );
    MachineSpec::new(
        vec!["query".into(), "accept".into(), "reject".into()],
        StateId(0),
        StateId(1),
        StateId(2),
        Alphabet::binary(),
        BTreeMap::new(),
        BTreeMap::new(),
        query_states,
    )
    .expect("corpus machine is valid")
}

/// Like `query_driver`, but performs exactly one query and then accepts.
pub fn single_query(oracle: &str, arg: Interval, out: Option<Interval>) -> MachineSpec {
    let mut query_states = BTreeMap::new();
    query_states.insert(
        StateId(0),
        QuerySpec {
            oracle: oracle.to_string(),
            arg,
            out,
            next: Some(StateId(1)),
        },
    );
    MachineSpec::new(
        vec!["query".into(), "accept".into(), "reject".into()],
        StateId(0),
        StateId(1),
        StateId(2),
        Alphabet::binary(),
        BTreeMap::new(),
        BTreeMap::new(),
        query_states,
    )
    .expect("corpus machine is valid")
}

/// Random deterministic machine with a total transition table. With
/// `allow_halting` false, no transition targets accept/reject, so runs last
/// as long as asked.
pub fn random_machine<R: Rng>(rng: &mut R, allow_halting: bool) -> MachineSpec {
    let n_work = rng.gen_range(3..=8u16);
    let mut states: Vec<String> = (0..n_work).map(|i| format!("q{i}")).collect();
    states.push("accept".into());
    states.push("reject".into());
    let accept = n_work;
    let reject = n_work + 1;
    let symbols = ['0', '1', '_'];
    let mut transitions = Vec::new();
    for s in 0..n_work {
        for c in symbols {
            let next_max = if allow_halting { n_work + 2 } else { n_work };
            let next = rng.gen_range(0..next_max);
            let write = symbols[rng.gen_range(0..3)];
            let mv = if rng.gen_bool(0.5) {
                Move::Right
            } else {
                Move::Left
            };
            transitions.push(((s, c), t(write, next, mv)));
        }
    }
    build(
        &states.iter().map(String::as_str).collect::<Vec<_>>(),
        0,
        accept,
        reject,
        transitions,
    )
}

/// Random machine exercising every spec feature (probabilistic rows and
/// query bindings included); used for codec property corpora.
pub fn random_machine_any<R: Rng>(rng: &mut R) -> MachineSpec {
    let base = random_machine(rng, true);
    if rng.gen_bool(0.5) {
        return base;
    }
    let n_states = base.states().len() as u16;
    let n_work = n_states - 2;
    let mut transitions = base.transitions().clone();
    let mut probabilistic = BTreeMap::new();
    if rng.gen_bool(0.7) {
        let state = StateId(rng.gen_range(0..n_work));
        let sym = Symbol(['0', '1', '_'][rng.gen_range(0..3)]);
        transitions.remove(&(state, sym));
        let weight = rng.gen_range(1..=9) as f64 / 10.0;
        probabilistic.insert(
            (state, sym),
            ProbabilisticTransition {
                successors: vec![
                    (t('0', rng.gen_range(0..n_states), Move::Left), weight),
                    (
                        t('1', rng.gen_range(0..n_states), Move::Right),
                        1.0 - weight,
                    ),
                ],
            },
        );
    }
    let mut query_states = BTreeMap::new();
    if rng.gen_bool(0.5) {
        let state = StateId(rng.gen_range(0..n_work));
        transitions.retain(|(s, _), _| *s != state);
        probabilistic.retain(|(s, _), _| *s != state);
        let start = rng.gen_range(0..16);
        let len = rng.gen_range(1..16);
        query_states.insert(
            state,
            QuerySpec {
                oracle: format!("f{}", rng.gen_range(0..4)),
                arg: Interval::new(start, start + len),
                out: rng
                    .gen_bool(0.5)
                    .then(|| Interval::new(start, start + rng.gen_range(1..=len))),
                next: rng
                    .gen_bool(0.5)
                    .then(|| StateId(rng.gen_range(0..n_states))),
            },
        );
    }
    MachineSpec::new(
        base.states().to_vec(),
        base.start(),
        base.accept(),
        base.reject(),
        base.alphabet().clone(),
        transitions,
        probabilistic,
        query_states,
    )
    .expect("generated machine is valid")
}
