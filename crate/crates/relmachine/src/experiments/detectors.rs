//! The shipped detector suite for the timing games: local machines that try
//! to learn the hidden pad from inside the simulation. Every legal strategy
//! here is structurally pad-invariant — the point the games demonstrate —
//! and the control detector shows what changes once querying the answer is
//! allowed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus;
use crate::machine::{MachineSpec, Move, QuerySpec, StateId, Transition};
use crate::oracle::OracleBinding;
use crate::tape::{Alphabet, Interval, Symbol};

/// A detector strategy for the binary pad-guessing games.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    /// Always guesses 0.
    Constant,
    /// Majority vote over its own (trial-random) 3-bit input.
    MajorityHistory,
    /// Bounces over four cells of its own tape and guesses the parity of
    /// what it saw; a probe that stays legal and therefore scores at
    /// chance. (Its illegal cousin is `corpus::scrap_walker`.)
    TimingProbe,
    /// Control arm: queries a tell-the-answer oracle. Separates
    /// "undecidable without querying" from "hard".
    Control,
}

pub const DETECTOR_SUITE: [Detector; 3] = [
    Detector::Constant,
    Detector::MajorityHistory,
    Detector::TimingProbe,
];

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::Constant => "constant",
            Detector::MajorityHistory => "majority_history",
            Detector::TimingProbe => "timing_probe",
            Detector::Control => "control",
        }
    }

    pub fn by_name(name: &str) -> Option<Detector> {
        match name {
            "constant" => Some(Detector::Constant),
            "majority_history" => Some(Detector::MajorityHistory),
            "timing_probe" => Some(Detector::TimingProbe),
            "control" => Some(Detector::Control),
            _ => None,
        }
    }

    /// Build the per-trial machine, its input, and any oracle bindings.
    /// `truth` is the hidden coin (only the control arm may see it, through
    /// its binding); `input_seed` feeds trial-random detector inputs.
    pub fn instantiate(
        &self,
        truth: bool,
        input_seed: u64,
    ) -> (MachineSpec, String, Vec<OracleBinding>) {
        match self {
            Detector::Constant => (constant_guess(), String::new(), Vec::new()),
            Detector::MajorityHistory => {
                let input = random_bits(3, input_seed);
                (majority_scanner(), input, Vec::new())
            }
            Detector::TimingProbe => {
                let input = random_bits(4, input_seed);
                (parity_scanner(), input, Vec::new())
            }
            Detector::Control => (
                control_machine(),
                "0".into(),
                vec![OracleBinding::constant("reveal_pad", vec![truth])],
            ),
        }
    }
}

fn random_bits(k: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| if rng.gen_bool(0.5) { '1' } else { '0' })
        .collect()
}

fn constant_guess() -> MachineSpec {
    let t = |write: char, next: u16| Transition {
        write: Symbol(write),
        next: StateId(next),
        mv: Move::Right,
    };
    let mut table = BTreeMap::new();
    for c in ['0', '1', '_'] {
        table.insert((StateId(0), Symbol(c)), t('0', 1));
    }
    MachineSpec::new(
        vec!["guess".into(), "accept".into(), "reject".into()],
        StateId(0),
        StateId(1),
        StateId(2),
        Alphabet::binary(),
        table,
        BTreeMap::new(),
        BTreeMap::new(),
    )
    .expect("detector is valid")
}

/// Scan `k` cells folding `step` over the bits (blank counts as 0), walk
/// back, and write `verdict(fold)` at cell 0.
fn fold_scanner(
    k: usize,
    fold_states: u8,
    step: impl Fn(u8, bool) -> u8,
    verdict: impl Fn(u8) -> bool,
) -> MachineSpec {
    assert!(k >= 2);
    let f = fold_states as u16;
    // State ids: scan(pos, fold) = pos*F + fold; then ret(j, g) for j in
    // 0..k-1; then accept, reject.
    let scan = |pos: u16, fold: u16| StateId(pos * f + fold);
    let ret_base = k as u16 * f;
    let ret = |j: u16, g: bool| StateId(ret_base + 2 * j + g as u16);
    let accept = StateId(ret_base + 2 * (k as u16 - 1));
    let reject = StateId(accept.0 + 1);

    let mut names: Vec<String> = Vec::new();
    for pos in 0..k as u16 {
        for fold in 0..f {
            names.push(format!("s{pos}_{fold}"));
        }
    }
    for j in 0..k as u16 - 1 {
        names.push(format!("r{j}_0"));
        names.push(format!("r{j}_1"));
    }
    names.push("accept".into());
    names.push("reject".into());

    let mut table = BTreeMap::new();
    for pos in 0..k as u16 {
        for fold in 0..f {
            for c in ['0', '1', '_'] {
                let bit = c == '1';
                let next_fold = step(fold as u8, bit) as u16 % f;
                let target = if (pos as usize) + 1 < k {
                    scan(pos + 1, next_fold)
                } else {
                    // Last cell: turn around carrying the verdict.
                    ret(k as u16 - 2, verdict(next_fold as u8))
                };
                let mv = if (pos as usize) + 1 < k {
                    Move::Right
                } else {
                    Move::Left
                };
                table.insert(
                    (scan(pos, fold), Symbol(c)),
                    Transition {
                        write: Symbol(c),
                        next: target,
                        mv,
                    },
                );
            }
        }
    }
    for j in 0..k as u16 - 1 {
        for g in [false, true] {
            for c in ['0', '1', '_'] {
                let (write, next, mv) = if j == 0 {
                    (Symbol(if g { '1' } else { '0' }), accept, Move::Right)
                } else {
                    (Symbol(c), ret(j - 1, g), Move::Left)
                };
                table.insert((ret(j, g), Symbol(c)), Transition { write, next, mv });
            }
        }
    }
    MachineSpec::new(
        names,
        scan(0, 0),
        accept,
        reject,
        Alphabet::binary(),
        table,
        BTreeMap::new(),
        BTreeMap::new(),
    )
    .expect("scanner is valid")
}

fn majority_scanner() -> MachineSpec {
    fold_scanner(3, 4, |f, b| f + b as u8, |f| f >= 2)
}

fn parity_scanner() -> MachineSpec {
    fold_scanner(4, 2, |f, b| f ^ b as u8, |f| f == 1)
}

fn control_machine() -> MachineSpec {
    let mut query_states = BTreeMap::new();
    query_states.insert(
        StateId(0),
        QuerySpec {
            oracle: "reveal_pad".into(),
            arg: Interval::new(0, 1),
            out: Some(Interval::new(0, 1)),
            next: Some(StateId(1)),
        },
    );
    MachineSpec::new(
        vec!["ask".into(), "accept".into(), "reject".into()],
        StateId(0),
        StateId(1),
        StateId(2),
        Alphabet::binary(),
        BTreeMap::new(),
        BTreeMap::new(),
        query_states,
    )
    .expect("control machine is valid")
}

/// Resolve a game detector or a named local machine for the probabilistic
/// game (any corpus machine name works there).
pub fn local_machine_by_name(name: &str) -> Option<MachineSpec> {
    match name {
        "unary_increment" => Some(corpus::unary_increment()),
        "oscillator" => Some(corpus::oscillator()),
        "equality_checker" => Some(corpus::equality_checker()),
        "first_cell_one" => Some(corpus::first_cell_one()),
        "always_reject" => Some(corpus::always_reject()),
        "scrap_walker" => Some(corpus::scrap_walker()),
        "fair_coin" => Some(corpus::fair_coin(2)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{run, Halt, MachineConfig, RunOutcome};

    type NoRng = Option<&'static mut ChaCha8Rng>;

    fn verdict_of(spec: &MachineSpec, input: &str) -> char {
        let mut config = MachineConfig::with_input(spec, input).unwrap();
        let out = run(spec, &mut config, 100, NoRng::None).unwrap();
        assert!(matches!(
            out,
            RunOutcome::Halted {
                halt: Halt::Accept,
                ..
            }
        ));
        config.tape.read(0).0
    }

    #[test]
    fn majority_scanner_votes() {
        let spec = majority_scanner();
        assert_eq!(verdict_of(&spec, "110"), '1');
        assert_eq!(verdict_of(&spec, "011"), '1');
        assert_eq!(verdict_of(&spec, "100"), '0');
        assert_eq!(verdict_of(&spec, "000"), '0');
        assert_eq!(verdict_of(&spec, "111"), '1');
    }

    #[test]
    fn parity_scanner_folds_xor() {
        let spec = parity_scanner();
        assert_eq!(verdict_of(&spec, "1000"), '1');
        assert_eq!(verdict_of(&spec, "1100"), '0');
        assert_eq!(verdict_of(&spec, "1110"), '1');
        assert_eq!(verdict_of(&spec, "0000"), '0');
    }

    #[test]
    fn constant_guesses_zero() {
        let spec = constant_guess();
        assert_eq!(verdict_of(&spec, ""), '0');
    }

    #[test]
    fn detector_names_round_trip() {
        for d in [
            Detector::Constant,
            Detector::MajorityHistory,
            Detector::TimingProbe,
            Detector::Control,
        ] {
            assert_eq!(Detector::by_name(d.name()), Some(d));
        }
        assert_eq!(Detector::by_name("psychic"), None);
    }
}
