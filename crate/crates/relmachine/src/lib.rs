//! relmachine: a nested-simulation engine in which a global interpreter
//! drives a Turing machine encoded on a region of its own tape, services
//! constant-local-cost oracle queries (including truncated-Taylor
//! Schrödinger evolution), and instruments everything the simulated machine
//! provably cannot see from the inside: global time, global space, write
//! order, and approximation error.
//!
//! The crate is organized around two clocks. The global clock `t` counts
//! interpreter micro-operations; the local clock `τ` ticks only when the
//! simulated machine's own transition function has been fully applied.
//! Between two ticks the interpreter may do anything — pad adversarially,
//! evaluate an oracle, search for a tape that forces acceptance — and the
//! `experiments` module turns "the local machine cannot detect any of this"
//! into reproducible games with statistical acceptance.

pub mod corpus;
pub mod experiments;
pub mod machine;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod quantum;
pub mod tape;
pub mod trace;

pub use machine::{Halt, MachineConfig, MachineSpec, Move, StateId};
pub use model::{ModelParams, PaddingStrategy, RelativeModel};
pub use oracle::OracleBinding;
pub use tape::{Actor, Alphabet, Interval, Symbol, Tape, TapeLayout, TapeState, WriteOp};
pub use trace::{SnapshotMode, Trace};
