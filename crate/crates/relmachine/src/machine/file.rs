//! The machine definition file: a versioned JSON document with states named
//! by string, converted to and from the validated in-memory spec.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    MachineSpec, Move, ProbabilisticTransition, QuerySpec, SpecError, StateId, Transition,
};
use crate::tape::{Alphabet, Interval, Symbol};

pub const MACHINE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub states: Vec<String>,
    pub start: String,
    pub accept: String,
    pub reject: String,
    pub alphabet: Vec<char>,
    #[serde(default)]
    pub transitions: Vec<TransitionRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probabilistic: Vec<ProbabilisticRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub query_states: Vec<QueryRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionRow {
    pub state: String,
    pub read: char,
    pub write: char,
    pub next: String,
    #[serde(rename = "move")]
    pub mv: Move,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbabilisticRow {
    pub state: String,
    pub read: char,
    pub successors: Vec<SuccessorRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessorRow {
    pub write: char,
    pub next: String,
    #[serde(rename = "move")]
    pub mv: Move,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRow {
    pub state: String,
    pub oracle: String,
    pub arg_region: RegionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_region: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
}

/// A sub-region of the local tape, in local coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionSpec {
    pub start: i64,
    pub len: u64,
}

impl From<RegionSpec> for Interval {
    fn from(r: RegionSpec) -> Interval {
        Interval::new(r.start, r.start + r.len as i64)
    }
}

impl From<Interval> for RegionSpec {
    fn from(i: Interval) -> RegionSpec {
        RegionSpec {
            start: i.start,
            len: i.len(),
        }
    }
}

#[derive(Debug, Error)]
pub enum MachineFileError {
    #[error("unsupported schema_version {0} (expected {MACHINE_SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("invalid machine: {0}")]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MachineFile {
    pub fn from_json(json: &str) -> Result<MachineFile, MachineFileError> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine file serialization")
    }

    pub fn into_spec(self) -> Result<MachineSpec, MachineFileError> {
        if self.schema_version != MACHINE_SCHEMA_VERSION {
            return Err(MachineFileError::SchemaVersion(self.schema_version));
        }
        let lookup = |name: &str| -> Result<StateId, MachineFileError> {
            self.states
                .iter()
                .position(|s| s == name)
                .map(|i| StateId(i as u16))
                .ok_or_else(|| MachineFileError::UnknownState(name.to_string()))
        };
        let alphabet = Alphabet::new(self.alphabet.iter().map(|&c| Symbol(c)).collect())
            .map_err(SpecError::from)?;
        let mut transitions = BTreeMap::new();
        for row in &self.transitions {
            transitions.insert(
                (lookup(&row.state)?, Symbol(row.read)),
                Transition {
                    write: Symbol(row.write),
                    next: lookup(&row.next)?,
                    mv: row.mv,
                },
            );
        }
        let mut probabilistic = BTreeMap::new();
        for row in &self.probabilistic {
            let mut successors = Vec::new();
            for s in &row.successors {
                successors.push((
                    Transition {
                        write: Symbol(s.write),
                        next: lookup(&s.next)?,
                        mv: s.mv,
                    },
                    s.p,
                ));
            }
            probabilistic.insert(
                (lookup(&row.state)?, Symbol(row.read)),
                ProbabilisticTransition { successors },
            );
        }
        let mut query_states = BTreeMap::new();
        for row in &self.query_states {
            let next = row.next.as_deref().map(lookup).transpose()?;
            query_states.insert(
                lookup(&row.state)?,
                QuerySpec {
                    oracle: row.oracle.clone(),
                    arg: row.arg_region.into(),
                    out: row.out_region.map(Into::into),
                    next,
                },
            );
        }
        let start = lookup(&self.start)?;
        let accept = lookup(&self.accept)?;
        let reject = lookup(&self.reject)?;
        Ok(MachineSpec::new(
            self.states,
            start,
            accept,
            reject,
            alphabet,
            transitions,
            probabilistic,
            query_states,
        )?)
    }

    pub fn from_spec(spec: &MachineSpec, name: Option<&str>) -> MachineFile {
        let state_name = |id: StateId| spec.state_name(id).to_string();
        MachineFile {
            schema_version: MACHINE_SCHEMA_VERSION,
            name: name.map(String::from),
            states: spec.states().to_vec(),
            start: state_name(spec.start()),
            accept: state_name(spec.accept()),
            reject: state_name(spec.reject()),
            alphabet: spec.alphabet().symbols().iter().map(|s| s.0).collect(),
            transitions: spec
                .transitions()
                .iter()
                .map(|((state, read), t)| TransitionRow {
                    state: state_name(*state),
                    read: read.0,
                    write: t.write.0,
                    next: state_name(t.next),
                    mv: t.mv,
                })
                .collect(),
            probabilistic: spec
                .probabilistic()
                .iter()
                .map(|((state, read), dist)| ProbabilisticRow {
                    state: state_name(*state),
                    read: read.0,
                    successors: dist
                        .successors
                        .iter()
                        .map(|(t, p)| SuccessorRow {
                            write: t.write.0,
                            next: state_name(t.next),
                            mv: t.mv,
                            p: *p,
                        })
                        .collect(),
                })
                .collect(),
            query_states: spec
                .query_states()
                .iter()
                .map(|(state, q)| QueryRow {
                    state: state_name(*state),
                    oracle: q.oracle.clone(),
                    arg_region: q.arg.into(),
                    out_region: q.out.map(Into::into),
                    next: q.next.map(state_name),
                })
                .collect(),
        }
    }
}
