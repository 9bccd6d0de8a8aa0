//! Oracle bindings: named computable functions the global machine evaluates
//! on behalf of the local machine, together with the reference cost model
//! that charges their global time and scrap footprint.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// What the evaluator is charged for, beyond fetching the argument and
/// writing the output: `steps` elementary operations, cycling over
/// `workspace_cells` scrap cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComputeCost {
    pub steps: u64,
    pub workspace_cells: u64,
}

impl ComputeCost {
    pub const FREE: ComputeCost = ComputeCost {
        steps: 0,
        workspace_cells: 0,
    };
}

/// Whether the binding computes its function exactly or within a certified
/// error bound.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    Exact,
    Approximate { epsilon: f64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleFailure {
    #[error("no oracle bound under the name `{0}`")]
    UnknownOracle(String),
    #[error("oracle `{0}` argument region lies outside the local region")]
    ArgOutsideLocal(String),
    #[error("oracle `{0}` argument cell {1} does not hold a binary symbol")]
    NonBinaryArgument(String, i64),
    #[error("oracle `{name}` produced {produced} bits, declared {declared}")]
    OutputLength {
        name: String,
        produced: usize,
        declared: usize,
    },
    #[error("oracle `{0}` output region does not fit inside the local region")]
    OutputOverflow(String),
    #[error("oracle `{name}` evaluator failed: {reason}")]
    Evaluator { name: String, reason: String },
}

/// A total function from bitstrings to bitstrings plus its charged cost.
pub trait OracleEvaluator: Send + Sync {
    fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, String>;

    /// Cost charged for this input under the reference schedule. Defaults
    /// to free (fetch and write-out are always charged separately).
    fn cost(&self, input: &[bool]) -> ComputeCost {
        let _ = input;
        ComputeCost::FREE
    }
}

/// A query-state attachment: identifier, evaluator, declared output length,
/// and the global cost model.
#[derive(Clone)]
pub struct OracleBinding {
    pub identifier: String,
    pub declared_output_len: usize,
    pub global_cost_model: CostModel,
    pub evaluator: Arc<dyn OracleEvaluator>,
}

impl fmt::Debug for OracleBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleBinding")
            .field("identifier", &self.identifier)
            .field("declared_output_len", &self.declared_output_len)
            .field("global_cost_model", &self.global_cost_model)
            .finish()
    }
}

impl OracleBinding {
    pub fn new(
        identifier: impl Into<String>,
        declared_output_len: usize,
        global_cost_model: CostModel,
        evaluator: Arc<dyn OracleEvaluator>,
    ) -> OracleBinding {
        assert!(declared_output_len >= 1, "oracle output must be non-empty");
        OracleBinding {
            identifier: identifier.into(),
            declared_output_len,
            global_cost_model,
            evaluator,
        }
    }

    /// f(x) = x on `len` bits. No compute charge: the copy work is already
    /// charged by the fetch and write-out phases.
    pub fn identity(len: usize) -> OracleBinding {
        OracleBinding::new(
            "identity",
            len,
            CostModel::Exact,
            Arc::new(IdentityEvaluator),
        )
    }

    /// XOR of all input bits. One accumulator cell, one op per input bit
    /// read plus one per accumulator update.
    pub fn parity() -> OracleBinding {
        OracleBinding::new("parity", 1, CostModel::Exact, Arc::new(ParityEvaluator))
    }

    /// A constant function. Used for per-trial control arms that hand the
    /// local machine the answer it provably cannot compute itself.
    pub fn constant(identifier: impl Into<String>, bits: Vec<bool>) -> OracleBinding {
        let len = bits.len();
        OracleBinding::new(
            identifier,
            len,
            CostModel::Exact,
            Arc::new(ConstantEvaluator { bits }),
        )
    }
}

struct IdentityEvaluator;

impl OracleEvaluator for IdentityEvaluator {
    fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, String> {
        Ok(input.to_vec())
    }
}

struct ParityEvaluator;

impl OracleEvaluator for ParityEvaluator {
    fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, String> {
        Ok(vec![input.iter().fold(false, |acc, &b| acc ^ b)])
    }

    fn cost(&self, input: &[bool]) -> ComputeCost {
        ComputeCost {
            steps: 2 * input.len() as u64,
            workspace_cells: 1,
        }
    }
}

struct ConstantEvaluator {
    bits: Vec<bool>,
}

impl OracleEvaluator for ConstantEvaluator {
    fn evaluate(&self, _input: &[bool]) -> Result<Vec<bool>, String> {
        Ok(self.bits.clone())
    }
}
