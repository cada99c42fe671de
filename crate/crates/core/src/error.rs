use thiserror::Error;

use crate::solver::IterationRecord;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid GPPC polynomial: {0}")]
    InvalidGppc(String),

    #[error("root finding did not converge after {iterations} iterations (residual {residual:e})")]
    RootNotConverged { iterations: usize, residual: f64 },

    #[error("invalid domain geometry: {0}")]
    InvalidDomain(String),

    #[error("unknown boundary tag `{0}`")]
    UnknownTag(String),

    #[error("field shape mismatch: expected {expected} nodes, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("non-finite value in field `{name}` at node {node}")]
    NonFinite { name: String, node: usize },

    #[error("compatibility violated: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Compatibility { residual: f64, tolerance: f64 },

    #[error("chi = {chi} is not admissible (chi_max = {chi_max}, violated at node {node})")]
    ChiOutOfRange { chi: f64, chi_max: f64, node: usize },

    #[error("gradient vanishes identically; chi_max is unbounded")]
    DegenerateGradient,

    #[error("Picard iteration did not converge in {} iterations", history.len())]
    NotConverged { history: Vec<IterationRecord> },

    #[error("CMC iteration {kind} after {} iterations: no graph solution", history.len())]
    CmcNonexistence { kind: FailureKind, history: Vec<IterationRecord> },

    #[error("linear solver failed: {0}")]
    LinearSolver(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("energy integral vanishes; productivity index is undefined")]
    ZeroEnergy,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// How a divergent CMC iteration was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Diverged,
    Stalled,
}

impl std::fmt::Display for FailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureKind::Diverged => f.write_str("diverged"),
            FailureKind::Stalled => f.write_str("stalled"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
