use std::path::Path;

use forch_core::Error;
use serde_json::{json, Value};

use crate::config::ConfigIssue;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_TRANSFORM: u8 = 4;

/// Failure with its exit code and a machine-readable payload.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub details: Value,
}

impl CliError {
    pub fn config(issues: Vec<ConfigIssue>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            kind: "config",
            message: format!("{} configuration problem(s)", issues.len()),
            details: json!({ "issues": issues }),
        }
    }

    pub fn config_message(path: &str, message: impl Into<String>) -> Self {
        Self::config(vec![ConfigIssue { path: path.into(), message: message.into() }])
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError { code: EXIT_SOLVER, kind: "io", message: format!("{}: {e}", path.display()), details: Value::Null }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind,
            "exit_code": self.code,
            "message": self.message,
            "details": self.details,
        })
        .to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (code, kind, details) = match &e {
            Error::Domain(_)
            | Error::InvalidGppc(_)
            | Error::InvalidDomain(_)
            | Error::UnknownTag(_)
            | Error::Shape { .. } => (EXIT_CONFIG, "config", Value::Null),
            Error::Csv(_) | Error::Json(_) | Error::Io(_) => (EXIT_CONFIG, "input", Value::Null),
            Error::Compatibility { residual, tolerance } => {
                (EXIT_TRANSFORM, "compatibility", json!({ "compatibility_residual": residual, "tolerance": tolerance }))
            }
            Error::ChiOutOfRange { chi, chi_max, node } => {
                (EXIT_TRANSFORM, "chi_out_of_range", json!({ "chi": chi, "chi_max": chi_max, "node": node }))
            }
            Error::DegenerateGradient => (EXIT_TRANSFORM, "degenerate_gradient", Value::Null),
            Error::NotConverged { history } => {
                (EXIT_SOLVER, "not_converged", json!({ "iterations": history.len(), "last": history.last() }))
            }
            Error::CmcNonexistence { kind, history } => (
                EXIT_SOLVER,
                "cmc_nonexistence",
                json!({ "classification": kind, "iterations": history.len(), "last": history.last() }),
            ),
            Error::ZeroEnergy => (EXIT_SOLVER, "zero_energy", Value::Null),
            Error::NonFinite { .. } | Error::RootNotConverged { .. } | Error::LinearSolver(_) | Error::Invariant(_) => {
                (EXIT_SOLVER, "solver", Value::Null)
            }
        };
        CliError { code, kind, message, details }
    }
}
