//! Pipeline stages behind the `n2f` command: corpus generation, task
//! building, evaluation and scoring.

pub mod files;
pub mod pipeline;

use std::fmt;
use std::path::Path;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_TRANSPORT: u8 = 3;

/// A failed stage with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn transport(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_TRANSPORT,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure::validation(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<n2f_core::Error> for Failure {
    fn from(e: n2f_core::Error) -> Failure {
        let code = match e {
            n2f_core::Error::Infeasible { .. } => EXIT_INFEASIBLE,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<n2f_gateway::GatewayError> for Failure {
    fn from(e: n2f_gateway::GatewayError) -> Failure {
        let code = match e {
            n2f_gateway::GatewayError::Transport { .. } => EXIT_TRANSPORT,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::validation(e.to_string())
    }
}
