use std::path::PathBuf;

use thiserror::Error;

/// Failure of one CLI invocation, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot read scenario {path}: {source}")]
    Unreadable {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse scenario: {0}")]
    Parse(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("computation failed: {0}")]
    Computation(#[from] rotation_core::Error),

    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    /// Process exit status. Each category has its own code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Unreadable { .. } => 3,
            CliError::Parse(_) | CliError::Validation(_) => 4,
            CliError::Computation(_) => 5,
            CliError::Output { .. } => 6,
        }
    }
}
