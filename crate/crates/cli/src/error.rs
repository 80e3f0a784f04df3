use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    /// Inputs that parse but do not fit together (missing labels or
    /// scores, no artifacts).
    #[error("{0}")]
    Input(String),
    #[error("{failed} of {total} tasks produced no artifact")]
    TasksFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Io { .. } => 3,
            CliError::TasksFailed { .. } => 1,
        }
    }
}
