//! Harness error taxonomy, mapped to process exit codes by `main`.

use eifg_core::{GridError, StepError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration; exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Numerical failure (blow-up, symmetry loss, non-finite data); exit code 3.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Filesystem failure; exit code 4.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<StepError> for CliError {
    fn from(e: StepError) -> Self {
        match e {
            StepError::Setup(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
