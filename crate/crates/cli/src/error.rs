use std::path::PathBuf;

use meg_core::MegError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] MegError),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}, line {line}: {message}", path.display())]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Model(e) => match e {
                MegError::NodeOutOfRange { .. } | MegError::InvalidLog(_) | MegError::Ordering { .. } => "data",
                MegError::InvalidSpec(_) | MegError::InvalidConfig(_) | MegError::Unsupported(_) => "config",
                MegError::InvalidParams(_) => "params",
                MegError::FitFailed { .. } => "fit",
                MegError::SimulationTruncated { .. } => "simulation",
                _ => "numeric",
            },
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Format { .. } => "format",
            CliError::Config(_) => "config",
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
