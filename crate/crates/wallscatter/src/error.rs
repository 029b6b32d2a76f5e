use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    /// Malformed input; `line` is 1-based.
    #[error("{origin}:{line}: {message}")]
    Parse { origin: String, line: u64, message: String },

    #[error("{origin}: {message}")]
    Input { origin: String, message: String },

    #[error(transparent)]
    Model(#[from] wallscatter_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("fit did not converge within {rounds} rounds")]
    FitNonConvergence { rounds: usize },
}

impl AppError {
    pub(crate) fn parse(origin: &str, line: u64, message: impl Into<String>) -> Self {
        AppError::Parse { origin: origin.to_string(), line, message: message.into() }
    }

    pub(crate) fn input(origin: &str, message: impl Into<String>) -> Self {
        AppError::Input { origin: origin.to_string(), message: message.into() }
    }

    /// 1 usage, 2 input data, 3 numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::FitNonConvergence { .. } | AppError::Model(wallscatter_core::Error::NonConvergence { .. }) => 3,
            _ => 2,
        }
    }
}
