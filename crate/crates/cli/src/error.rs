use std::io;
use std::path::PathBuf;

use chaos_market_core::Error as ModelError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// The analysis ran but could not produce its headline result.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Model(e) => match e {
                ModelError::Parameter(_) | ModelError::Input(_) | ModelError::Unsupported(_) => 1,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Numeric(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
