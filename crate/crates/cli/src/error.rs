use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// `message` names `key` when one is known.
    #[error("{message}")]
    Config { key: Option<String>, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A verification ran to completion and did not hold.
    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] tide::Error),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config { key: Some(key.to_string()), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 for failed checks, 3 for numeric divergence, 2 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Core(tide::Error::Divergence { .. }) => 3,
            _ => 2,
        }
    }
}
