use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Flags or values that cannot describe a valid run. Exit status 2.
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] eerm_core::Error),
    #[error("model: {0}")]
    Model(String),
    #[error("io: {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
