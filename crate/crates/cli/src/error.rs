use std::io;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] staloha::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Core parameter errors found while resolving a config are config errors.
    pub fn config(e: staloha::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Engine(staloha::Error::InvalidParameter(_)) => EXIT_CONFIG,
            CliError::Engine(staloha::Error::NonConvergence { .. }) => EXIT_NON_CONVERGENCE,
            _ => EXIT_RUNTIME,
        }
    }
}
