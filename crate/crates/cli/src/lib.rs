//! Reproducible experiment runner: validated JSON configs in, byte-stable
//! CSV/JSON outputs plus a digest manifest out.

pub mod config;
pub mod manifest;
pub mod output;
pub mod pipelines;
pub mod suites;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Config does not match the schema; `path` is the offending field.
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Core(#[from] ergolab::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("replay failed: {0}")]
    Replay(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// 2 for schema violations, 3 for exhausted point budgets, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Core(ergolab::Error::BudgetExceeded { .. }) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
