//! Library surface of the command-line front end; the binary in `main.rs`
//! is a thin wrapper so integration tests can drive ingestion, documents,
//! and orchestration directly.

pub mod args;
pub mod document;
pub mod ingest;
pub mod run;

/// Exit codes: 0 success, 1 input error, 2 optimization failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Core(#[from] c3l_core::Error),
}

impl CliError {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Core(c3l_core::Error::Input(_)) => 1,
            CliError::Core(_) => 2,
        }
    }
}
