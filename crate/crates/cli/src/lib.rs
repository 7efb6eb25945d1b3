//! Configuration, execution and artifact handling for the `pbvqo` binary.

pub mod config;
pub mod output;
pub mod runner;
pub mod trace;

/// Exit code 1 for bad input, 2 for failures while running.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
