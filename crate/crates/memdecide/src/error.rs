use thiserror::Error;

/// Failure of a command, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or inconsistent configuration, detected before any simulation.
    #[error("configuration error: {0:#}")]
    Config(anyhow::Error),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn config(e: impl Into<anyhow::Error>) -> Self {
        CliError::Config(e.into())
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        CliError::Runtime(e.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
