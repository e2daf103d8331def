use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or invalid configuration.
    #[error("config error: {0}")]
    Config(String),

    /// One or more validation checks failed.
    #[error("validation failed: {0}")]
    Check(String),

    #[error("run failed: {0}")]
    Run(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Check(_) | CliError::Run(_) | CliError::Io(_) => 1,
        }
    }
}

impl From<uavpl_core::Error> for CliError {
    fn from(e: uavpl_core::Error) -> Self {
        CliError::Run(e.to_string())
    }
}
