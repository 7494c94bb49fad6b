use std::process::ExitCode;

/// Failure classes and their process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, bad config, nothing to work on.
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    /// Unreadable, missing or inconsistent input and output files.
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

impl From<brakesense::Error> for CliError {
    fn from(e: brakesense::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, brakesense::Error::InvalidArgument(_)) {
            CliError::Usage(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}
