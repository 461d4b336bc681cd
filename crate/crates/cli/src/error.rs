use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

/// Failure of a command, split by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, bad config files, missing inputs.
    #[error("{0}")]
    Config(String),

    #[error("computation failed")]
    Compute(#[source] ldp_qif::Error),

    #[error("writing output failed")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Output(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

/// Tags a library result with the exit class its errors belong to.
pub(crate) trait ResultExt<T> {
    /// Errors caused by user input.
    fn usage(self) -> CliResult<T>;
    /// Errors raised while computing.
    fn compute(self) -> CliResult<T>;
}

impl<T> ResultExt<T> for ldp_qif::Result<T> {
    fn usage(self) -> CliResult<T> {
        self.map_err(|e| CliError::Config(e.to_string()))
    }

    fn compute(self) -> CliResult<T> {
        self.map_err(CliError::Compute)
    }
}
