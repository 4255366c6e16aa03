use std::fmt;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit 1).
    #[error("validation: {0}")]
    Validation(String),
    /// A computation or file operation failed (exit 2).
    #[error("runtime: {0}")]
    Runtime(String),
    /// `verify` ran and found a failing row (exit 3).
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }

    pub fn validation(msg: impl fmt::Display) -> Self {
        CliError::Validation(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }

    /// Message on one line, so callers can parse `kind: reason`.
    pub fn single_line(&self) -> String {
        self.to_string().replace(['\n', '\r'], " ")
    }
}

impl From<infoplane::Error> for CliError {
    fn from(e: infoplane::Error) -> Self {
        use infoplane::Error as E;
        match e {
            E::InputDomain(_) | E::PartitionDomain(_) | E::Format(_) | E::Consistency(_) => {
                CliError::Validation(e.to_string())
            }
            E::Numeric { .. } | E::Divergence { .. } | E::Io(_) | E::Json(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
