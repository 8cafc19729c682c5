use std::fmt;
use std::process::ExitCode;

use nlcalc_core::Error;

/// Failure of a run, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// A mathematical invariant failed (exit 1).
    Invariant(String),
    /// Inputs were rejected (exit 3).
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invariant(_) => ExitCode::from(1),
            CliError::Validation(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NonpositiveQhat { .. } | Error::LineSearchFailure { .. } | Error::NonFinite(_) => {
                CliError::Invariant(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}
