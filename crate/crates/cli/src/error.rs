//! Error type mapping every failure to the process exit code contract:
//! 2 usage, 3 bad input, 4 internal inconsistency.

use std::fmt;

/// A command failure, split by who is at fault: `Usage` means the flag
/// combination itself is wrong; `Lib` wraps a library error (bad input
/// files or, for consistency errors, a bug).
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(linklda::Error),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Lib(linklda::Error::Validation(message.into()))
    }

    /// Process exit code: 2 usage error, 3 validation/parse/io error,
    /// 4 internal-consistency error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(linklda::Error::Consistency(_)) => 4,
            CliError::Lib(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(message) => write!(f, "usage error: {message}"),
            CliError::Lib(err) => err.fmt(f),
        }
    }
}

impl From<linklda::Error> for CliError {
    fn from(err: linklda::Error) -> Self {
        CliError::Lib(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Lib(linklda::Error::Io(err))
    }
}

pub type CliResult<T> = Result<T, CliError>;
