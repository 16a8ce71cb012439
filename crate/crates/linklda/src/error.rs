//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// All failure modes surfaced by the library.
///
/// `Parse` and `Validation` signal bad input (malformed files, out-of-range
/// ids, inconsistent dimensions); `Consistency` signals corruption of internal
/// sampler state and always indicates a bug rather than bad input.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// Structurally well-formed input that violates a documented requirement.
    #[error("validation error: {0}")]
    Validation(String),

    /// Internal sampler state failed an invariant check.
    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(path: &std::path::Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
