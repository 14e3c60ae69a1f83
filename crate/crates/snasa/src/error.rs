use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors from file IO, file parsing and the pipeline itself.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A bad record; `line` is 1-based.
    #[error("{path}: {message} at line {line}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A file that is unreadable as a whole (bad magic, truncation, checksum).
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] snasa_core::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Core(e) if e.is_numerical())
    }
}
