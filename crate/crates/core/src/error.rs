use std::io;

use thiserror::Error;

/// Errors raised by the library.
///
/// Variants map onto the CLI exit-code contract: [`Error::Io`] is an I/O
/// failure (exit 2), everything else is a validation or configuration
/// failure (exit 1).
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing label: {0}")]
    MissingLabel(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for failures of the underlying filesystem, as opposed to bad data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
