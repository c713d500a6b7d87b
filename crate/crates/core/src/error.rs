use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid construction parameters or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("refusing oracle computation: {0}")]
    OracleScale(String),

    #[error("unsupported dimension: {0}")]
    Unsupported(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Dimension { .. }
            | Error::Domain(_)
            | Error::OracleScale(_)
            | Error::Unsupported(_)
            | Error::Json { .. } => 1,
            Error::Numerical(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}

pub(crate) fn ensure_len(context: &'static str, expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::dim(context, expected, v.len()))
    }
}
