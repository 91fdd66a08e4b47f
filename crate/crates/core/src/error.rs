use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report.
///
/// The CLI maps these onto exit codes: backend failures exit 2, everything
/// else exits 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot decode image {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("nothing to evaluate: {0}")]
    EmptyDataset(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("backend failed: {0}")]
    Backend(String),
    #[error("backend timed out after {0:.1}s")]
    BackendTimeout(f64),
    #[error("codec error: {0}")]
    Codec(String),
    #[error("malformed record: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// True for failures raised by an external enhancement or embedding backend.
    pub fn is_backend(&self) -> bool {
        matches!(self, Error::Backend(_) | Error::BackendTimeout(_))
    }
}
