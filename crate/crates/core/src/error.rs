use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("validation error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Validation { row: Option<usize>, message: String },
    #[error("invalid state: {0}")]
    State(String),
    #[error("stale feature cache: fingerprint does not match the requested configuration")]
    StaleCache,
    #[error("unsupported cache version {found} (newest supported is {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn validation(row: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Validation {
            row,
            message: msg.into(),
        }
    }
}
