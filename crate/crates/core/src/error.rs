use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate ({lat}, {lon})")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("centroid of an empty point set")]
    EmptyCentroid,

    #[error("elapsed time must be positive, got {seconds} s")]
    NonPositiveElapsed { seconds: i64 },

    #[error("trajectory must be non-empty with strictly increasing timestamps")]
    InvalidTrajectory,

    #[error("PLT format error: {0}")]
    Format(String),

    #[error("line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need more than {k} points for a k-dist curve, got {n}")]
    TooFewPoints { k: usize, n: usize },

    #[error("need at least 2 users to rank pairs, got {0}")]
    TooFewUsers(usize),

    #[error("data directory not found: {0}")]
    MissingDataDir(PathBuf),

    #[error("no users found in {0}")]
    NoUsers(PathBuf),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        match source.kind() {
            csv::ErrorKind::Io(_) => {
                let path = path.into();
                match source.into_kind() {
                    csv::ErrorKind::Io(e) => Error::Io { path, source: e },
                    _ => unreachable!(),
                }
            }
            _ => Error::Csv {
                path: path.into(),
                source,
            },
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::MissingDataDir(_) | Error::InvalidParameter(_) | Error::Config(_) => {
                ErrorKind::Usage
            }
            Error::Io { .. } | Error::Json(_) => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }
}
