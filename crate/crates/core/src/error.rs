use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, mapped one-to-one onto CLI exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Io,
    Domain,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Io => 2,
            ErrorKind::Domain => 3,
            ErrorKind::Numeric => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Io => "io",
            ErrorKind::Domain => "domain",
            ErrorKind::Numeric => "numeric",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is outside the rating scale [1, 9]")]
    OutOfScale { value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("undefined index: {0}")]
    UndefinedIndex(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("backward called without a preceding training-mode forward in {0}")]
    GraphReuse(&'static str),

    #[error("label {label} out of range for {classes} classes")]
    LabelRange { label: usize, classes: usize },

    #[error("event window for click at {click_time} s is outside the recording ({duration} s)")]
    OutOfBounds { click_time: f64, duration: f64 },

    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid record {row}: {message}")]
    InvalidRecord { row: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidConfig(_) => ErrorKind::Usage,
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::Format { .. }
            | Error::Json(_) => ErrorKind::Io,
            Error::OutOfScale { .. }
            | Error::InvalidRecord { .. }
            | Error::DegenerateData(_)
            | Error::UndefinedIndex(_)
            | Error::LabelRange { .. }
            | Error::OutOfBounds { .. }
            | Error::InfeasibleSplit(_)
            | Error::EmptyDataset
            | Error::Shape(_) => ErrorKind::Domain,
            Error::NonFinite(_) | Error::Numeric(_) | Error::GraphReuse(_) => ErrorKind::Numeric,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
