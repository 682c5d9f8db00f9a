use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by any stage of the contour pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite or out-of-range value: {0}")]
    InvalidValue(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("query ({hs}, {v}) lies outside the grid")]
    OutOfGrid { hs: f64, v: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("model cannot be evaluated on this grid: {0}")]
    EvaluationDomain(String),

    #[error("invalid return period: {0}")]
    InvalidReturnPeriod(String),

    #[error("polar frame error: {0}")]
    Frame(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("{} invalid row(s), first: {}", .0.len(), .0.first().map(|r| r.to_string()).unwrap_or_default())]
    Range(Vec<RowError>),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable name, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InvalidValue(_) => "InvalidValue",
            Error::DegenerateData(_) => "DegenerateData",
            Error::GridTooSmall(_) => "GridTooSmall",
            Error::OutOfGrid { .. } => "OutOfGrid",
            Error::FitFailure(_) => "FitFailure",
            Error::EvaluationDomain(_) => "EvaluationDomainError",
            Error::InvalidReturnPeriod(_) => "InvalidReturnPeriod",
            Error::Frame(_) => "FrameError",
            Error::Geometry(_) => "GeometryError",
            Error::Io { .. } => "IoError",
            Error::Schema(_) => "SchemaError",
            Error::Range(_) => "RangeError",
            Error::Config(_) => "ConfigError",
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::Schema(_) | Error::Range(_) | Error::Config(_) => 4,
            Error::DegenerateData(_) => 5,
            Error::FitFailure(_) => 6,
            _ => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// A rejected input row.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RowError {
    /// 1-based line number in the source file (the header is line 1).
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}
