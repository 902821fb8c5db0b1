use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,
    #[error("empty slice")]
    EmptySlice,
    #[error("shift of {shift} days exceeds series length {len}")]
    ShiftOutOfRange { shift: i64, len: usize },
    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("series contains missing values")]
    MissingValues,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("collinear design")]
    CollinearDesign,
    #[error("insufficient observations: {n} rows for {p} parameters")]
    InsufficientObservations { n: usize, p: usize },
    #[error("zero variance")]
    ZeroVariance,
    #[error("non-finite statistic: {0}")]
    NonFinite(f64),

    #[error("no admissible path")]
    NoAdmissiblePath,
    #[error("oracle scale exceeded: lengths {0} and {1} (max 12)")]
    OracleScaleExceeded(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("input contains NaN")]
    NanInput,

    #[error("negative admission count {count} for ({ltla}, {trust})")]
    NegativeCount { ltla: String, trust: String, count: f64 },
    #[error("mapping has no records")]
    EmptyMapping,
    #[error("geo ids unknown to mapping: {}", .0.join(", "))]
    UnknownGeo(Vec<String>),
    #[error("population missing for LTLAs: {}", .0.join(", "))]
    MissingPopulation(Vec<String>),

    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("config: {0}")]
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
}

/// Coarse error class used for CLI exit codes and machine-readable reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Schema,
    Io,
    Compute,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Schema => "schema",
            ErrorCategory::Io => "io",
            ErrorCategory::Compute => "compute",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Schema => 3,
            ErrorCategory::Io => 4,
            ErrorCategory::Compute => 5,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => ErrorCategory::Config,
            Error::Schema { .. }
            | Error::NegativeCount { .. }
            | Error::EmptyMapping
            | Error::UnknownGeo(_)
            | Error::MissingPopulation(_) => ErrorCategory::Schema,
            Error::Io { .. } => ErrorCategory::Io,
            Error::Csv { source, .. } if source.is_io_error() => ErrorCategory::Io,
            Error::Csv { .. } => ErrorCategory::Schema,
            _ => ErrorCategory::Compute,
        }
    }

    pub(crate) fn schema(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
