use std::path::PathBuf;

use chrono::NaiveDateTime;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A configuration field is out of range. `field` names the offending key.
    #[error("invalid value for `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("{path}: line {line}, column `{column}`: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },

    #[error("{path}: line {line}: value {value} outside [{lower}, {upper}] Wh/m²")]
    Bound {
        path: PathBuf,
        line: u64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error(
        "{path}: line {line}: timestamp {found} does not follow {previous} by exactly one step; \
         encode missing rows as GAP (empty value) instead of skipping them"
    )]
    NonMonotone {
        path: PathBuf,
        line: u64,
        previous: NaiveDateTime,
        found: NaiveDateTime,
    },

    #[error("series too short: {len} points, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("site `{site}` is unsupported: extraterrestrial irradiation is zero on {date}")]
    UnsupportedSite { site: String, date: chrono::NaiveDate },

    #[error("instant {0} is masked (sun below the daylight threshold)")]
    MaskedInstant(NaiveDateTime),

    #[error("series is constant or empty; min-max normalization needs two distinct values")]
    ConstantSeries,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("mean of measured values is not positive ({0})")]
    NonPositiveMean(f64),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("too few samples: {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("training diverged at epoch {epoch} (loss is not finite)")]
    TrainingFailed { epoch: usize },

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("model shape mismatch: {0}; the architecture is fixed at 8-3-1")]
    ShapeMismatch(String),

    #[error("no forecast windows could be formed from the evaluation series")]
    EmptyWindows,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user-supplied parameters or configs, as
    /// opposed to failures while running.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::InvalidConfig { .. })
    }
}
