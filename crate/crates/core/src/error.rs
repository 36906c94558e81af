use thiserror::Error;

/// Errors produced by the QoC library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("negative value {0}")]
    NegativeValue(f64),

    #[error("incompatible accuracy: {left} vs {right}")]
    IncompatibleAccuracy { left: f64, right: f64 },

    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    #[error("unknown scenario '{0}' (valid: pg, pp, periodic, variable, sfd, lrd, congestion)")]
    UnknownScenario(String),

    #[error("zero rank variance")]
    ZeroRankVariance,

    #[error("constant series")]
    ConstantSeries,

    #[error("degenerate range")]
    DegenerateRange,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
