use thiserror::Error;

/// Errors raised by the analysis modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("non-monotonic timestamps in `{source_name}` at indices {indices:?}")]
    NonMonotonic {
        source_name: String,
        indices: Vec<usize>,
    },

    #[error("cutoff {cutoff_hz} Hz is not below the Nyquist frequency {nyquist_hz} Hz")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("signal too short: {0}")]
    TooShort(String),

    #[error("standard deviation is zero; standardization undefined")]
    ZeroVariance,

    #[error("input is constant; correlation undefined")]
    ConstantInput,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("|r| must be < 1 (got {0})")]
    CorrelationOutOfRange(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("zero-duration segment `{0}`")]
    ZeroDuration(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("undefined statistic: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
