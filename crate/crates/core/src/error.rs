use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite filter coefficient at index {0}")]
    NonFiniteTaps(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),

    #[error("signals are misaligned: {0}")]
    Misaligned(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("path label mismatch: expected a {expected} path, got {got}")]
    LabelMismatch { expected: &'static str, got: String },

    #[error("equivalent channel truncated: {discarded_db:.1} dB of impulse energy falls outside {length} taps")]
    Truncation { length: usize, discarded_db: f64 },

    #[error("insufficient history: need {needed} samples, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("adaptation diverged at update {update}: non-finite tap in entry ({row},{col})")]
    Diverged { update: usize, row: usize, col: usize },

    #[error("zero-power signal cannot be noise loaded")]
    ZeroPower,

    #[error("pilot prefix of {0} symbols is shorter than the 256 required")]
    PilotTooShort(usize),

    #[error("BER bracket [{lo_db:.2}, {hi_db:.2}] dB does not straddle target {target:e} (BER {ber_lo:e} .. {ber_hi:e})")]
    BracketNotStraddling {
        lo_db: f64,
        hi_db: f64,
        target: f64,
        ber_lo: f64,
        ber_hi: f64,
    },

    #[error("BER is not monotone in Es/N0: {0}")]
    NonMonotone(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
