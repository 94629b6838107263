use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("window length {window_len} exceeds signal length {signal_len}")]
    WindowTooLong { window_len: usize, signal_len: usize },

    #[error("window length {0} must be even and at least 2")]
    BadWindow(usize),

    #[error("need at least 2 modes (residual plus one), got {0}")]
    BadModeCount(usize),

    #[error("non-finite sample in channel {channel} at index {index}")]
    NonFinite { channel: usize, index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    BadParameter { name: &'static str, reason: String },

    #[error("custom initial frequencies have length {got}, expected {expected}")]
    CustomLengthMismatch { expected: usize, got: usize },

    #[error("cannot reflect-pad {pad} samples on a signal of length {len}")]
    PadTooLarge { pad: usize, len: usize },

    #[error("overlap-add window sum vanishes at sample {0}")]
    ZeroWindowSum(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("epochs have unequal length: {0}")]
    RaggedEpochs(String),

    #[error("channel {0} has zero variance")]
    DegenerateVariance(usize),

    #[error("band [{lo}, {hi}] Hz is not inside (0, {nyquist}) Hz")]
    BadBand { lo: f64, hi: f64, nyquist: f64 },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::BadParameter {
            name,
            reason: reason.into(),
        }
    }
}
