use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the enhancement engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input too short: {len} samples, need at least {frame_len}")]
    InputTooShort { len: usize, frame_len: usize },

    #[error("window/hop violates reconstruction: {0}")]
    NotCola(String),

    #[error("invalid STFT configuration: {0}")]
    InvalidStft(String),

    #[error("invalid probability: {0}")]
    InvalidProbability(f64),

    #[error("invalid noise PSD: {0}")]
    InvalidNoisePsd(f64),

    #[error("not PSD: trace {0}")]
    NotPsd(f64),

    #[error("zero noisy PSD")]
    ZeroNoisyPsd,

    #[error("singular correlation matrix")]
    SingularMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mask out of range: {value} at bin {bin}, frame {frame}")]
    MaskOutOfRange { value: f32, bin: usize, frame: usize },

    #[error("bad mask file header: {0}")]
    BadHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("silent reference")]
    SilentReference,

    #[error("silent signal: {0}")]
    SilentSignal(&'static str),

    #[error("unsupported audio: {0}")]
    UnsupportedAudio(String),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("report: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
