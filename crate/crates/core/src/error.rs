use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid band {lo_hz}..{hi_hz} Hz at sample rate {sample_rate_hz} Hz")]
    InvalidBand {
        lo_hz: f64,
        hi_hz: f64,
        sample_rate_hz: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("incompatible stft layout: {0}")]
    IncompatibleStft(String),

    #[error("segment of {len} samples is shorter than the {overlap}-sample overlap")]
    SegmentTooShort { len: usize, overlap: usize },

    #[error("malformed wav: {0}")]
    MalformedWav(String),

    #[error("unsupported wav encoding: {0}")]
    UnsupportedCodec(String),

    #[error("expected a mono wav, found {0} channels")]
    MultiChannel(u16),

    #[error("{}: row {row}: {message}", path.display())]
    Row {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
