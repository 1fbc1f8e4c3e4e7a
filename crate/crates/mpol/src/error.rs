//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the enhancement and adaptation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input clip is shorter than one analysis frame.
    #[error("input too short: {got} samples, need at least {need}")]
    InputTooShort { got: usize, need: usize },

    /// Spectrogram and STFT configuration disagree.
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    /// Two grids (or a grid and a network) have incompatible dimensions.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// A forward cache was paired with the wrong network or gradient.
    #[error("cache mismatch: {0}")]
    CacheMismatch(String),

    /// Malformed or truncated parameter file.
    #[error("format error: {0}")]
    FormatError(String),

    /// An optimizer step received a NaN or infinite gradient.
    #[error("non-finite gradient at parameter {position}")]
    NonFiniteGradient { position: usize },

    /// Source training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    /// A metric has no defined value for the given inputs.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Aggregation over an empty row set.
    #[error("no data to aggregate")]
    NoData,

    /// Configuration file could not be parsed or contains invalid values.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// WAV file could not be read or has an unsupported layout.
    #[error("wav error: {0}")]
    Wav(String),
}

pub type Result<T> = std::result::Result<T, Error>;
