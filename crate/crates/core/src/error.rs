use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the augmentation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("buffer is empty")]
    EmptyBuffer,

    #[error("audio is empty")]
    EmptyAudio,

    #[error("audio too short: {got} samples, need at least {needed}")]
    TooShort { got: usize, needed: usize },

    #[error("analysis frame too short: {got} samples, need at least {needed}")]
    FrameTooShort { got: usize, needed: usize },

    #[error("expected sample rate {expected} Hz, got {got} Hz")]
    UnexpectedSampleRate { expected: u32, got: u32 },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("input has zero RMS")]
    SilentInput,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("pitch shift of {0} semitones is outside [-12, 12]")]
    InvalidShift(f64),

    #[error("scheme {0} requires a noise bank")]
    MissingNoiseBank(&'static str),

    #[error("directory {0} contains no WAV files")]
    EmptyDirectory(PathBuf),

    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },

    #[error("target duration {target_s:.3} s exceeds available training audio {total_s:.3} s")]
    TargetExceedsTotal { target_s: f64, total_s: f64 },

    #[error("streaming state used before initialization")]
    UninitializedState,

    #[error("benchmark workload failed: {0}")]
    WorkloadFailure(String),

    #[error("malformed {what}: {reason}")]
    Parse { what: &'static str, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
