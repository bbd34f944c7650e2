use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid room: {0}")]
    InvalidRoom(String),

    #[error("{what} position {position:?} is not strictly inside the room")]
    OutsideRoom { what: &'static str, position: [f64; 3] },

    #[error("source coincides with the microphone (distance 0)")]
    ZeroDistance,

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(u32, u32),

    #[error("signal too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },

    #[error("signal has zero energy: {0}")]
    Silent(&'static str),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} is outside a vocabulary of {vocab}")]
    LabelOutOfRange { label: usize, vocab: usize },

    #[error("norm of v is zero")]
    ZeroNorm,

    #[error("malformed {format} input: {reason}")]
    Format { format: &'static str, reason: String },

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("scene sampling failed after {0} attempts")]
    InfeasibleScene(usize),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format { format, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
