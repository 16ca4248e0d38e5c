use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("write failed: {0}")]
    Write(#[from] io::Error),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("utterance {id}: {message}")]
    InvalidUtterance { id: String, message: String },

    #[error("session {session_id}: {message}")]
    InvalidSession { session_id: String, message: String },

    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),

    #[error("invalid turn-taking parameters: {0}")]
    InvalidParams(String),

    #[error("cannot fit {kind}: {message}")]
    Fit { kind: String, message: String },

    #[error("invalid room geometry: {0}")]
    Geometry(String),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("unsupported audio encoding in {}: {detail}", path.display())]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("wav error in {}: {source}", path.display())]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("source audio for {source_id} unavailable: {message}")]
    MissingSource { source_id: String, message: String },

    #[error("signal error: {0}")]
    Signal(String),

    #[error("cannot build plan: {0}")]
    Plan(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("conversation {index} failed: {source}")]
    Conversation {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
