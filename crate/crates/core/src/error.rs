use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading inputs or running the analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed input record. `line` is 1-based.
    #[error("{file}: {message} (line {line})")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error("unsupported audio format: {field} = {value}")]
    UnsupportedAudio { field: &'static str, value: String },

    #[error("audio: {0}")]
    Audio(String),

    #[error("session manifest not found: {0}")]
    ManifestMissing(PathBuf),

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("teacher never detected")]
    TeacherNeverDetected,

    #[error("no usable pose or box for foot anchor")]
    NoAnchor,

    #[error("missing upstream artifact: {0}")]
    MissingArtifact(&'static str),

    #[error("{0}")]
    Scoring(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
