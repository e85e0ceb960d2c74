use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate paper_id `{0}`")]
    DuplicatePaper(String),

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("pool size {available} < requested {requested}")]
    PoolTooSmall { available: usize, requested: usize },

    #[error("no main LaTeX file found under {0}")]
    NoMainFile(PathBuf),

    #[error("inclusion cycle: {}", .0.join(" -> "))]
    InclusionCycle(Vec<String>),

    #[error("converter `{command}` failed ({status}): {stderr}")]
    ConverterFailed {
        command: String,
        status: String,
        stderr: String,
    },

    #[error("plain-text rendering of {0} produced no text")]
    EmptyRendering(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("no context for paper `{0}`")]
    MissingContext(String),

    #[error("environment variable `{0}` is not set; export the API key under that name")]
    MissingAuth(String),

    #[error("http status {status}: {body}")]
    HttpStatus { status: u16, body: String },

    #[error("transport: {0}")]
    Transport(String),

    #[error("malformed response: {0}")]
    Response(String),

    #[error("report error: {0}")]
    Report(String),

    #[error("{failed} of {total} papers failed: {first}")]
    Papers {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
