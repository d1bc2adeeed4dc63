use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The backend could not be reached, even after retries.
    #[error("transport error: {0}")]
    Transport(String),

    /// The backend answered, but with something we cannot use.
    #[error("backend error: {0}")]
    Backend(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A malformed record in an ingested file. `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Ingest { path: String, line: usize, message: String },

    /// A dataset file that does not match its documented layout.
    #[error("format error at {locator}: {message}")]
    Format { locator: String, message: String },

    #[error("index snapshot: {0}")]
    Snapshot(String),

    #[error("entity linker: {0}")]
    Linker(String),

    #[error("no reasoning paths to select from")]
    NoPaths,

    #[error("run produced no records")]
    EmptyRun,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn backend(msg: impl Into<String>) -> Self {
        Error::Backend(msg.into())
    }

    /// True for failures that come from talking to a model service.
    pub fn is_gateway(&self) -> bool {
        matches!(self, Error::Transport(_) | Error::Backend(_) | Error::Linker(_))
    }
}
