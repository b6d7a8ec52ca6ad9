//! Crate-wide error types.

use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

/// Top-level error for pipeline, ingest, graph, and export operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error(transparent)]
    Llm(#[from] LlmError),

    #[error("extraction failed for batch {batch_id}: {detail}")]
    Extraction { batch_id: String, detail: String },

    #[error("metric undefined on an empty graph")]
    EmptyGraph,

    #[error("missing stage artifact {path}: run `{stage}` first")]
    MissingArtifact { stage: String, path: PathBuf },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed record at {path}:{line}: {detail}")]
    Record {
        path: PathBuf,
        line: usize,
        detail: String,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

/// Errors produced by the chat-completion client and its backends.
#[derive(Debug, Error)]
pub enum LlmError {
    #[error("missing API key: environment variable {0} is not set")]
    MissingApiKey(String),

    #[error("provider rejected the request (HTTP {status}): {body}")]
    Provider { status: u16, body: String },

    #[error("request timed out after {0:?}")]
    Timeout(Duration),

    #[error("transport failure after {attempts} attempts: {log}")]
    RetriesExhausted { attempts: u32, log: String },

    #[error("mock backend could not interpret the prompt: {0}")]
    MockProtocol(String),

    #[error("provider returned an unusable response: {0}")]
    MalformedResponse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
