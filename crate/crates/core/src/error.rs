use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the engine.
///
/// Algorithmic outcomes (a candidate raising, a UT failing, a vote being
/// rejected) are data and never show up here.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("template `{template}` is missing a binding for slot `{slot}`")]
    MissingSlot { template: String, slot: String },

    #[error("gateway error: {0}")]
    Gateway(String),

    #[error("scripted backend exhausted: no script entry matches request `{0}`")]
    ScriptExhausted(String),

    #[error("replay cache miss for key {0}")]
    CacheMiss(String),

    #[error("harness infrastructure failure: {0}")]
    Infra(String),

    #[error("no assert-style tests could be extracted for `{0}`")]
    ExtractionFailed(String),

    #[error("problem `{0}` declares no enumerable input domain")]
    OracleUnavailable(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }

    /// Configuration problems abort a command; everything else is an item failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::File { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
