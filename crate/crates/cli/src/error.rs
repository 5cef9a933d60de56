use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] seqest_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}, line {line}: {message}")]
    Observation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("bad grid spec {spec:?}: {message}")]
    Grid { spec: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
