use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CfError>;

#[derive(Debug, Error)]
pub enum CfError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("stream too short: need {needed} digits, have {available}")]
    InsufficientDigits { needed: usize, available: usize },

    #[error("end of digit stream")]
    EndOfStream,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CfError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        CfError::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CfError::Io {
            path: path.into(),
            source,
        }
    }
}
