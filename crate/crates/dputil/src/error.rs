use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}, column `{column}`: {reason}")]
    Ingest {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: unsupported format: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("nothing to report: the results contain no successful rows")]
    EmptyReport,
    #[error("plotting failed: {0}")]
    Plot(String),
    #[error(transparent)]
    Core(#[from] dputil_core::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}

pub(crate) fn csv_err(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Csv { path, source }
}
