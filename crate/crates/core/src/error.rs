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
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("parse error at line {line}, column `{column}`: cannot read {value:?} as a number")]
    Parse { line: u64, column: String, value: String },
    #[error("duplicate bank-year ({bank_id}, {year})")]
    DuplicateBankYear { bank_id: String, year: i32 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate regressor: {0}")]
    Degenerate(String),
    #[error("empty subsample: {0}")]
    EmptySubsample(String),
    #[error("empty model: {0}")]
    EmptyModel(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("tree json error: {0}")]
    TreeJson(#[from] serde_json::Error),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
