use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate bar for {symbol} on {date}")]
    Duplicate { symbol: String, date: NaiveDate },

    #[error("invalid bar on {date}: {msg}")]
    Validation { date: NaiveDate, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in field `{field}`")]
    Encoding { field: &'static str },

    #[error("column plan needs {needed} columns but fixed width is {available}")]
    Capacity { needed: usize, available: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("feature error: {0}")]
    Feature(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("incompatible checkpoint format version {found} (expected {expected})")]
    Incompatible { found: u32, expected: u32 },

    #[error("training diverged at epoch {epoch}, batch {batch}: {msg}")]
    Training {
        epoch: usize,
        batch: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
