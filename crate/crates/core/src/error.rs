use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

use crate::ingest::Fips;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    /// A required column is missing, or a file's columns do not match the
    /// expected layout.
    #[error("schema error: missing column {column}")]
    Schema { column: String },

    #[error("line {line}: {message}")]
    Row { line: u64, message: String },

    #[error("duplicate record for fips {fips} on {date}")]
    Duplicate { fips: Fips, date: NaiveDate },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("training error: {0}")]
    Training(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("feature mismatch: expected [{}], found [{}]", expected.join(","), found.join(","))]
    FeatureMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("model file: {0}")]
    Model(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    /// Usage and configuration problems map to exit code 2, everything else to 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parameter(_) => 2,
            _ => 1,
        }
    }
}
