use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),

    #[error("column `{column}` declares {count} level(s); categorical columns need at least 2")]
    TooFewLevels { column: String, count: usize },

    #[error("unknown level `{value}` for column `{column}`")]
    UnknownLevel { column: String, value: String },

    #[error("missing value for column `{0}`")]
    MissingColumn(String),

    #[error("column `{column}`: {message}")]
    InvalidValue { column: String, message: String },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("perfect separation: maximum-likelihood estimate does not exist ({0})")]
    PerfectSeparation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("dataset has no decision values for {0} row(s)")]
    MissingDecisions(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
