use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("table has no columns")]
    EmptyData,

    #[error("need at least 2 numeric columns with nonzero variance, found {found}")]
    InsufficientColumns { found: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("column `{column}` has no observed values")]
    AllMissing { column: String },

    #[error("missing fraction {gamma} selects no cells in a {n_rows}x{n_cols} table")]
    NoCells {
        gamma: f64,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("missingness mechanism: {0}")]
    Mechanism(String),

    #[error("strawman baseline error is zero; relative error undefined")]
    DegenerateBaseline,

    #[error("tables are not congruent: {0}")]
    Incongruent(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
