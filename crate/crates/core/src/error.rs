use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: unknown smell type `{token}`")]
    UnknownSmell { row: usize, token: String },
    #[error("row {row}: duplicate sample_id `{id}`")]
    DuplicateSampleId { row: usize, id: String },
    #[error("row {row}: column `{column}` value {value} violates {rule}")]
    InvalidValue {
        row: usize,
        column: String,
        value: f64,
        rule: &'static str,
    },
    #[error("row {row}: empty sample_id")]
    EmptySampleId { row: usize },
    #[error("no rows survived cleaning")]
    NoRows,
    #[error("empty {0} partition")]
    EmptyPartition(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("feature mask selects no features")]
    EmptyMask,
    #[error("feature mask has {mask} bits but dataset has {features} features")]
    MaskLength { mask: usize, features: usize },
    #[error("{folds} folds requested for {rows} rows")]
    TooManyFolds { folds: usize, rows: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("singular design matrix; ridge fallback failed")]
    SingularDesign,
    #[error("polynomial expansion needs {needed} columns, cap is {cap}")]
    ExpansionTooLarge { needed: usize, cap: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("every row has |actual| <= 1e-9; accuracy undefined")]
    AllRowsExcluded,
    #[error("task count {0} outside (0, 10000]")]
    TaskCountOutOfRange(f64),
    #[error("{model} failed on fold {fold}: {source}")]
    Fold {
        model: String,
        fold: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("unsupported format version {0}")]
    FormatVersion(u32),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_fold(self, model: impl Into<String>, fold: usize) -> Self {
        Error::Fold {
            model: model.into(),
            fold,
            source: Box::new(self),
        }
    }
}
