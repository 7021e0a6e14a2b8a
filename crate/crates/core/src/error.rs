use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("format error on line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("word not in embedding vocabulary: {0}")]
    OutOfVocabulary(String),

    #[error("invalid model dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown construction tag {tag:?} on line {line}")]
    UnknownConstruction { line: usize, tag: String },

    #[error("non-binary label {value:?} on line {line}")]
    InvalidLabel { line: usize, value: String },

    #[error("requested split sizes sum to {requested} but only {available} pairs are available")]
    SplitTooLarge { requested: usize, available: usize },

    #[error("posts reference unknown politicians: {0:?}")]
    OrphanPosts(Vec<String>),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("CoNLL-U error on line {line}: {message}")]
    Conllu { line: usize, message: String },

    #[error("design matrix is rank deficient; collinear columns: {columns:?}")]
    RankDeficient { columns: Vec<String> },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty cells in two-way layout: {0:?}")]
    EmptyCells(Vec<String>),

    #[error("p value out of range [0, 1]: {0}")]
    InvalidPValue(f64),
}

impl Error {
    pub(crate) fn format(line: usize, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            message: message.into(),
        }
    }
}
