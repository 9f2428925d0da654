use std::path::PathBuf;

use thiserror::Error;

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

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    NonNumeric {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("duplicate feature name '{0}'")]
    DuplicateColumn(String),

    #[error("row {row}: label '{value}' is not one of +1, 1, -1, 0")]
    InvalidLabel { row: usize, value: String },

    #[error("label column '{0}' not found")]
    MissingLabelColumn(String),

    #[error("dataset is already standardized")]
    AlreadyStandardized,

    #[error("datasets share no feature names")]
    EmptyIntersection,

    #[error("feature '{0}' does not name a dataset column")]
    UnknownFeature(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operation requires a labeled dataset")]
    Unlabeled,

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperParam(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite loss or gradient at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("bootstrap {index}: {source}")]
    Bootstrap {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

/// Attaches a description of the failing step to an error.
pub trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(context()))
    }
}
