use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the solvers, estimators and loaders.
///
/// Messages are prefixed with the module that produced them so that a
/// diagnostic printed by the CLI can be traced without a backtrace.
#[derive(Debug, Error)]
pub enum Error {
    #[error("core: dimension mismatch (expected {expected} features, got {actual})")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("{module}: empty dataset")]
    EmptyDataset { module: &'static str },
    #[error("{module}: need at least {required} data points, got {actual}")]
    TooFewPoints {
        module: &'static str,
        required: usize,
        actual: usize,
    },
    #[error("{module}: invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        module: &'static str,
        name: &'static str,
        reason: String,
    },
    #[error("{module}: non-finite value in {what}")]
    NonFinite {
        module: &'static str,
        what: String,
    },
    #[error("{module}: {what} must be {expected}")]
    WrongKind {
        module: &'static str,
        what: &'static str,
        expected: &'static str,
    },
    #[error("moments: entropy undefined for degenerate prediction (conditional variance {0})")]
    DegeneratePrediction(f64),
    #[error("linreg: degenerate feature (var_x = {0})")]
    DegenerateFeature(f64),
    #[error("ingest: covariance is not positive semidefinite ({minor} = {value})")]
    NotPositiveSemidefinite { minor: String, value: f64 },
    #[error("ingest: {path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },
    #[error("ingest: {path}: row {row}, column `{column}`: cannot parse {cell:?}")]
    BadCell {
        path: PathBuf,
        row: usize,
        column: String,
        cell: String,
    },
    #[error("ingest: {path}: no data rows")]
    NoDataRows { path: PathBuf },
    #[error("ingest: {0}")]
    Corpus(String),
    #[error("ingest: {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("ingest: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(module: &'static str, name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            module,
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(module: &'static str, what: impl Into<String>) -> Self {
        Error::NonFinite {
            module,
            what: what.into(),
        }
    }
}
