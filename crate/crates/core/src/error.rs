use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}, column {column}: cannot parse {cell:?} as a number")]
    NonNumeric {
        path: PathBuf,
        line: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: line {line}: expected {expected} columns, found {found}")]
    RaggedRow {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: file contains no data")]
    EmptyFile { path: PathBuf },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("view {view}: all samples coincide, the kernel width is zero")]
    DegenerateView { view: usize },

    #[error("sample {sample} has no neighbors with positive affinity")]
    IsolatedSample { sample: usize },

    #[error("node {node} has zero degree in the graph")]
    ZeroDegreeNode { node: usize },

    #[error("view {view}: W system is not positive definite (condition estimate {condition:e})")]
    NotPositiveDefinite { view: usize, condition: f64 },

    #[error("view-weight root solve did not converge after {iterations} iterations (|f| = {residual:e})")]
    RootSolve { iterations: usize, residual: f64 },

    #[error("k-means could not produce {clusters} non-empty clusters")]
    EmptyClusters { clusters: usize },

    #[error("non-finite objective after the {step} update in iteration {iteration}")]
    NonFinite { step: &'static str, iteration: usize },
}

impl Error {
    pub(crate) fn in_view(self, v: usize) -> Self {
        match self {
            Error::DegenerateView { .. } => Error::DegenerateView { view: v },
            Error::NotPositiveDefinite { condition, .. } => {
                Error::NotPositiveDefinite { view: v, condition }
            }
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
