use thiserror::Error;

use crate::metric_spaces::RadiiLadder;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point budget of {budget} exceeded while enumerating {what}")]
    BudgetExceeded { budget: usize, what: String },

    #[error("ladder stopped after {} of {requested} radii: {reason}", .completed.len())]
    PartialLadder {
        completed: Box<RadiiLadder>,
        requested: usize,
        reason: String,
    },

    #[error("base node {0} is not a vertex of the graph")]
    MissingBaseNode(u64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("DOS limit not numerically established: tail spread {spread:.3e} exceeds {threshold:.3e}")]
    DosLimit { spread: f64, threshold: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
