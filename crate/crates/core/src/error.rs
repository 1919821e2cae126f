use thiserror::Error;

use crate::expr::ExprError;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} lies outside the open interval ({a}, {b})")]
    Domain { x: f64, a: f64, b: f64 },

    #[error("invalid interval [{a}, {b}]: right endpoint must exceed left endpoint")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular collocation system in partition {partition} (pivot ratio estimate {condition:.3e})")]
    SingularSystem { partition: usize, condition: f64 },

    #[error("failed to evaluate {what} at x = {x}: {reason}")]
    Evaluation {
        what: &'static str,
        x: f64,
        reason: String,
    },

    #[error("refinement would create a partition of length {length:e} (minimum {min:e})")]
    DegeneratePartition { length: f64, min: f64 },

    #[error("sample has zero standard deviation")]
    DegenerateSample,

    #[error("unknown problem `{id}`; registered problems: {}", known.join(", "))]
    UnknownProblem { id: String, known: Vec<String> },

    #[error("problem file key `{key}`: {message}")]
    Schema { key: String, message: String },

    #[error("bound-model fit did not converge after {starts} starts")]
    FitNonConvergence { starts: usize },

    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
