use thiserror::Error;

use crate::nuisance_oracle::Component;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A nuisance function left [0, 1] (or a construction left its admissible range).
    #[error("construction invalid: {what} = {value} at x = {point:?}")]
    ConstructionInvalid {
        what: String,
        point: Vec<f64>,
        value: f64,
    },

    #[error("degenerate propensity: E[m(X)] = {0:e}")]
    DegeneratePropensity(f64),

    #[error("budget infeasible for {component}: amplitude {amplitude} leaves [{lower}, {upper}] ({detail})")]
    BudgetInfeasible {
        component: Component,
        amplitude: f64,
        lower: f64,
        upper: f64,
        detail: String,
    },

    #[error("overlap violation at row {row}: estimated propensity {value}")]
    OverlapViolation { row: usize, value: f64 },

    #[error("no treated units in the sample")]
    NoTreated,

    #[error("bisection did not converge after {iterations} iterations (residual {residual:e})")]
    Nonconvergence { iterations: usize, residual: f64 },

    #[error("case mismatch for {case}: {detail}")]
    CaseMismatch { case: String, detail: String },

    /// A smallness or radius-lemma premise failed for the selected parameters.
    #[error("n too small: {condition} violated ({lhs:e} > {rhs:e})")]
    NTooSmall {
        condition: String,
        lhs: f64,
        rhs: f64,
    },

    #[error("degenerate construction: {0}")]
    DegenerateConstruction(String),

    #[error("invalid density: {value} at x = {point:?}")]
    InvalidDensity { point: Vec<f64>, value: f64 },

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
