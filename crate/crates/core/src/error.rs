//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input violated an operation's precondition (shape, range, validity).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// Dimensions of two inputs do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A trajectory left the declared domain of its vector field.
    #[error("state left the field's domain at t = {time}: {reason}")]
    DomainEscape { time: f64, reason: String },

    /// The adaptive step size collapsed below the floor.
    #[error("step size {step:e} underflowed at t = {time} (stiff or singular problem)")]
    Stiffness { time: f64, step: f64 },

    /// The adaptive integrator hit its step budget.
    #[error("exceeded {steps} integration steps at t = {time}")]
    MaxStepsExceeded { time: f64, steps: usize },

    /// A simulated simplex trajectory drifted off the simplex.
    #[error("simplex drift at t = {time}: {reason}")]
    IntegrationDrift { time: f64, reason: String },

    /// Evaluation of a generalized monomial at a nonpositive coordinate.
    #[error("coordinate {index} = {value} is not strictly positive")]
    NonPositive { index: usize, value: f64 },

    /// The inverse embedding was asked to evaluate too close to a face.
    #[error("point too close to the simplex face: last coordinate {last:e} < {floor:e}")]
    FaceProximity { last: f64, floor: f64 },

    /// Non-finite values appeared in an iteration.
    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    /// No step size satisfies the requested error target.
    #[error("no feasible step size: bound at eta = {eta_floor:e} is {bound_at_floor:e} > {epsilon:e}")]
    Infeasible {
        eta_floor: f64,
        bound_at_floor: f64,
        epsilon: f64,
    },

    /// A serialized artifact could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.line() == 0 {
            // Raised by a validating conversion, not by the tokenizer.
            Error::Parse(e.to_string())
        } else {
            Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let at = e.position().map(|p| format!("line {}: ", p.line())).unwrap_or_default();
        Error::Parse(format!("{at}{e}"))
    }
}

impl Error {
    /// True for failures caused by invalid inputs rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::RejectedInput(_) | Error::DimensionMismatch { .. } | Error::Parse(_)
        )
    }
}
