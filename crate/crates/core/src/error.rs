use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("policy iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    /// The evidence is impossible under the model: no hidden completion has
    /// positive probability.
    #[error("trajectory {trajectory:?} has zero likelihood (support vanishes at t={timestep})")]
    ZeroLikelihood {
        trajectory: Option<usize>,
        timestep: usize,
    },

    /// The evidence has positive probability but the scaled recursion still
    /// underflowed.
    #[error("numerical underflow in trajectory {trajectory:?} at t={timestep}")]
    Underflow {
        trajectory: Option<usize>,
        timestep: usize,
    },

    #[error("enumeration over {size} completions exceeds the guard of {limit}")]
    EnumerationTooLarge { size: f64, limit: f64 },

    #[error("ascent diverged at iteration {iteration}: non-finite weights")]
    Divergence {
        iteration: usize,
        trace: Vec<Vec<f64>>,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// Attach a trajectory index to likelihood errors raised from a single
    /// trajectory pass.
    pub(crate) fn in_trajectory(self, index: usize) -> Self {
        match self {
            Error::ZeroLikelihood { timestep, .. } => Error::ZeroLikelihood {
                trajectory: Some(index),
                timestep,
            },
            Error::Underflow { timestep, .. } => Error::Underflow {
                trajectory: Some(index),
                timestep,
            },
            other => other,
        }
    }
}
