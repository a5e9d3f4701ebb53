use thiserror::Error;

use crate::state::TrajectoryRecord;

/// Errors raised by oracles, step-size rules, active sets and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("no feasible vertex on the requested face")]
    InfeasibleFace,

    #[error("oracle `{0}` has no in-face implementation")]
    UnsupportedOracle(String),

    #[error("point left the objective domain: {0}")]
    Domain(String),

    #[error("numerical failure at iteration {iteration}: {message}")]
    Numerical {
        iteration: usize,
        message: String,
        /// Trajectory recorded up to the failure, when raised by a solver.
        partial: Vec<TrajectoryRecord>,
    },

    #[error("invalid problem id `{id}`: {reason}")]
    ProblemId { id: String, reason: String },

    #[error("malformed active-set text at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numerical(iteration: usize, msg: impl Into<String>) -> Self {
        Error::Numerical {
            iteration,
            message: msg.into(),
            partial: Vec::new(),
        }
    }

    pub(crate) fn with_partial(self, trajectory: Vec<TrajectoryRecord>) -> Self {
        match self {
            Error::Numerical {
                iteration, message, ..
            } => Error::Numerical {
                iteration,
                message,
                partial: trajectory,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
