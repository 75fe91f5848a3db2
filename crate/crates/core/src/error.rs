use thiserror::Error;

/// Errors raised by the estimators and their numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, non-finite data, violated precondition).
    #[error("input error: {0}")]
    Input(String),

    /// A combinatorial routine was asked to do more work than it supports.
    #[error("capacity exceeded: {what} has {size} elements, limit is {limit}; {advice}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
        advice: &'static str,
    },

    /// An iterative solver hit its iteration cap or broke down.
    #[error("numerical failure in {solver}: {reason}")]
    Numerical {
        solver: &'static str,
        reason: String,
        /// Best iterate reached before giving up, when one exists.
        best: Option<Vec<f64>>,
    },

    /// Alternating projections diverged, so the intersection is probably empty.
    #[error("projection iterates diverged; the intersection is likely empty")]
    LikelyInfeasible,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(solver: &'static str, reason: impl Into<String>) -> Self {
        Error::Numerical {
            solver,
            reason: reason.into(),
            best: None,
        }
    }
}
