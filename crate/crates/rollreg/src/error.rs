//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or numerical parameter failed validation.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// A state, input or measurement stopped being finite.
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// The eccentric radius profile crossed zero.
    #[error("effective roller radius is not positive at phase {theta} rad")]
    NonPositiveRadius { theta: f64 },

    /// A cycle did not reach its terminal phase within the step budget.
    #[error("cycle exceeded {max_steps} integration steps before reaching the terminal phase")]
    MaxStepsExceeded { max_steps: usize },

    /// An experiment failed while running a specific iteration (1-based).
    #[error("iteration {iteration} failed: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// No stabilizing initial gain could be constructed for a regulator design.
    #[error("the (A, B) pair admits no stabilizing initial gain")]
    NotStabilizable,

    /// An iterative solver ran out of iterations.
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    /// The feedback preset fails to stabilize the plant somewhere along the rotation.
    #[error("feedback preset does not stabilize the plant (angle bin {bin})")]
    UnstablePreset { bin: usize },

    /// No critically damped learning gain exists for the analyzed loop.
    #[error("no critically damped learning gain exists for this loop")]
    NoCriticalGain,

    /// An error series is too short or rank-deficient for a recurrence fit.
    #[error("error series is degenerate: {reason}")]
    DegenerateSeries { reason: &'static str },
}
