use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input value lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A harvest profile, channel, or schedule failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Schedule or transfer vectors do not line up with the epoch grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The requested string endpoint cannot be reached under the staircase.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Relay policies require a source-relay gain with a² ≥ 1.
    #[error("degenerate relay: a² = {a_squared} < 1, the relay cannot help")]
    DegenerateRelay { a_squared: f64 },

    /// A routine was called without its precondition holding.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("solver did not converge after {iterations} Newton steps (gap {gap:.3e}, best objective {best_objective})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        best_objective: f64,
        best_p1: Vec<f64>,
        best_p2: Vec<f64>,
    },
}
