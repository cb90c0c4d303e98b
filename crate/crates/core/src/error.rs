use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input violated a sign or range precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was requested in a flow regime it is not defined for.
    #[error("regime error: {0}")]
    Regime(String),

    /// The stationary right side was evaluated too close to `u = 0`
    /// (`ubar = 1`), where the reduced system is singular.
    #[error("singularity: |ubar - 1| = {0:.3e} is below the safe threshold")]
    Singularity(f64),

    /// The boundary data does not admit a stationary solution.
    #[error("no stationary solution: {0}")]
    NoStationarySolution(String),

    /// An iteration or integration failed to converge.
    #[error("did not converge: {0}")]
    NonConvergence(String),

    /// A numerical failure at run time (blow-up, positivity loss, NaN).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Not enough samples or dynamic range for the requested fit.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
