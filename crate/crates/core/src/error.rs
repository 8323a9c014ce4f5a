use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid numerical configuration (grid size, truncation, tolerances).
    #[error("configuration error: {0}")]
    Config(String),

    /// Inputs violate an API contract (mismatched grids, missing derivative data).
    #[error("contract error: {0}")]
    Contract(String),

    /// The nonlinear solver did not reach the requested residual.
    #[error("solver error: {message} (final residual {final_residual:.3e} after {} iterations)", history.len())]
    Solver { message: String, final_residual: f64, history: Vec<f64> },

    /// A computed object failed one of its structural invariants.
    #[error("integrity error: {0}")]
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
