use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("cut locus: {0}")]
    CutLocus(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("precondition violated at index {index}: {message}")]
    Precondition { index: usize, message: String },

    /// The semi-dual iteration stopped before reaching the tolerance. The last
    /// potential is kept so callers can inspect or restart from it.
    #[error("no convergence at eps = {eps}: residual {residual:e} after {iterations} iterations")]
    NonConvergence {
        eps: f64,
        iterations: usize,
        residual: f64,
        last_psi: Vec<f64>,
    },

    #[error("root finding failed on [{lo}, {hi}]: {message}")]
    RootFinding { lo: f64, hi: f64, message: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
