use thiserror::Error;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke a documented precondition (dimension mismatch,
    /// infeasible input, parameter out of range).
    #[error("contract violation: {0}")]
    Contract(String),

    /// An experiment or instance description is invalid. `key` names the
    /// offending configuration entry.
    #[error("invalid configuration at `{key}`: {message}")]
    Config { key: String, message: String },

    /// An iterative solver ran out of budget. Carries the best iterate found.
    #[error("{solver} did not converge: residual {residual:.3e} after {iterations} iterations")]
    Solver {
        solver: &'static str,
        residual: f64,
        iterations: usize,
        best: Vec<f64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
