use thiserror::Error;

/// Unified error type for configuration, numerical, and runtime failures.
#[derive(Debug, Error)]
pub enum IlmsError {
    /// Invalid configuration: schema violations, inconsistent dimensions,
    /// out-of-range parameters. The message names the offending field.
    #[error("config error: {0}")]
    Config(String),

    /// A closed-form prediction was requested for an operating point that the
    /// theory classifies as unstable (mean or mean-square).
    #[error("instability: {0}")]
    Instability(String),

    /// An approximation was evaluated outside its domain of validity.
    #[error("approximation domain: {0}")]
    ApproximationDomain(String),

    /// A Monte Carlo trajectory left the trusted numerical range.
    #[error("divergence detected at run {run}, node {node}, iteration {iteration}")]
    Divergence {
        run: usize,
        node: usize,
        iteration: usize,
    },

    /// A matrix operation failed (singular system, non-PSD input, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A fixed-point iteration failed to converge within its budget.
    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, IlmsError>;

impl IlmsError {
    /// Process exit code convention: 2 config, 3 instability/domain,
    /// 4 divergence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            IlmsError::Config(_) | IlmsError::Json(_) => 2,
            IlmsError::Instability(_) | IlmsError::ApproximationDomain(_) => 3,
            IlmsError::Divergence { .. } => 4,
            _ => 1,
        }
    }
}
