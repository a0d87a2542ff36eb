use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("infeasible transport problem: {0}")]
    Infeasible(String),

    #[error("no node path from {from} to {to}")]
    Disconnected { from: usize, to: usize },

    #[error("solver did not converge (best feasibility residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },

    #[error("instance too large for exhaustive search: {n_nodes} nodes (limit {limit})")]
    TooLarge { n_nodes: usize, limit: usize },

    #[error("state became non-finite on path {path} at step {step}")]
    Blowup { path: usize, step: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(expected: impl core::fmt::Display, found: impl core::fmt::Display) -> Error {
    use alloc::string::ToString;
    Error::ShapeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
