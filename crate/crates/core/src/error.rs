use thiserror::Error;

/// Errors raised by the reduction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KamError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("input violates the reality structure: {0}")]
    Reality(String),

    #[error("small divisor {value:.3e} at k = {k:?} below threshold {threshold:.3e} ({family})")]
    SmallDivisor {
        k: Vec<i32>,
        family: String,
        value: f64,
        threshold: f64,
    },

    #[error(
        "frequency vector is not admissible: worst margin {margin:.3e} at k = {k:?} ({family})"
    )]
    NotAdmissible {
        k: Vec<i32>,
        family: String,
        margin: f64,
    },

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("aliasing not resolved on a grid of {0} points per axis")]
    Aliasing(usize),

    #[error("iteration diverged at step {step}: {reason}")]
    Divergence { step: usize, reason: String },

    #[error("{0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, KamError>;
