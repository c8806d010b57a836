//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("policy evaluation system is singular (policy is not unichain)")]
    SingularSystem,

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("hitting-time iterates diverged: {0}")]
    Divergence(String),

    #[error("iteration cap of {cap} reached")]
    IterationCap { cap: usize },

    #[error("too large: {0}")]
    TooLarge(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
