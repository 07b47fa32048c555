use thiserror::Error;

/// Errors raised by the channel model, the optimizers and the oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("hop index {index} out of range 1..={hops}")]
    HopIndex { index: usize, hops: usize },

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("transmit power of hop {hop} must be positive, got {power}")]
    NonPositivePower { hop: usize, power: f64 },

    #[error("interval [{lo}, {hi}] does not bracket a root")]
    NotBracketed { lo: f64, hi: f64 },

    #[error("root finder did not converge within {0} iterations")]
    MaxIterations(usize),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;
