use thiserror::Error;

use crate::market::ConstantStrategy;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("manager index {index} out of range for population of {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("operation requires the {expected} criterion")]
    CriterionMismatch { expected: &'static str },
    #[error("population must contain at least one manager")]
    EmptyPopulation,
    #[error("type distribution must contain at least one atom")]
    EmptyDistribution,
    #[error("singular linear system (determinant {det:e})")]
    Singular { det: f64 },
    #[error("aggregate denominator {0} is not positive")]
    NonPositiveDenominator(f64),
    #[error("deviation grid is empty")]
    EmptyGrid,
    #[error("fixed point not reached after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Vec<ConstantStrategy>,
    },
    #[error("need at least {needed} paths, got {got}")]
    TooFewPaths { needed: usize, got: usize },
    #[error("Euler step produced a nonpositive wealth factor on path {path}, step {step}")]
    NonPositiveWealth { path: usize, step: usize },
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}
