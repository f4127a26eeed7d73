use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient sequence is empty")]
    EmptyCoefficients,
    #[error("coefficient {index} is negative or not finite ({value})")]
    NegativeCoefficient { index: usize, value: f64 },
    #[error("coefficients sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("mean offspring E = {mean} must exceed 1")]
    SubcriticalOrCritical { mean: f64 },
    #[error("not in the Schröder case: p0 = {p0}, p1 = {p1} (need p0 = 0 and 0 < p1 < 1)")]
    NotSchroder { p0: f64, p1: f64 },
    #[error("immigration law has q0 = 0")]
    NoImmigrationGap,
    #[error("iterate left the escape radius after {steps} steps")]
    Overflow { steps: usize },
    #[error("iteration diverged at z = {re}{im:+}i")]
    Diverged { re: f64, im: f64 },
    #[error("point {re}{im:+}i is not in the basin of 0")]
    NotInBasin { re: f64, im: f64 },
    #[error("composition needs an inner series with zero constant term")]
    CompositionNeedsZeroConstant,
    #[error("reciprocal of a series with zero constant term")]
    DivisionByZeroConstant,
    #[error("x must be positive, got {0}")]
    NonPositiveX(f64),
    #[error("{value} lies outside [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("curve misses {fraction:.4} of the sample mass")]
    InsufficientCoverage { fraction: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
