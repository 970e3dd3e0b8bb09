use thiserror::Error;

/// Errors raised by the library. Numerical routines report failures here
/// instead of returning NaN.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{op} is not supported for the {generator} generator")]
    Unsupported { op: &'static str, generator: String },

    #[error("support mismatch: {left} atoms vs {right} atoms")]
    SupportMismatch { left: usize, right: usize },

    #[error("absolute continuity violated at atom {atom}: numerator mass {mass} over a zero-mass atom")]
    AbsoluteContinuity { atom: usize, mass: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("zero denominator in likelihood ratio at {at}")]
    ZeroDenominator { at: String },

    #[error("estimation failure: f({ratio}) = {value} is not finite")]
    Estimation { ratio: f64, value: f64 },

    #[error("bisection did not converge after {iterations} iterations: bracket [{lo}, {hi}], residual {residual}")]
    NoConvergence {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("sampling budget exhausted: {accepted} of {target} samples accepted after {draws} draws")]
    BudgetExhausted {
        accepted: usize,
        target: usize,
        draws: usize,
    },

    #[error("refined distribution has a zero normalizing constant")]
    ZeroNormalizer,

    #[error("target is outside the budget ball B_{k}: atom {atom} has ratio {ratio} > {k}")]
    OutOfBall { atom: usize, ratio: f64, k: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
