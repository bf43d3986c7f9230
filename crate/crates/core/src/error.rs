use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("leading coefficient must be exactly 1, got {0}")]
    NonUnitLeadCoefficient(f64),

    #[error("noise variance must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("coefficient a[{index}] is not finite")]
    NonFiniteCoefficient { index: usize },

    #[error("numeric overflow: {0}")]
    Overflow(String),

    #[error("numeric underflow: {0}")]
    Underflow(String),

    #[error("root finder did not converge after {iterations} iterations (worst residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("quadrature tolerance not met: error estimate {estimate:e} > target {target:e}")]
    ToleranceNotMet { estimate: f64, target: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("bisection did not converge after {0} steps")]
    NoConvergence(usize),

    #[error("matrix dimension {n} exceeds the configured cap {cap}")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("invalid range: lower bound {lo} exceeds upper bound {hi}")]
    InvalidRange { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("at theta = {theta}: {source}")]
    AtTheta {
        theta: f64,
        #[source]
        source: Box<Error>,
    },
}
