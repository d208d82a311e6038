use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("adaptive quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    QuadratureFailure { tolerance: f64, estimate: f64 },
    #[error("kernel violates the symmetry condition (residual {residual:e} at x = {at})")]
    SymmetryViolation { residual: f64, at: f64 },
    #[error("kernel integral over (0,1) is not finite and positive")]
    NotNormalizable,
    #[error("kernel takes a negative value {value} at x = {at}")]
    NegativeKernel { value: f64, at: f64 },
    #[error("leaf index {index} out of range for a tree with {leaves} leaves")]
    IndexOutOfRange { index: usize, leaves: usize },
    #[error("a single leaf cannot be split")]
    SplitOfLeaf,
    #[error("tree enumeration limited to n <= {limit}, requested {requested}")]
    TooLarge { requested: usize, limit: usize },
    #[error("expected {expected} angles, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("operation requires weights of order {expected}, got order {got}")]
    WrongOrder { expected: usize, got: usize },
    #[error("first power sum is {value}, expected 1")]
    NotNormalized { value: f64 },
    #[error("point lies outside chart domain")]
    OutOfChart,
    #[error("expected tree size exp(t) = {expected:e} exceeds the cap {cap}")]
    TimeTooLarge { expected: f64, cap: usize },
    #[error("initial datum has no closed-form characteristic function")]
    NoAnalyticCf,
    #[error("invalid specification: {0}")]
    BadSpec(String),
    #[error("moment {0} is not available for this initial datum")]
    MomentUnavailable(&'static str),
    #[error("deviation is within two standard errors of zero on {masked} of {total} grid points")]
    InsufficientSignal { masked: usize, total: usize },
    #[error("characteristic function exceeds the envelope at |xi| = {rho}")]
    PremiseFailed { rho: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
