use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} not squarefree")]
    NotSquarefree(i64),
    #[error("degenerate radicand {0}: the field Q(sqrt({0})) is not quadratic")]
    DegenerateRadicand(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("{0} is not prime")]
    NotPrime(i64),
    #[error("wrong sign: {0}")]
    WrongSign(String),
    #[error("zero argument to the Hilbert symbol")]
    ZeroArgument,
    #[error("argument out of supported range: {0}")]
    OutOfRange(String),
    #[error("precision {given} below the stability threshold {required}")]
    PrecisionTooLow { given: u32, required: u32 },
    #[error("enumeration unstable between precisions {low} and {high}: {what}")]
    PrecisionUnstable { low: u32, high: u32, what: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("insufficient invariants: {0}")]
    InsufficientInvariants(String),
    #[error("inconsistent override: {0}")]
    InconsistentOverride(String),
    #[error("inconsistent level data: {0}")]
    InconsistentLevel(String),
    #[error("hypothesis not asserted: {0}")]
    HypothesisNotAsserted(String),
    #[error("evaluation routes disagree: {0}")]
    RouteDisagreement(String),
}
