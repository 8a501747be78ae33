use thiserror::Error;

/// Error type shared across the library.
///
/// Precision-related variants distinguish "the input is exactly zero" from
/// "the input is indistinguishable from zero at the precision it is known to";
/// the latter is recoverable by re-running the pipeline at higher precision.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    InvalidPrime(u64),
    #[error("no irreducibility certificate applies to the defining polynomial")]
    NotIrreducibleCertified,
    #[error("elements belong to different fields or algebras")]
    FieldMismatch,
    #[error("division by an element indistinguishable from zero (known only modulo p^{0})")]
    DivisionByZeroAtPrecision(i64),
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("trace Gram matrix is degenerate at working precision")]
    DegenerateAtPrecision,
    #[error("leading series coefficient is not a unit of the coefficient algebra")]
    NonUnitLeadingCoefficient,
    #[error("series truncation exhausted: exponent {needed} outside known window ending at {have}")]
    TruncationExhausted { needed: i64, have: i64 },
    #[error("operand is zero at working precision")]
    ZeroAtPrecision,
    #[error("polynomial is not squarefree at working precision")]
    NotSquarefree,
    #[error("differential form and multiplier live over different carriers")]
    CarrierMismatch,
    #[error("invalid input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
