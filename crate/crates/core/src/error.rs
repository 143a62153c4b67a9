use thiserror::Error;

/// Errors raised by the library.
///
/// Hypothesis violations are errors, not failed checks: a validator that
/// receives an input outside its lemma's hypotheses refuses to run.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("p not prime: {0}")]
    NotPrime(u32),
    #[error("characteristic 2 is not supported")]
    EvenCharacteristic,
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field of order {0} exceeds the supported maximum 3^10")]
    FieldTooLarge(u64),
    #[error("modulus must be monic of degree {expected} with coefficients below p; got {got:?}")]
    BadModulus { expected: u32, got: Vec<u32> },
    #[error("modulus {0:?} is reducible over the prime field")]
    ReducibleModulus(Vec<u32>),
    #[error("cannot parse field description {0:?}: {1}")]
    ParseField(String, String),
    #[error("element {value} is outside the field of order {order}")]
    ElementOutOfRange { value: u32, order: u32 },
    #[error("inverse of zero")]
    InverseOfZero,
    #[error("grid function has {got} values, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("dimension {0} unsupported (1..=3)")]
    BadDimension(usize),
    #[error("operation requires {expected} measure")]
    WrongMeasure { expected: &'static str },
    #[error("point {0:?} is not on the paraboloid")]
    OffParaboloid([u32; 3]),
    #[error("the zero vector does not define a line")]
    ZeroDirection,
    #[error("-1 is a square in this field; lines l(y) collide, e.g. y = {y:?}, y' = {y_prime:?}")]
    MinusOneIsSquare { y: [u32; 2], y_prime: [u32; 2] },
    #[error("-1 is not a square in this field")]
    MinusOneNotSquare,
    #[error("singular projective transform")]
    SingularTransform,
    #[error("points coincide projectively")]
    CoincidentPoints,
    #[error("size cap exceeded: {what} = {size} > {cap}")]
    SizeCap { what: &'static str, size: u64, cap: u64 },
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("regularity violated: {0}")]
    Regularity(String),
    #[error("zero function")]
    ZeroFunction,
    #[error("division by zero in exponent arithmetic")]
    DivisionByZero,
    #[error("invalid exponent: {0}")]
    BadExponent(String),
}

pub type Result<T> = std::result::Result<T, Error>;
