use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("ring degree {0} is not a power of two >= 2")]
    InvalidDegree(usize),
    #[error("modulus {0} is not an odd prime below 2^62")]
    InvalidModulus(u64),
    #[error("operands belong to different rings")]
    ParamMismatch,
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("coefficient {value} not reduced mod {modulus}")]
    CoefficientOutOfRange { value: u64, modulus: u64 },
    #[error("Galois element {0} is even")]
    EvenGaloisElement(usize),
    #[error("modulus does not support a negacyclic NTT of this degree")]
    NttUnavailable,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("ciphertexts were produced under different parameters")]
    ParamMismatch,
    #[error("plaintext is not an element of R_t")]
    PlaintextNotReduced,
    #[error("multiplicative depth {depth} exceeds the cap {cap}")]
    DepthExceeded { depth: u32, cap: u32 },
    #[error("no Galois key for element {0}")]
    MissingGaloisKey(usize),
    #[error("plaintext modulus does not support batching at this degree")]
    BatchingUnsupported,
    #[error("{count} values do not fit in {capacity} slots")]
    TooManyValues { count: usize, capacity: usize },
    #[error("value {value} is not below the plaintext modulus {modulus}")]
    ValueOutOfRange { value: u64, modulus: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("malformed ciphertext encoding: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("weight must satisfy 1 <= k <= m (m = {m}, k = {k})")]
    InvalidSpec { m: usize, k: usize },
    #[error("input is not below the code capacity")]
    OutOfRange,
    #[error("codeword has weight {got}, expected {expected}")]
    WrongWeight { expected: usize, got: usize },
    #[error("codeword has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("lossy mapping found only {found} of {k} positions after {draws} draws")]
    DrawLimit {
        found: usize,
        k: usize,
        draws: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqError {
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("operand widths differ ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("k! is not invertible mod t = {t} for k = {k}")]
    FactorialNotInvertible { k: usize, t: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PirError {
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Eq(#[from] EqError),
    #[error("duplicate identifier at rows {0} and {1}")]
    DuplicateIdentifier(usize, usize),
    #[error("row {row} payload of {len} bytes exceeds {cap} bytes")]
    OversizePayload { row: usize, len: usize, cap: usize },
    #[error("row {0} payload is empty or all zero")]
    ZeroPayload(usize),
    #[error("identifier outside the configured domain")]
    OutsideDomain,
    #[error("rows {0} and {1} map to the same codeword")]
    CodewordCollision(usize, usize),
    #[error("compression factor {c} outside [0, {max}]")]
    CompressionOutOfRange { c: u32, max: u32 },
    #[error("expected {expected} ciphertexts, got {got}")]
    WrongCiphertextCount { expected: usize, got: usize },
    #[error("response does not decode to a well-formed row")]
    CorruptedResponse,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
