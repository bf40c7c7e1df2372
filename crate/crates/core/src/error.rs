use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("operator acts on {found} qubits, code has {expected}")]
    QubitCount { expected: usize, found: usize },
    #[error("generators are linearly dependent")]
    DependentGenerators,
    #[error("generators {0} and {1} anticommute")]
    Anticommuting(usize, usize),
    #[error("invalid code descriptor: {0}")]
    Descriptor(String),
    #[error("{0}")]
    Argument(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("{0}")]
    Argument(String),
    #[error("enumeration exceeds the exhaustive-search gate: {0}")]
    ResourceGuard(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoiseError {
    #[error("fault path dimensions do not match the code: {0}")]
    Dimension(String),
    #[error("invalid noise parameters: {0}")]
    Params(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("location {0} does not exist")]
    InvalidLocation(usize),
    #[error("fault Pauli acts on {found} qubits but location has {expected}")]
    FaultArity { expected: usize, found: usize },
    #[error("{0}")]
    Argument(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("no correction of weight at most {cap} explains the syndrome")]
    NotFound { cap: usize },
    #[error("cluster search exceeded its cap ({0})")]
    CapExceeded(String),
    #[error("syndrome record does not match the code: {0}")]
    Dimension(String),
    #[error(transparent)]
    Code(#[from] CodeError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OverheadError {
    #[error("p·A = {0} is not below 1; post-selection never succeeds")]
    Divergent(f64),
    #[error("invalid parameter: {0}")]
    Params(String),
    #[error("no admissible block size: {0}")]
    Infeasible(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Overhead(#[from] OverheadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
