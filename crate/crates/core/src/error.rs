use thiserror::Error;

/// Errors raised across the simulation stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown patch name `{0}`")]
    UnknownPatch(String),

    #[error("invalid patch spec: {0}")]
    Spec(String),

    #[error("invalid patch: {0}")]
    InvalidPatch(String),

    #[error("no dimer covering: {0}")]
    Covering(String),

    #[error("cannot embed patch `{patch}` on the square grid: {reason}")]
    Embed { patch: String, reason: String },

    #[error("qubit count {n} outside supported range 1..={cap}")]
    QubitRange { n: usize, cap: usize },

    #[error("qubit index {index} out of bounds for {n} qubits")]
    QubitIndex { index: usize, n: usize },

    #[error("gate needs two distinct qubits, got ({0}, {0})")]
    RepeatedQubit(usize),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("bitstring `{0}` is not a valid basis label")]
    Bitstring(String),

    #[error("operator has no terms")]
    EmptyOperator,

    #[error("Lanczos did not converge after {matvecs} matvecs (best residuals {residuals:?})")]
    Convergence { matvecs: usize, residuals: Vec<f64> },

    #[error("{what} limited to {cap} qubits, got {n}")]
    TooLarge { what: &'static str, n: usize, cap: usize },

    #[error("parameter vector has length {got}, ansatz expects {expected}")]
    ParameterLength { expected: usize, got: usize },

    #[error("sector {sector} is incompatible with {n} sites")]
    SectorParity { sector: String, n: usize },

    #[error("edges ({0}, {1}) and ({2}, {3}) share a site")]
    SharedSite(usize, usize, usize, usize),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
