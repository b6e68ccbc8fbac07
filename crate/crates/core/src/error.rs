use thiserror::Error;

/// Errors raised across the crate.
///
/// Validation variants carry the offending metric so callers can report
/// how far an input is from satisfying the invariant.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    DimensionMismatch { expected: usize, rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |A - A^dag| = {0:e}")]
    NotHermitian(f64),
    #[error("trace is not one: |Tr - 1| = {0:e}")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite: min eigenvalue = {0:e}")]
    NotPositive(f64),
    #[error("non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("invalid qubit count {0}")]
    InvalidQubitCount(usize),
    #[error("invalid Pauli index: {0}")]
    InvalidIndex(String),
    #[error("expected {expected} local unitaries, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("invalid subset {0:?}")]
    InvalidSubset(Vec<usize>),
    #[error("expectation value has imaginary part {0:e}")]
    NonRealExpectation(f64),
    #[error("tensor family is incomplete: missing subset {0:?}")]
    IncompleteFamily(Vec<usize>),
    #[error("mode {mode} out of range for order-{order} tensor")]
    ModeOutOfRange { mode: usize, order: usize },
    #[error("SVD failed to converge")]
    SvdFailure,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is not unitary: max |U^dag U - I| = {0:e}")]
    NotUnitary(f64),
    #[error("matrix is not a proper rotation: orthogonality defect {orthogonality:e}, det {det}")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("invalid rank {rank} for dimension {dim}")]
    InvalidRank { rank: usize, dim: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
