use thiserror::Error;

pub type Result<T> = std::result::Result<T, HeffError>;

#[derive(Debug, Error)]
pub enum HeffError {
    #[error("length mismatch: expected {expected} qubits, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} modes/qubits")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("qubit count {0} is not supported (maximum {max})", max = crate::pauli::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("hamiltonian is not hermitian: {0}")]
    NonHermitian(String),

    #[error("invalid particle count {particles} for {modes} modes")]
    InvalidParticleCount { particles: usize, modes: usize },

    #[error("{what} of size {size} exceeds capacity {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HeffError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        HeffError::Invalid(msg.into())
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            HeffError::Capacity { .. } => 3,
            _ => 2,
        }
    }
}
