use std::fmt;

/// Errors produced by the library. Each variant maps onto one CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum CmcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("diagnostic error: {0}")]
    Diagnostic(String),

    #[error("contract error: {0}")]
    Contract(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("inference impossible: {0}")]
    InferenceImpossible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CmcError>;

/// Process exit codes used by the `cmc` binary and the C ABI.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    InvalidInput = 2,
    CapacityExceeded = 3,
    InferenceImpossible = 4,
}

impl fmt::Display for ExitCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as i32)
    }
}

impl CmcError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CmcError::Capacity(_) => ExitCode::CapacityExceeded,
            CmcError::InferenceImpossible(_) => ExitCode::InferenceImpossible,
            _ => ExitCode::InvalidInput,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> CmcError {
    CmcError::InvalidInput(msg.into())
}
