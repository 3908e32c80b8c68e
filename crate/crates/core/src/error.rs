use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("walker amplitude at position {position} would leave the band [-{half_width}, {half_width}]")]
    BandOverflow { position: i64, half_width: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("wrong parameter count: expected {expected}, got {actual}")]
    ParameterCount { expected: usize, actual: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("surrogate system is singular or ill-conditioned")]
    SingularSystem,

    #[error("cost evaluation failed: {0}")]
    CostFailure(String),

    #[error("length mismatch between traces: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
