use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location-tagged parse failure for the text and JSON formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// 1-based line (or record) number, 0 when the failure is not tied to one.
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty mesh")]
    EmptyMesh,

    #[error("parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("insufficient granularity: {parts} parts requested but only {bins} bins available")]
    InsufficientGranularity { parts: usize, bins: usize },

    #[error("invalid correction coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("unsupported element category: {0}")]
    UnsupportedCategory(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
