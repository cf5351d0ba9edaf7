use std::fmt;
use std::process::ExitCode;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Other,
    Usage,
    Io,
    Parse,
    Precondition,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Other => 1,
            Kind::Usage => 2,
            Kind::Io => 3,
            Kind::Parse => 4,
            Kind::Precondition => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Kind::Usage, message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(Kind::Io, format!("{}: {err}", path.display()))
    }

    /// One JSON object on one line.
    pub fn report(&self) -> ExitCode {
        #[derive(Serialize)]
        struct Line<'a> {
            error: Kind,
            exit_code: u8,
            message: &'a str,
        }
        let line = Line {
            error: self.kind,
            exit_code: self.kind.exit_code(),
            message: &self.message,
        };
        eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
        ExitCode::from(self.kind.exit_code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<coexbal::Error> for CliError {
    fn from(e: coexbal::Error) -> Self {
        use coexbal::Error as E;
        let kind = match &e {
            E::Io(_) => Kind::Io,
            E::Parse(_) => Kind::Parse,
            E::InvalidInput(_)
            | E::EmptyMesh
            | E::InsufficientGranularity { .. }
            | E::InvalidCoefficients(_)
            | E::UnsupportedCategory(_)
            | E::LengthMismatch { .. } => Kind::Precondition,
        };
        Self::new(kind, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches the offending path to core errors raised while reading a file.
pub fn with_path<T>(path: &std::path::Path, r: coexbal::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}
