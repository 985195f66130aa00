use std::fmt;

/// Failure of a harness command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("unknown figure '{0}' (expected fig2..fig7)")]
    UnknownFigure(String),
    #[error("numerical failure: {0}")]
    Numerical(rayq_core::Error),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("schema mismatch at {location}: {message}")]
    SchemaMismatch { location: SchemaLocation, message: String },
}

/// Row (1-based, header is row 1) and column of a malformed CSV cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaLocation {
    pub row: usize,
    pub column: Option<String>,
}

impl fmt::Display for SchemaLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.column {
            Some(c) => write!(f, "row {}, column '{}'", self.row, c),
            None => write!(f, "row {}", self.row),
        }
    }
}

impl HarnessError {
    pub fn schema(row: usize, column: Option<&str>, message: impl Into<String>) -> Self {
        HarnessError::SchemaMismatch { location: SchemaLocation { row, column: column.map(str::to_owned) }, message: message.into() }
    }

    /// 1 usage, 2 numerical failure, 3 I/O or input data.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::UnknownFigure(_) => 1,
            HarnessError::Numerical(rayq_core::Error::Io(_) | rayq_core::Error::Format(_)) => 3,
            HarnessError::Numerical(rayq_core::Error::InvalidConfig(_) | rayq_core::Error::DimensionTooSmall(..)) => 1,
            HarnessError::Numerical(_) => 2,
            HarnessError::Io(_) | HarnessError::SchemaMismatch { .. } => 3,
        }
    }
}

impl From<rayq_core::Error> for HarnessError {
    fn from(e: rayq_core::Error) -> Self {
        HarnessError::Numerical(e)
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Usage(format!("config: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
