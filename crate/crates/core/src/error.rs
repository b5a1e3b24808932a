use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// The variants line up with the command-line exit codes: usage and
/// configuration problems map to 2, data problems to 3 and numerical
/// failures to 4.
#[derive(Debug, Error)]
pub enum GlkError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("initialization error: {0}")]
    Initialization(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl GlkError {
    pub fn domain(msg: impl Into<String>) -> Self {
        GlkError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        GlkError::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        GlkError::Numerical(msg.into())
    }

    /// Short machine-readable tag used in error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            GlkError::Domain(_) => "domain",
            GlkError::Config(_) => "config",
            GlkError::Numerical(_) => "numerical",
            GlkError::Parse { .. } => "parse",
            GlkError::Usage(_) => "usage",
            GlkError::Initialization(_) => "initialization",
            GlkError::Io(_) => "io",
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            GlkError::Usage(_) | GlkError::Config(_) => 2,
            GlkError::Domain(_) | GlkError::Parse { .. } | GlkError::Io(_) => 3,
            GlkError::Numerical(_) | GlkError::Initialization(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, GlkError>;
