use std::fmt;
use std::process::ExitCode;

/// A failure that ends the process, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or inconsistent configuration (exit 2).
    Config(String),
    /// Unreadable input or unwritable output (exit 3).
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self::Io(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            Self::Config(_) => ExitCode::from(2),
            Self::Io(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<svi_core::Error> for CliError {
    fn from(e: svi_core::Error) -> Self {
        use svi_core::Error as E;
        match e {
            E::Io(_) | E::Parse { .. } | E::Checkpoint(_) => Self::Io(e.to_string()),
            E::Domain(_) | E::Contract(_) | E::Split(_) => Self::Config(e.to_string()),
        }
    }
}

/// Attach a path to an I/O failure.
pub fn io_at(path: &std::path::Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
