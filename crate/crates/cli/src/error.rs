use std::fmt;
use std::path::{Path, PathBuf};

use fisc_core::diag::TomlDiag;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Input could not be parsed; exit 2.
    Parse { file: PathBuf, line: Option<usize>, message: String },
    /// Input parsed but broke a policy or scenario rule; exit 3.
    Violation { file: PathBuf, line: Option<usize>, message: String },
    /// Reading inputs or writing outputs failed; exit 1.
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Violation { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn parse(file: &Path, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Parse { file: file.into(), line, message: message.into() }
    }

    pub fn toml(file: &Path, diag: &TomlDiag) -> Self {
        CliError::parse(file, diag.line, diag.message.clone())
    }

    pub fn violation(file: &Path, line: Option<usize>, message: impl Into<String>) -> Self {
        CliError::Violation { file: file.into(), line, message: message.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

fn located(f: &mut fmt::Formatter<'_>, file: &Path, line: Option<usize>, message: &str) -> fmt::Result {
    match line {
        Some(l) => write!(f, "{}:{l}: {message}", file.display()),
        None => write!(f, "{}: {message}", file.display()),
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse { file, line, message } => located(f, file, *line, message),
            CliError::Violation { file, line, message } => located(f, file, *line, message),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}
