//! Line-numbered diagnostics for TOML inputs.

use std::fmt;

/// A TOML error reduced to one line: the 1-based line of the offending span
/// (when known) and the bare message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomlDiag {
    pub line: Option<usize>,
    pub message: String,
}

impl TomlDiag {
    pub fn new(text: &str, err: &toml::de::Error) -> Self {
        let line = err.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
        TomlDiag { line, message: err.message().trim().to_string() }
    }
}

impl fmt::Display for TomlDiag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}
