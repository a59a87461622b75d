use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

/// A failure that ends the process, with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    MissingFile {
        path: PathBuf,
        source: io::Error,
    },
    InvalidConfig(String),
    InvalidScenario {
        message: String,
        line: Option<usize>,
    },
    Remote {
        step: u64,
        message: String,
    },
    MalformedTrace {
        line: usize,
        message: String,
    },
    Io(String),
    Engine(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingFile { .. } => 2,
            CliError::InvalidConfig(_) | CliError::InvalidScenario { .. } => 3,
            CliError::Remote { .. } => 4,
            CliError::MalformedTrace { .. } => 5,
            CliError::Usage(_) | CliError::Io(_) | CliError::Engine(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::MissingFile { .. } => "missing_file",
            CliError::InvalidConfig(_) => "invalid_config",
            CliError::InvalidScenario { .. } => "invalid_scenario",
            CliError::Remote { .. } => "remote_failure",
            CliError::MalformedTrace { .. } => "malformed_trace",
            CliError::Io(_) => "io",
            CliError::Engine(_) => "engine",
        }
    }

    /// The machine-readable form written to stderr.
    pub fn to_json(&self) -> Value {
        let mut body = Map::new();
        body.insert("kind".into(), json!(self.kind()));
        body.insert("message".into(), json!(self.to_string()));
        body.insert("exit_code".into(), json!(self.exit_code()));
        match self {
            CliError::MissingFile { path, .. } => {
                body.insert("path".into(), json!(path.display().to_string()));
            }
            CliError::InvalidScenario {
                line: Some(line), ..
            }
            | CliError::MalformedTrace { line, .. } => {
                body.insert("line".into(), json!(line));
            }
            CliError::Remote { step, .. } => {
                body.insert("step".into(), json!(step));
            }
            _ => {}
        }
        json!({ "error": body })
    }

    pub fn read_failure(path: &Path, source: io::Error) -> Self {
        CliError::MissingFile {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m)
            | CliError::InvalidConfig(m)
            | CliError::Io(m)
            | CliError::Engine(m) => f.write_str(m),
            CliError::MissingFile { path, source } => {
                write!(f, "cannot read {}: {source}", path.display())
            }
            CliError::InvalidScenario { message, .. } => f.write_str(message),
            CliError::Remote { step, message } => write!(f, "step {step}: {message}"),
            CliError::MalformedTrace { line, message } => write!(f, "line {line}: {message}"),
        }
    }
}
