//! Crate-wide error type with process exit-code mapping.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Malformed or unreadable input data. Carries the file and, where it
    /// makes sense, the 1-based line the problem was found on.
    Ingest {
        file: PathBuf,
        line: Option<usize>,
        msg: String,
    },
    /// Invalid configuration; `field` is the dotted path of the offending key.
    Config { field: String, msg: String },
    /// Operands with incompatible dimensions.
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },
    /// Non-finite loss during gradient descent. `step` is the 0-based step
    /// at which the loss stopped being finite.
    Divergence { step: usize, client: Option<usize> },
    /// An operation that requires a nonempty input got an empty one.
    Empty { what: &'static str },
    /// Requested something the chosen model cannot do.
    Unsupported { msg: String },
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub fn ingest(file: impl Into<PathBuf>, line: impl Into<Option<usize>>, msg: impl Into<String>) -> Self {
        Error::Ingest {
            file: file.into(),
            line: line.into(),
            msg: msg.into(),
        }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Unsupported { .. } | Error::Empty { .. } => 2,
            Error::Ingest { .. } | Error::Io { .. } | Error::Shape { .. } => 3,
            Error::Divergence { .. } => 4,
        }
    }

    /// Attach a client id to a divergence error raised inside client-local work.
    pub fn with_client(self, client: usize) -> Self {
        match self {
            Error::Divergence { step, .. } => Error::Divergence {
                step,
                client: Some(client),
            },
            other => other,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Ingest { file, line, msg } => match line {
                Some(n) => write!(f, "{}:{}: {}", file.display(), n, msg),
                None => write!(f, "{}: {}", file.display(), msg),
            },
            Error::Config { field, msg } => write!(f, "config error at `{field}`: {msg}"),
            Error::Shape { op, expected, got } => {
                write!(f, "{op}: shape mismatch, expected {expected}, got {got}")
            }
            Error::Divergence { step, client } => match client {
                Some(c) => write!(f, "divergence at step {step} on client {c}: non-finite loss"),
                None => write!(f, "divergence at step {step}: non-finite loss"),
            },
            Error::Empty { what } => write!(f, "{what} must not be empty"),
            Error::Unsupported { msg } => write!(f, "{msg}"),
            Error::Io { path, source } => write!(f, "{}: {}", path.display(), source),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
