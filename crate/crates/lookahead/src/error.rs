use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] lookahead_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("{0}")]
    Usage(String),

    #[error("replay mismatch: {0}")]
    Replay(String),

    #[error("gradient check failed: {0}")]
    GradCheck(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(e) => e.kind(),
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Format { .. } => "format",
            Error::Checkpoint { .. } => "checkpoint",
            Error::MissingInput(_) => "missing-input",
            Error::Usage(_) => "usage",
            Error::Replay(_) => "replay",
            Error::GradCheck(_) => "gradcheck",
        }
    }

    /// Offending config field, when the error names one.
    pub fn field(&self) -> Option<&'static str> {
        let mut e = match self {
            Error::Core(e) => e,
            _ => return None,
        };
        while let lookahead_core::Error::Context { source, .. } = e {
            e = source;
        }
        match e {
            lookahead_core::Error::InvalidParameter { field, .. } => Some(field),
            _ => None,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            Error::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            field: Option<&'a str>,
            #[serde(skip_serializing_if = "Option::is_none")]
            line: Option<usize>,
        }
        #[derive(Serialize)]
        struct Envelope<'a> {
            error: Body<'a>,
        }
        let body = Body { kind: self.kind(), message: self.to_string(), field: self.field(), line: self.line() };
        serde_json::to_string(&Envelope { error: body }).expect("plain struct serializes")
    }
}
