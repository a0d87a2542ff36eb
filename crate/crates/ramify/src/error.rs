use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ramify_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing input {0} (run the producing stage first)")]
    MissingInput(PathBuf),

    #[error("schema version mismatch: {a} vs {b}")]
    SchemaMismatch { a: u32, b: u32 },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "numerical",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
            Error::Csv { .. } => "csv",
            Error::Malformed { .. } => "malformed-input",
            Error::Config(_) => "config",
            Error::MissingInput(_) => "missing-input",
            Error::SchemaMismatch { .. } => "schema-mismatch",
            Error::Stage { .. } => "stage-failed",
        }
    }

    /// Machine-readable form printed by the command line tool.
    pub fn report(&self) -> ErrorReport {
        let stage = match self {
            Error::Stage { stage, .. } => Some(stage.to_string()),
            _ => None,
        };
        ErrorReport { error: self.kind().to_string(), message: self.to_string(), stage }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}
