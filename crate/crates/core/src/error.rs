use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Tensor dimensions that do not fit the requested layout.
    #[error("shape mismatch on {axis} axis: {detail}")]
    Shape { axis: &'static str, detail: String },

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("malformed video container {path}: {message}")]
    Container { path: PathBuf, message: String },

    #[error("malformed checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },

    /// Stage ordering violation in the training curriculum.
    #[error("curriculum violation: {0}")]
    Curriculum(String),

    #[error("missing artifacts: {}", .0.join(", "))]
    MissingArtifacts(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("plot: {0}")]
    Plot(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidConfig(_) => "config",
            Error::Shape { .. } => "shape",
            Error::ManifestParse { .. } => "manifest-parse",
            Error::InvalidManifest(_) => "manifest",
            Error::Container { .. } => "container",
            Error::Checkpoint { .. } => "checkpoint",
            Error::Curriculum(_) => "curriculum",
            Error::MissingArtifacts(_) => "missing-artifacts",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Plot(_) => "plot",
        }
    }
}
