use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid spin configuration: {0}")]
    InvalidConfig(String),
    #[error("instance generation failed: {0}")]
    GenerationFailure(String),
    #[error("unsupported transform: {0}")]
    UnsupportedTransform(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("undefined diagnostic: {0}")]
    UndefinedDiagnostic(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical consistency failure: {0}")]
    Consistency(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
