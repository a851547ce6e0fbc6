use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("unknown {subtype} class `{label}`")]
    InvalidClass { subtype: String, label: String },

    #[error("image generation failed: {0}")]
    Generation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing centroid for {subtype} class `{label}`")]
    IncompleteCentroids { subtype: String, label: String },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("missing score for `{0}`")]
    MissingScore(String),

    #[error("invalid config at `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("stage `{stage}` needs {artifact}; run stage `{producer}` first")]
    MissingDependency {
        stage: String,
        artifact: PathBuf,
        producer: String,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl AsRef<std::path::Path>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::InvalidArgument(_)
            | Error::InvalidClass { .. }
            | Error::Parse { .. }
            | Error::DuplicateKey(_) => 1,
            Error::MissingDependency { .. } => 2,
            _ => 3,
        }
    }
}
