use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside its domain ({domain})")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("non-finite input for `{name}`: {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("thresholds are not strictly increasing: {0:?}")]
    UnorderedThresholds(Vec<f64>),

    #[error("log posterior is not finite (offending block: {block})")]
    NonFiniteDensity { block: &'static str },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("{path}:{line}: {message}")]
    Load {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("encoding plan: {0}")]
    Encoding(String),

    #[error("malformed draws file: {0}")]
    DrawsFormat(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("criteria: {0}")]
    Criteria(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
