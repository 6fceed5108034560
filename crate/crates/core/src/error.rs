use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unknown agent id {0}")]
    UnknownAgent(usize),

    #[error("objective is not concave on [{lo}, {hi}]")]
    NonConcave { lo: f64, hi: f64 },

    #[error("cost derivative is non-positive at {0}")]
    NonPositiveCostSlope(f64),

    #[error("effect matrix is not antisymmetric at ({row}, {col}): {value} vs {mirror}")]
    NotAntisymmetric {
        row: usize,
        col: usize,
        value: f64,
        mirror: f64,
    },

    #[error("no matches possible between agents {0} and {1}")]
    NoMatches(usize, usize),

    #[error("correlation is undefined for constant input")]
    ConstantInput,

    #[error("results table is incomplete; missing cells: {0}")]
    IncompleteResults(String),

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("failed to parse {what}: {detail}")]
    Parse { what: String, detail: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(what: impl Into<String>, detail: impl ToString) -> Self {
        Error::Parse {
            what: what.into(),
            detail: detail.to_string(),
        }
    }
}
