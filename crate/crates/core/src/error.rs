use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed delimited input: {0}")]
    Csv(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("header does not match schema: {0}")]
    Header(String),

    #[error("row {row}: expected {expected} fields, found {found}")]
    RowArity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("missing required column `{0}`")]
    MissingColumn(String),

    #[error("unknown rating token `{0}`")]
    UnknownRating(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("treatment fully explained by covariates")]
    ZeroTreatmentVariance,

    #[error("treatment `{name}` has {count} treated rows, need at least 2")]
    InsufficientTreated { name: String, count: usize },

    #[error("degenerate score column for treatment {0}")]
    DegenerateScore(usize),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_fold(self, fold: usize) -> Error {
        Error::Fold {
            fold,
            source: Box::new(self),
        }
    }
}
