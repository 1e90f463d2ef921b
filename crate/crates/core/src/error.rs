use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("size cap exceeded: {what} requires {requested}, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("rank deficient: {rank} independent vectors out of {count}")]
    RankDeficient { rank: usize, count: usize },

    #[error("belief has a zero entry at index {0}; ratios are undefined")]
    ZeroEntry(usize),

    #[error("representations belong to different Frechet classes (state marginals differ by {0:e})")]
    FrechetClass(f64),

    #[error("decision problem is not supermodular: {0}")]
    NotSupermodular(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("linear program: {0}")]
    Lp(#[from] crate::simplex::LpError),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
