use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("rows are linearly dependent (rank < n-1); no unique hyperplane")]
    DependentRows,

    #[error("{what} exceeds the configured limit ({value} > {limit})")]
    LimitExceeded {
        what: &'static str,
        value: String,
        limit: String,
    },

    #[error("modulus {q} aliases nonzero sums onto zero (need q > {reach})")]
    Alias { q: u64, reach: String },

    #[error("zero atom P(H) = 0; sandwich constants are undefined")]
    DegenerateAtom,

    #[error("gave up after {0} consecutive dependent draws")]
    RetryExhausted(u32),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn limit(what: &'static str, value: impl ToString, limit: impl ToString) -> Self {
        Error::LimitExceeded {
            what,
            value: value.to_string(),
            limit: limit.to_string(),
        }
    }
}
