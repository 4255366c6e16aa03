use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside an operation's domain: non-finite entries, shape
    /// mismatches, non-positive parameters.
    #[error("input domain: {0}")]
    InputDomain(String),

    /// A partition with an empty class or an out-of-range class index.
    #[error("partition domain: {0}")]
    PartitionDomain(String),

    /// A factorization that should have succeeded did not.
    #[error("numeric failure on {rows}x{cols} matrix: {reason}")]
    Numeric {
        rows: usize,
        cols: usize,
        reason: String,
    },

    /// Malformed file contents.
    #[error("format: {0}")]
    Format(String),

    /// Files or records that are individually valid but disagree.
    #[error("consistency: {0}")]
    Consistency(String),

    /// Training produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InputDomain(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
