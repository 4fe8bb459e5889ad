use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The labels leave nothing to test (one class is empty).
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    /// The exhaustive oracle refuses inputs it cannot enumerate.
    #[error("refusing brute-force enumeration over {items} items (limit {limit})")]
    TooManyItems { items: usize, limit: usize },

    /// A pattern count left the representable range.
    #[error("pattern count overflow at support {sigma}")]
    CountOverflow { sigma: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
