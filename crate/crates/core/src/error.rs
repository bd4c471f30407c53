use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two operands disagree on the number of states or the alphabet.
    #[error("size mismatch: {0}")]
    Size(String),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A serialized family could not be decoded.
    #[error("parse error: {0}")]
    Parse(String),

    /// An enumeration would exceed its configured budget.
    #[error("{what} refused: needs {estimate} evaluations, limit is {limit}")]
    Guard {
        what: &'static str,
        estimate: u128,
        limit: u128,
    },

    /// A numerical post-condition (eigen residual, symmetry) failed.
    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Size(_) => "size",
            Error::Domain(_) => "domain",
            Error::Parse(_) => "parse",
            Error::Guard { .. } => "guard",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
