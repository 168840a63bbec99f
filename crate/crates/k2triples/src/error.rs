use std::fmt;
use std::io;

/// Errors reported by store construction, queries, and (de)serialization.
#[derive(Debug)]
pub enum Error {
    /// An index or identifier lies outside the structure it addresses.
    OutOfRange {
        what: &'static str,
        index: u64,
        limit: u64,
    },
    /// Input data rejected during construction.
    InvalidInput(String),
    /// A tree cursor was used in a position it cannot occupy.
    BadCursor(&'static str),
    /// The join shape is recognized but not evaluable.
    UnsupportedJoin(&'static str),
    /// The requested strategy is not defined for this join class.
    StrategyNotApplicable {
        class: &'static str,
        strategy: &'static str,
    },
    /// A malformed statement in strict parsing mode.
    Parse { line: u64, message: String },
    /// A malformed or truncated store file.
    Format(String),
    /// An underlying I/O failure.
    Io(io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfRange { what, index, limit } => {
                write!(f, "{what} {index} out of range (limit {limit})")
            }
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::BadCursor(msg) => write!(f, "bad cursor: {msg}"),
            Error::UnsupportedJoin(msg) => write!(f, "unsupported join: {msg}"),
            Error::StrategyNotApplicable { class, strategy } => {
                write!(
                    f,
                    "strategy {strategy} is not defined for join class {class}"
                )
            }
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Format(msg) => write!(f, "bad store format: {msg}"),
            // The wrapped error is exposed via `source()`; printing it
            // here too would duplicate it in rendered error chains.
            Error::Io(_) => write!(f, "i/o error"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
