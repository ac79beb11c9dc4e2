use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid {at}: {msg}")]
    Invalid { at: String, msg: String },
    #[error("inconsistent solution: {0}")]
    Inconsistent(String),
    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn invalid(at: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Invalid {
            at: at.into(),
            msg: msg.into(),
        }
    }

    pub fn from_json(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        }
    }
}
