use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at offset {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown event label `{0}`")]
    UnknownLabel(String),

    #[error("operator `{op}` is not part of {system}")]
    OperatorNotInSystem { op: &'static str, system: &'static str },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("gamma is not symmetric: gamma({0},{1}) = {2} but gamma({1},{0}) = {3}")]
    AsymmetricGamma(String, String, String, String),

    #[error("{what} budget of {limit} exceeded")]
    Budget { what: &'static str, limit: usize },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn budget(what: &'static str, limit: usize) -> Self {
        Error::Budget { what, limit }
    }
}
