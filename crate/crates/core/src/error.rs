use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid token {0:?}: {1}")]
    InvalidToken(String, &'static str),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("duplicate user {0:?}")]
    DuplicateUser(String),
    #[error("user {0:?} cannot trust itself")]
    SelfTrust(String),
    /// (target, source)
    #[error("duplicate mapping {0:?} <- {1:?}")]
    DuplicateMapping(String, String),
    #[error("duplicate belief for user {user:?} on key {key:?}")]
    DuplicateBelief { user: String, key: String },
    #[error("user {0:?} appears in both networks")]
    UserOverlap(String),
    #[error("topology network must not carry explicit beliefs")]
    NonEmptyTopologyBeliefs,
    #[error("ground program has {atoms} atoms, above the limit of {limit}")]
    DomainTooLarge { atoms: usize, limit: usize },
    #[error("program is not definite: a rule keeps a negative body")]
    NotDefinite,
    #[error("need at least {needed} records with strictly increasing size, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid request: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::DomainTooLarge { .. } | Error::Io(_) | Error::InsufficientData { .. } | Error::Usage(_))
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Error::Io(e),
            other => Error::Parse(format!("{other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Parse(err.to_string())
        }
    }
}
