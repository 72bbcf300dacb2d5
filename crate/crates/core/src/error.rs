use thiserror::Error;

/// Errors raised by construction, evaluation and I/O routines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("malformed rational {0:?}: expected NUM/DEN")]
    MalformedRational(String),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: String,
        range: &'static str,
    },

    #[error("degenerate {0}")]
    Degenerate(&'static str),

    #[error("root triangle must have area 1, got {0}")]
    RootArea(String),

    #[error("depth {requested} exceeds schedule horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("no listed ratio stays below {bound} from some index on (horizon {horizon})")]
    BoundNotMet { bound: String, horizon: usize },

    #[error("profile is not that of a positive curve: {0}")]
    NotPositive(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("essential image mismatch: {0}")]
    ProductMismatch(String),

    #[error("malformed document: {0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn out_of_range(name: &'static str, value: impl ToString, range: &'static str) -> Error {
    Error::OutOfRange {
        name,
        value: value.to_string(),
        range,
    }
}
