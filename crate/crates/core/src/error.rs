use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the library.
///
/// Variants fall into three families that the CLI maps to distinct exit
/// codes: input problems (parse, schema, invariants), numerical failures,
/// and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("function `{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("expression `{expr}` references `{var}`, allowed variables are {allowed}")]
    ForbiddenVariable {
        expr: String,
        var: char,
        allowed: String,
    },

    #[error("unknown builtin problem `{0}`")]
    UnknownProblem(String),

    #[error("problem `{problem}` requires parameter `{param}`")]
    MissingParameter { problem: String, param: String },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("alpha out of range: {0} (expected 0 < alpha < 1)")]
    AlphaOutOfRange(f64),

    #[error("grid needs at least 2 cells, got {0}")]
    GridTooSmall(usize),

    #[error("invalid horizon T = {0}")]
    InvalidHorizon(f64),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("instant time {0} lies outside [0, T]")]
    InstantOutOfRange(f64),

    #[error("solution blew up at grid index {index} (value {value})")]
    BlowUp { index: usize, value: f64 },

    #[error("non-finite value in {what} at {location}")]
    NonFinite { what: String, location: String },

    #[error("singular linear step in {what} at index {index}")]
    SingularStep { what: String, index: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: String, iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::NonFinite { .. }
                | Error::SingularStep { .. }
                | Error::NoConvergence { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
