use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,

    #[error("threshold {threshold} has no exceedances")]
    DegenerateThreshold { threshold: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("no site falls in the conditioning set; extremogram undefined")]
    DegenerateDenominator,

    #[error("lag {lag:?} does not fit inside grid {dims:?}")]
    LagOutOfRange { lag: Vec<f64>, dims: Vec<usize> },

    #[error("point field has too few points ({0})")]
    EmptyField(usize),

    #[error("closed form only available for A = B = (1, inf)")]
    UnsupportedSets,

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("{got} permutations is too few for level {level} (need at least {need})")]
    TooFewPermutations { got: usize, need: usize, level: f64 },

    #[error("block size {block} does not divide grid {nx}x{ny}")]
    NonDivisibleBlock { block: usize, nx: usize, ny: usize },

    #[error("time window {start}..{end} outside 0..{n_times}")]
    WindowOutOfRange { start: usize, end: usize, n_times: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "empty_input",
            Error::DegenerateThreshold { .. } => "degenerate_threshold",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::FactorizationFailure(_) => "factorization_failure",
            Error::DegenerateDenominator => "degenerate_denominator",
            Error::LagOutOfRange { .. } => "lag_out_of_range",
            Error::EmptyField(_) => "empty_field",
            Error::UnsupportedSets => "unsupported_sets",
            Error::DomainError(_) => "domain_error",
            Error::TooFewPermutations { .. } => "too_few_permutations",
            Error::NonDivisibleBlock { .. } => "non_divisible_block",
            Error::WindowOutOfRange { .. } => "window_out_of_range",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
