use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside encodable range (|x| < 2^{bound_exp})")]
    Range { value: f64, bound_exp: u32 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dealer tape exhausted after {0} items")]
    DealerExhausted(u64),

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("division domain violated: {0}")]
    DivisionDomain(String),

    #[error("revealed masked matrix is numerically singular")]
    SingularReveal,

    #[error("revealed curvature denominator is zero")]
    SingularCurvature,

    #[error("round {0} has a zero global update")]
    DegenerateRound(usize),

    #[error("unknown functionality `{0}`")]
    UnknownFunctionality(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed history file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors that stem from bad inputs rather than a failed protocol run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Range { .. } | Error::Assumption(_) | Error::Format(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
