use thiserror::Error;

/// Errors surfaced by the library. The CLI maps these onto process exit
/// codes: argument/unsupported/resource problems exit 2, violated
/// hypotheses exit 3, and failed verifications exit 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("unsupported form: {0}")]
    UnsupportedForm(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("verification failure: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error kind.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::UnsupportedForm(_) | Error::Resource(_) => 2,
            Error::Hypothesis(_) => 3,
            Error::Verification(_) => 4,
        }
    }
}
