use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("layer {layer}: need {needed} results, only {available} available")]
    InsufficientResults {
        layer: usize,
        needed: usize,
        available: usize,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("incomplete job: {0}")]
    IncompleteJob(String),

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("layer {layer} stalled with {received} of {needed} results{}", deadline_suffix(.deadline))]
    Timeout {
        layer: usize,
        received: usize,
        needed: usize,
        deadline: Option<f64>,
    },
}

fn deadline_suffix(deadline: &Option<f64>) -> String {
    match deadline {
        Some(d) => format!(" by deadline {d}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalFailure(_) => 3,
            _ => 2,
        }
    }
}
