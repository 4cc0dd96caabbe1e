use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: expected cutoff {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("non-terminating Lie series: generator has scaling degree 0")]
    NonTerminating,
    #[error("step {step} rejected: {reason}")]
    StepRejected { step: usize, reason: String },
    #[error("numerical blow-up at t = {t}")]
    BlowUp { t: f64 },
    #[error("flow domain error: {0}")]
    FlowDomain(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget(_) => 3,
            Error::BlowUp { .. } | Error::FlowDomain(_) => 4,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_cutoff(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
