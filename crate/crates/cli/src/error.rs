use eit_core::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("plot error: {0}")]
    Plot(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numeric(_) | RunError::Plot(_) => 2,
            RunError::Io(_) => 3,
        }
    }

    pub(crate) fn from_config(e: SimError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<SimError> for RunError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Diverged { .. }
            | SimError::LosslessSingular
            | SimError::PhaseUndefined { .. }
            | SimError::EmptyWindow(_) => RunError::Numeric(e.to_string()),
            SimError::InvalidParameter { .. }
            | SimError::ResonantRegime(_)
            | SimError::Contract(_) => RunError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}
