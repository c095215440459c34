use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// Qubit detuning too small for adiabatic elimination.
    #[error("resonant regime, elimination invalid: {0}")]
    ResonantRegime(String),

    #[error("lossless singular point: steady-state denominator vanishes")]
    LosslessSingular,

    #[error("phase undefined at extinction near detuning {detuning}")]
    PhaseUndefined { detuning: f64 },

    /// A precondition of an operation was violated by the caller.
    #[error("contract violated: {0}")]
    Contract(String),

    #[error("empty measurement window: {0}")]
    EmptyWindow(String),

    #[error("integration diverged at step {step}")]
    Diverged { step: usize },
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> SimError {
    SimError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
