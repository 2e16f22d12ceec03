use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("singular counterdiabatic denominator: detuning and decay rate are both zero")]
    SingularDenominator,

    #[error("degenerate spectrum at t = {t}: gap {gap:e} below tolerance {tolerance:e}")]
    DegenerateSpectrum { t: f64, gap: f64, tolerance: f64 },

    #[error("time grid too coarse at t = {t}: adjacent eigenvector overlap {overlap}")]
    GridTooCoarse { t: f64, overlap: f64 },

    #[error("step {step} exceeds stability limit {limit}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("moment state unphysical at t = {t}: {invariant} (residual {residual:e})")]
    InvariantViolation {
        t: f64,
        invariant: &'static str,
        residual: f64,
    },

    #[error("Fock truncation leak at t = {t}: top-level population {population:e} in mode {mode}")]
    TruncationLeak { t: f64, mode: char, population: f64 },

    #[error("unphysical Gaussian state: M = {m_value} < 1")]
    UnphysicalState { m_value: f64 },

    #[error("energy decomposition mismatch: max residual {max_residual:e}")]
    DecompositionMismatch { max_residual: f64 },

    #[error("envelope resonant with coupling: |g^2 - (2 omega)^2| = {distance:e}")]
    ResonantEnvelope { distance: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
