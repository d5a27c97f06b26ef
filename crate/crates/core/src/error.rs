use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("eigenvalue {0:e} is below the round-off clamp")]
    NegativeEigenvalue(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("wavelength must be positive, got {0} nm")]
    NonPositiveWavelength(f64),
    #[error("reference wavevector k_r is zero")]
    ZeroReferenceWavevector,
    #[error("time {t} us outside the gate window [0, {t_gate}]")]
    OutOfWindow { t: f64, t_gate: f64 },
    #[error("unknown protocol kind '{0}'")]
    UnknownKind(String),
    #[error("step {dt:e} us exceeds the allowed {max:e} us")]
    StepTooLarge { dt: f64, max: f64 },
    #[error("trace drifted by {0:e}")]
    TraceDrift(f64),
    #[error("no root of J0(z) = {0} below the first minimum")]
    NoRoot(f64),
    #[error("unknown scenario '{id}'; available: {available}")]
    UnknownScenario { id: String, available: String },
    #[error("scenario table checksum mismatch: {0}")]
    Checksum(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    /// Numerical failures, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TraceDrift(_) | Error::NegativeEigenvalue(_) | Error::NotHermitian | Error::NoRoot(_)
        )
    }
}
