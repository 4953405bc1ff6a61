use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ambiguous eigenstate labeling: {0}")]
    DegenerateLabeling(String),

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("time step {dt:e} s exceeds the stability limit {limit:e} s")]
    StepSize { dt: f64, limit: f64 },

    #[error("probability mass {mass:e} reached the grid boundary (limit {limit:e})")]
    BoundaryLeak { mass: f64, limit: f64 },

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("calibration table is not monotone: {0}")]
    NonMonotone(String),

    #[error("value outside the calibrated domain: {0}")]
    OutOfDomain(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
