use num_complex::Complex64;
use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("point {z} lies outside the annulus of half-width {rho0}")]
    OutOfAnnulus { z: Complex64, rho0: f64 },

    #[error("continued fraction of {omega} terminates after {terms} quotients (requested {depth})")]
    RationalInput { omega: f64, terms: usize, depth: usize },

    #[error("frequency condition not met: {0}")]
    Frequency(String),

    #[error("{what}: routes disagree ({lhs} vs {rhs})")]
    Mismatch { what: &'static str, lhs: f64, rhs: f64 },

    #[error("determinant too small to invert ({0:e})")]
    Singular(f64),

    #[error("eigenvalue {0} is degenerate within 1e-13")]
    Degenerate(f64),

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("hypothesis ({which}) fails at block {index}")]
    Hypothesis { which: &'static str, index: usize },

    #[error("contour passes too close to a zero (margin {margin:e}) after {attempts} attempts")]
    ContourTooClose { margin: f64, attempts: usize },

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("no interior maximum of the lower branch: {0}")]
    NoSplit(String),

    #[error("no shift in the admissible range hits the resonance window")]
    NotFound,

    #[error("undecided: {0}")]
    Undecided(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Stable name used in CLI manifests.
    #[must_use]
    pub fn name(&self) -> &'static str {
        match self {
            Error::OutOfAnnulus { .. } => "OutOfAnnulus",
            Error::RationalInput { .. } => "RationalInput",
            Error::Frequency(_) => "FrequencyError",
            Error::Mismatch { .. } => "MismatchError",
            Error::Singular(_) => "SingularError",
            Error::Degenerate(_) => "DegenerateError",
            Error::CrossCheck(_) => "CrossCheckError",
            Error::Hypothesis { .. } => "HypothesisError",
            Error::ContourTooClose { .. } => "ContourTooClose",
            Error::RootFinding(_) => "RootFindingError",
            Error::NoSplit(_) => "NoSplitError",
            Error::NotFound => "NotFound",
            Error::Undecided(_) => "Undecided",
            Error::Precondition(_) => "PreconditionError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<S: Into<String>>(ok: bool, msg: S) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(msg.into()))
    }
}
