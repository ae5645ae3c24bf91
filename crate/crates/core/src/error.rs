//! Error type shared by all modules.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the numerical operations.
///
/// Variants are split between *validation* failures (bad input, reported
/// before any work is done) and *runtime* failures (the computation itself
/// could not deliver a trustworthy answer).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A mode or component index outside the admissible range.
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    /// Malformed numerical data (NaN, wrong length, empty input).
    #[error("invalid data: {0}")]
    InvalidData(String),
    /// A parameter outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A time or space argument outside the domain of the object.
    #[error("domain error: {0}")]
    Domain(String),
    /// A derivative was requested from an object that is only continuous.
    #[error("not differentiable: {0}")]
    NotDifferentiable(String),
    /// The sampler produced unusable output (e.g. zero acceptance).
    #[error("sampler degenerate: {0}")]
    SamplerDegenerate(String),
    /// The Gronwall parameter δ is too large; a safe value is suggested.
    #[error("delta too large; suggested value {suggested:.6e}")]
    DeltaTooLarge { suggested: f64 },
    /// The exponent of the Feynman–Kac weight left the floating-point range.
    #[error("representation overflow at t = {t}, x = {x:?}")]
    RepresentationOverflow { t: f64, x: Vec<f64> },
    /// An inner solver (Newton, quadrature) failed to converge.
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// A simulated trajectory left every reasonable bound.
    #[error("blow-up: {0}")]
    BlowUp(String),
    /// A proven inequality or identity failed beyond its tolerance.
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    /// An iterative estimate did not settle within its budget.
    #[error("not converged: {0}")]
    NotConverged(String),
    /// Input whose required integrals diverge (e.g. infinite entropy).
    #[error("infeasible input: {0}")]
    InfeasibleInput(String),
}

impl Error {
    /// True for errors that signal invalid input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidIndex(_)
                | Error::InvalidData(_)
                | Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::InfeasibleInput(_)
        )
    }
}

/// Fails with [`Error::InvalidParameter`] unless `value` is finite and strictly positive.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Fails with [`Error::InvalidData`] if any entry is not finite.
pub(crate) fn require_finite(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::InvalidData(format!("{name}[{i}] is not finite"))),
    }
}
