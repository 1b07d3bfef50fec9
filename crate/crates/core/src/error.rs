use thiserror::Error;

/// Errors raised by the library. Numeric payloads are widened to `f64`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation not supported for {0}")]
    UnsupportedRepresentation(&'static str),

    #[error("singular channel: transmission coefficient is zero")]
    SingularChannel,

    #[error("degenerate scaling: displacement amplitude is zero")]
    DegenerateScaling,

    #[error("degenerate covariance: {0}")]
    DegenerateCovariance(String),

    #[error("quadrature did not converge (residual {residual:.3e}, tolerance {tolerance:.3e})")]
    Accuracy { residual: f64, tolerance: f64 },

    #[error("mass clipped from the integration domain is {mass:.3e} (limit {limit:.1e})")]
    ClippedMass { mass: f64, limit: f64 },

    #[error("rejection sampling acceptance {acceptance:.3e} is below {minimum:.1e}")]
    LowAcceptance { acceptance: f64, minimum: f64 },

    #[error("input moment M_{n}{m} is zero; ratio undefined")]
    UndefinedRatio { n: usize, m: usize },

    #[error("moment matrix orders differ ({0} vs {1})")]
    OrderMismatch(usize, usize),

    #[error("mean photon number is zero; Mandel parameter undefined")]
    VacuumMandel,

    #[error("mean efficiency is zero; channel blocks all light")]
    DegenerateChannel,

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("classicality bound is unbounded: {0}")]
    Unbounded(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("homodyne protocol violation: {0}")]
    Protocol(String),

    #[error("incomplete characteristic-function data; missing (m, n): {0:?}")]
    IncompleteData(Vec<(i32, i32)>),

    #[error("empty grid")]
    EmptyGrid,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for numerical-accuracy failures (as opposed to bad input).
    pub fn is_accuracy(&self) -> bool {
        matches!(self, Error::Accuracy { .. } | Error::ClippedMass { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
