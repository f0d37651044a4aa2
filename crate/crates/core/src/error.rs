use crate::radial::RadialFunction;

/// Errors raised by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The exponent tuple violates `p < q1 < p + p^2/N < q2 <= p*` (or a
    /// regime gate of a specific operation).
    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("resolution loss: {0}")]
    ResolutionLoss(String),

    /// The fibering map has no critical point of the requested type.
    #[error("projection unavailable: {0}")]
    ProjectionUnavailable(String),

    #[error("empty manifold: {0}")]
    EmptyManifold(String),

    #[error("no convergence after {iterations} iterations: {reason}")]
    NonConvergence {
        iterations: usize,
        reason: String,
        /// Best iterate seen before giving up, with its objective value.
        best: Option<Box<(RadialFunction, f64)>>,
    },

    #[error("concentration diagnosed: {0}")]
    Concentration(String),

    #[error("certificate unavailable: {0}")]
    CertificateUnavailable(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported regime: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
