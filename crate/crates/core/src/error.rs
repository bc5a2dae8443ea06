use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {0} sums to zero and cannot be normalized")]
    ZeroRow(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not row-stochastic: {0}")]
    NotStochastic(String),

    #[error("beliefs diverged after {rounds} rounds (|belief| > {bound})")]
    Diverged { rounds: usize, bound: f64 },

    #[error("self-weight step size must lie in (0, 1], got {0}")]
    BadLambda(f64),

    #[error("matrix does not induce a consensus")]
    NoConsensus,

    #[error("no truthful agent within the first {horizon} topics")]
    NoSuccess { horizon: usize },

    #[error("variance at index {0} is not positive")]
    NonPositiveVariance(usize),

    #[error("spectral condition failed; eigenvalues on or outside the unit circle: {offending:?}")]
    SpectralConditionFailed { offending: Vec<(f64, f64)> },

    #[error("closed form is degenerate: n2 * (d - b) == 1")]
    DegenerateDenominator,

    #[error("linear system is singular")]
    SingularSystem,

    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid scenario config: {0}")]
    ConfigInvalid(String),

    #[error("unknown reproduce target '{0}'")]
    UnknownTarget(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
