use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChiarellaError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("division by zero: {0} is undefined when sigma_n = 0")]
    DivisionByZero(&'static str),

    #[error("no stationary distribution: alpha(1 - beta*gamma) + kappa = {margin} <= 0")]
    NoStationaryDistribution { margin: f64 },

    #[error("covariance matrix is singular (determinant {det})")]
    SingularCovariance { det: f64 },

    #[error("quadrature failed to reach relative tolerance {tol} (estimate {estimate}, error {error})")]
    QuadratureFailure { tol: f64, estimate: f64, error: f64 },

    #[error("mode bracket failure: {0}")]
    BracketFailure(String),

    #[error("no Gaussian density: Z(theta) = {z} <= 0, quasi-static law predicts bimodality")]
    NoGaussianDensity { z: f64 },

    #[error("no potential barrier: beta*gamma = {beta_gamma} <= 1")]
    NoBarrier { beta_gamma: f64 },

    #[error("non-finite state at step {step} of path {path}")]
    NonFinite { step: u64, path: u64 },

    #[error("unsupported regime `{0}`")]
    UnsupportedRegime(String),

    #[error("empty input")]
    EmptyInput,

    #[error("insufficient data: {have} samples, need at least {need}")]
    InsufficientData { have: u64, need: u64 },

    #[error("support mismatch: {0}")]
    SupportMismatch(String),

    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),

    #[error("density is not normalisable: {0}")]
    NotNormalizable(String),

    #[error("histogram edges differ, cannot merge")]
    IncompatibleHistograms,
}

pub type Result<T, E = ChiarellaError> = std::result::Result<T, E>;
