use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    /// σ_x² = 0: the likelihood is a point mass.
    #[error("degenerate model: equivalent noise variance is zero")]
    DegenerateModel,

    #[error("singular submatrix: A_S^T A_S is not invertible")]
    SingularSubmatrix,

    #[error("wrong regime: support size {support} does not match the {expected} case for s = {s}")]
    WrongRegime { support: usize, s: usize, expected: &'static str },

    /// Singular Fisher information in the nonmaximal case.
    #[error("singular Fisher information: no finite-variance estimator is unbiased in the neighborhood of x")]
    NoUnbiasedEstimator,

    #[error("unsupported size: n = {n} exceeds the exhaustive limit {limit}")]
    UnsupportedSize { n: usize, limit: usize },

    #[error("assumption violated: smallest restricted eigenvalue {lambda_min} is not positive")]
    AssumptionViolated { lambda_min: f64 },

    #[error("divergent test points {i} and {j}: 1/varsigma^2 = {inv_varsigma2} is not positive")]
    DivergentTestPoint { i: usize, j: usize, inv_varsigma2: f64 },

    #[error("infeasible offset {index}: x + v has {nonzeros} nonzeros, budget is {s}")]
    InfeasibleOffset { index: usize, nonzeros: usize, s: usize },

    #[error("closed-form HCRB requires identity matrix")]
    UnsupportedMatrix,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined support: measurement is identically zero")]
    UndefinedSupport,

    #[error("too many failed trials: {failed} of {trials} (first error: {first})")]
    TooManyFailures { failed: usize, trials: usize, first: String },
}

impl Error {
    /// True for errors that stem from the mathematics of the instance rather
    /// than from malformed input.
    pub fn is_math_domain(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::DimensionMismatch { .. })
    }
}
