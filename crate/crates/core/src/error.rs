use thiserror::Error;

/// Errors raised anywhere in the verification pipeline.
///
/// Coordinates and magnitudes are reported as `f64` regardless of the scalar
/// type the failing computation ran in.
#[derive(Debug, Error)]
pub enum Error {
    #[error("numerator polynomial is identically zero")]
    ZeroNumerator,
    #[error("denominator polynomial is identically zero")]
    ZeroDenominator,
    #[error("numerator and denominator share a factor of degree {0}")]
    NotIrreducible(usize),
    #[error("Möbius transformation is degenerate: |ad - bc| = {0:e}")]
    DegenerateMoebius(f64),
    #[error("denominator vanishes at ({x}, {y})")]
    PoleHit { x: f64, y: f64 },
    #[error("perturbation is not tangent at ({x}, {y}): |v·Φ| = {residual:e}")]
    TangencyViolation { x: f64, y: f64, residual: f64 },
    #[error("perturbation amplitude too large at ({x}, {y}): ε²|v|² = {value}")]
    AmplitudeTooLarge { x: f64, y: f64, value: f64 },
    #[error("integrand is not finite at node ({x}, {y})")]
    NonFiniteSample { x: f64, y: f64 },
    #[error("quadrature tolerance not met: best value {value:?}, error estimate {err_est:?}")]
    ToleranceNotMet { value: Vec<f64>, err_est: Vec<f64> },
    #[error("expansion hypotheses violated: {0}")]
    HypothesisViolated(String),
    #[error("linear solve is ill-conditioned: relative residual {0:e}")]
    IllConditioned(f64),
    #[error("Gauss-Newton model matrix is not positive definite at iteration {0}")]
    SingularModel(usize),
    #[error("projection did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },
    #[error("kernel index {0} outside 1..=10")]
    InvalidIndex(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
