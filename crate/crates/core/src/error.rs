use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: supported range is 1..=2")]
    UnsupportedDimension(usize),

    #[error("points per axis must be a power of two and at least 8, got {0}")]
    InvalidResolution(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid mismatch: field lives on {found}, operator expects {expected}")]
    GridMismatch { expected: String, found: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("field length {found} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("zero field has no Rayleigh quotient")]
    ZeroField,

    #[error("subcritical exponent condition violated: {0}")]
    Supercritical(String),

    #[error("quadrature oracle: {0}")]
    Quadrature(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("solver configuration error: {0}")]
    SolverConfiguration(String),

    #[error("solve cancelled after {0} iterations")]
    Cancelled(usize),

    #[error("field is not resolvable on the target grid: {0}")]
    Unresolvable(String),

    #[error("linear solve stagnated after {iterations} iterations (relative residual {relative_residual:.3e})")]
    LinearSolveStagnated {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("ill-conditioned projection basis (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("diagnostic precondition failed: {0}")]
    Diagnostic(String),
}
