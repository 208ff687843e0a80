use thiserror::Error;

/// One Newton iterate, kept for failure traces.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub residual: f64,
    pub step_length: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("center direction: eigenvalue {0} has vanishing real part")]
    CenterDirection(String),

    #[error("newton iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, trace: Vec<IterationRecord> },

    #[error("invariant violated: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),

    #[error("singular matrix (zero pivot in column {0})")]
    Singular(usize),

    #[error("inverse iteration broke down (shifts tried: {shifts:?})")]
    InverseIteration { shifts: Vec<f64> },

    #[error("unknown integrand id `{0}`")]
    UnknownIntegrand(String),

    #[error("decay fits unavailable: {0}")]
    MissingDecayFits(String),

    #[error("degenerate family: a5 = 0; use equal_wavenumber_solution instead")]
    DegenerateFamily,

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
