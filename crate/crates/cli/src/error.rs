use std::path::Path;

use thiserror::Error;
use wallforge_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("degenerate family: {0}")]
    Degenerate(String),

    /// Results were written but an asserted check failed.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 1 io, 2 parse, 3 precondition, 4 solver, 5 degenerate family, 6 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Degenerate(_) => 5,
            CliError::Invariant(_) => 6,
            CliError::Core(e) => match e {
                CoreError::Parse(_) => 2,
                CoreError::InvalidParameter(_)
                | CoreError::Precondition(_)
                | CoreError::Domain(_)
                | CoreError::DimensionMismatch { .. }
                | CoreError::CenterDirection(_)
                | CoreError::UnknownIntegrand(_)
                | CoreError::MissingDecayFits(_) => 3,
                CoreError::NonConvergence { .. } | CoreError::Singular(_) | CoreError::InverseIteration { .. } => 4,
                CoreError::DegenerateFamily => 5,
                CoreError::InvariantViolation(_) => 6,
            },
        }
    }
}
