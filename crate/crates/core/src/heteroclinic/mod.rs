//! The connection `M- -> M+` of the reduced system as a collocation boundary value problem.
//!
//! Gauss collocation on a graded mesh, with stage derivatives eliminated cell
//! by cell so that each Newton step is one banded solve over the node states.

mod collocation;
mod continuation;
mod guess;
mod io;
mod mesh;
mod newton;
mod solution;
mod tableau;
mod verify;

pub use collocation::{assemble_residual, BoundaryData, Collocation, DiscretePath};
pub use continuation::{continue_in_parameter, ContinuationFailure};
pub use guess::{guess_state, initial_guess};
pub use io::{read_solution, write_solution};
pub use mesh::{build_mesh, min_x_left, min_x_right, Mesh, MeshConfig};
pub use newton::{newton_solve, MIN_STEP};
pub use solution::{DecayFit, DecayFits, HeteroclinicSolution};
pub use tableau::Tableau;
pub use verify::{verify_solution, Check, VerificationReport, VerifyConfig};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{c, Real};

/// Everything a solve from scratch needs besides the parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig<T> {
    pub mesh: MeshConfig<T>,
    pub tol: T,
    pub max_iter: usize,
    /// Phase condition `A(0) = a_mid`.
    pub a_mid: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self { mesh: MeshConfig::default(), tol: c(1e-11), max_iter: 40, a_mid: c(0.5) }
    }
}

/// Below this `eps` a failed direct solve is retried by continuation from here.
pub const ANCHOR_EPSILON: f64 = 0.1;

/// Mesh, tanh guess and Newton in one call.
///
/// When Newton from the guess fails for `eps < ANCHOR_EPSILON`, the solve is
/// repeated at `ANCHOR_EPSILON` and continued down in steps of at most 0.01;
/// the original error is returned if that fails too.
pub fn solve<T: Real>(p: &ModelParams<T>, cfg: &SolverConfig<T>) -> Result<HeteroclinicSolution<T>> {
    let direct = solve_direct(p, cfg);
    let anchor = c::<T>(ANCHOR_EPSILON);
    match direct {
        Err(Error::NonConvergence { .. }) if p.epsilon() < anchor => {
            let from = p.with_eps_delta(anchor, p.delta()).and_then(|q| solve_direct(&q, cfg));
            let steps = ((anchor - p.epsilon()) / c(0.01)).ceil().to_usize().unwrap_or(1).max(1);
            match from.map(|s| continue_in_parameter(&s, p, steps, cfg)) {
                Ok(Ok(mut path)) => Ok(path.pop().expect("continuation returns every step")),
                _ => direct,
            }
        }
        other => other,
    }
}

fn solve_direct<T: Real>(p: &ModelParams<T>, cfg: &SolverConfig<T>) -> Result<HeteroclinicSolution<T>> {
    p.check_solver_range()?;
    let mesh = build_mesh(p, &cfg.mesh)?;
    let guess = initial_guess(p, &mesh);
    newton_solve(p, &mesh, guess, cfg.tol, cfg.max_iter, cfg.a_mid)
}
