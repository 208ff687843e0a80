use std::fmt;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{c, cu, Real};

use super::collocation::DiscretePath;
use super::mesh::{build_mesh, Mesh};
use super::newton::newton_solve;
use super::solution::HeteroclinicSolution;
use super::tableau::Tableau;
use super::SolverConfig;

/// Maximum number of step halvings below the nominal step.
const MAX_BISECTIONS: u32 = 6;

/// A continuation step failed at the bisection floor.
#[derive(Debug)]
pub struct ContinuationFailure<T> {
    pub error: Error,
    /// Solutions accepted before the failure; the last one is the last good solution.
    pub completed: Vec<HeteroclinicSolution<T>>,
    /// Path parameter of the failed step, in `[0, 1]`.
    pub t_failed: T,
}

impl<T: Real> fmt::Display for ContinuationFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "continuation stopped at t = {} after {} accepted steps: {}",
            self.t_failed,
            self.completed.len(),
            self.error
        )
    }
}

impl<T: Real> std::error::Error for ContinuationFailure<T> {}

/// Dense output of `sol` transferred onto `mesh`.
fn transfer<T: Real>(sol: &HeteroclinicSolution<T>, mesh: &Mesh<T>) -> DiscretePath<T> {
    if *mesh == sol.mesh {
        return sol.path();
    }
    let tab = Tableau::<T>::gauss(mesh.collocation_order);
    let states = mesh.nodes.iter().map(|x| sol.eval_extended(*x).0).collect();
    let mut stages = Vec::with_capacity(mesh.cells() * tab.s);
    for i in 0..mesh.cells() {
        let h = mesh.h(i);
        for cj in &tab.c {
            stages.push(sol.eval_extended(mesh.nodes[i] + *cj * h).1);
        }
    }
    DiscretePath { states, stages, mu: sol.mu }
}

/// Natural-parameter continuation along the straight line from `sol.params` to `target` in `(eps, delta)`.
///
/// Each step starts from the previous solution; the mesh is rebuilt only when
/// the truncation invariant requires it. A failed step is halved, at most
/// [`MAX_BISECTIONS`] times.
pub fn continue_in_parameter<T: Real>(
    sol: &HeteroclinicSolution<T>,
    target: &ModelParams<T>,
    steps: usize,
    cfg: &SolverConfig<T>,
) -> std::result::Result<Vec<HeteroclinicSolution<T>>, ContinuationFailure<T>> {
    let fail = |error: Error, completed, t_failed| ContinuationFailure { error, completed, t_failed };
    let p0 = sol.params;
    let same_rest =
        p0.k_minus == target.k_minus && p0.omega_tilde_plus == target.omega_tilde_plus && p0.coeffs == target.coeffs;
    if steps == 0 || !same_rest {
        let msg = if steps == 0 { "steps must be >= 1" } else { "target may differ in epsilon and delta only" };
        return Err(fail(Error::Precondition(msg.into()), Vec::new(), T::zero()));
    }
    let base = T::one() / cu::<T>(steps);
    let floor = base / c::<T>(f64::from(1u32 << MAX_BISECTIONS));
    let at = |t: T| -> Result<ModelParams<T>> {
        let e = p0.epsilon() + t * (target.epsilon() - p0.epsilon());
        let d = p0.delta() + t * (target.delta() - p0.delta());
        p0.with_eps_delta(e, d)
    };

    let mut out: Vec<HeteroclinicSolution<T>> = Vec::new();
    let mut t = T::zero();
    let mut dt = base;
    while t < T::one() {
        let t_next = if t + dt > T::one() - floor * c(1e-3) { T::one() } else { t + dt };
        let prev = out.last().unwrap_or(sol);
        let attempt = at(t_next).and_then(|p| {
            let mesh = if prev.mesh.validate(&p).is_ok() {
                prev.mesh.clone()
            } else {
                let mut mc = cfg.mesh;
                mc.collocation_order = prev.mesh.collocation_order;
                build_mesh(&p, &mc)?
            };
            let guess = transfer(prev, &mesh);
            newton_solve(&p, &mesh, guess, cfg.tol, cfg.max_iter, prev.phase_anchor)
        });
        match attempt {
            Ok(s) => {
                out.push(s);
                t = t_next;
                dt = (dt * c(2.0)).min(base);
            }
            Err(e) => {
                dt *= c(0.5);
                if dt < floor * c(0.999) {
                    return Err(fail(e, out, t_next));
                }
            }
        }
    }
    Ok(out)
}
