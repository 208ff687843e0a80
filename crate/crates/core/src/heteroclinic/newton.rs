use crate::error::{Error, IterationRecord, Result};
use crate::model::ModelParams;
use crate::scalar::{c, Real};

use super::collocation::{Collocation, DiscretePath};
use super::mesh::Mesh;
use super::solution::HeteroclinicSolution;

/// Step-length floor of the backtracking line search.
pub const MIN_STEP: f64 = 1.0 / 1_048_576.0;
const ARMIJO: f64 = 1e-4;

fn max_norm<T: Real>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

fn two_norm<T: Real>(r: &[T]) -> T {
    r.iter().map(|v| *v * *v).sum::<T>().sqrt()
}

fn axpy<T: Real>(path: &DiscretePath<T>, lambda: T, dir: &DiscretePath<T>) -> DiscretePath<T> {
    let add = |a: &[T; 6], b: &[T; 6]| {
        let mut o = *a;
        for k in 0..6 {
            o[k] += lambda * b[k];
        }
        o
    };
    DiscretePath {
        states: path.states.iter().zip(&dir.states).map(|(a, b)| add(a, b)).collect(),
        stages: path.stages.iter().zip(&dir.stages).map(|(a, b)| add(a, b)).collect(),
        mu: path.mu + lambda * dir.mu,
    }
}

/// Damped Newton on the collocation system with phase value `a_mid`.
///
/// Converges when the max-norm of the residual is `<= tol`. The result is
/// checked for `B > 0` and `B' > 0` at interior nodes.
pub fn newton_solve<T: Real>(
    p: &ModelParams<T>,
    mesh: &Mesh<T>,
    guess: DiscretePath<T>,
    tol: T,
    max_iter: usize,
    a_mid: T,
) -> Result<HeteroclinicSolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    let warnings = p.check_solver_range()?;
    mesh.validate(p)?;
    let col = Collocation::new(p, mesh, a_mid)?;
    col.check_dims(&guess)?;

    let mut path = guess;
    let mut r = col.residual(&path)?;
    let mut trace = vec![IterationRecord { iteration: 0, residual: max_norm(&r).as_f64(), step_length: 0.0 }];
    let mut iterations = 0;
    while max_norm(&r) > tol {
        if iterations == max_iter {
            return Err(Error::NonConvergence { iterations, residual: max_norm(&r).as_f64(), trace });
        }
        let dir = col.newton_direction(&path)?;
        let base = two_norm(&r);
        let mut lambda = T::one();
        let accepted = loop {
            let trial = axpy(&path, lambda, &dir);
            let rt = col.residual(&trial)?;
            let nt = two_norm(&rt);
            if nt.is_finite() && nt <= (T::one() - c::<T>(ARMIJO) * lambda) * base {
                break Some((trial, rt));
            }
            lambda *= c(0.5);
            if lambda < c(MIN_STEP) {
                break None;
            }
        };
        iterations += 1;
        match accepted {
            Some((trial, rt)) => {
                path = trial;
                r = rt;
                trace.push(IterationRecord {
                    iteration: iterations,
                    residual: max_norm(&r).as_f64(),
                    step_length: lambda.as_f64(),
                });
            }
            None => {
                trace.push(IterationRecord {
                    iteration: iterations,
                    residual: max_norm(&r).as_f64(),
                    step_length: 0.0,
                });
                return Err(Error::NonConvergence { iterations, residual: max_norm(&r).as_f64(), trace });
            }
        }
    }

    let n = path.states.len();
    let mut bad = Vec::new();
    for (i, u) in path.states.iter().enumerate().take(n - 1).skip(1) {
        if !(u[4] > T::zero()) {
            bad.push(format!("B = {} at node {i} (x = {})", u[4], mesh.nodes[i]));
        }
        if !(u[5] > T::zero()) {
            bad.push(format!("B' = {} at node {i} (x = {})", u[5], mesh.nodes[i]));
        }
        if bad.len() > 8 {
            break;
        }
    }
    if !bad.is_empty() {
        return Err(Error::InvariantViolation(bad));
    }
    let res = max_norm(&r);
    HeteroclinicSolution::assemble(mesh.clone(), path, *p, res, iterations, trace, a_mid, warnings)
}
