use crate::model::ModelParams;
use crate::scalar::{c, Real};

use super::collocation::DiscretePath;
use super::mesh::Mesh;
use super::tableau::Tableau;

/// Tanh front `A = (1 - tanh(nu x))/2`, `B = (1 + tanh(eps delta x))/2` with its derivatives.
///
/// Returns the state and its x-derivative.
pub fn guess_state<T: Real>(x: T, p: &ModelParams<T>) -> ([T; 6], [T; 6]) {
    let half: T = c(0.5);
    let nu = (p.delta() * half).sqrt();
    let t = (nu * x).tanh();
    let st = T::one() - t * t;
    let nu2 = nu * nu;
    let a = half * (T::one() - t);
    let a1 = -half * nu * st;
    let a2 = nu2 * t * st;
    let a3 = nu2 * nu * st * (T::one() - c::<T>(3.0) * t * t);
    let a4 = nu2 * nu2 * st * (c::<T>(12.0) * t * t * t - c::<T>(8.0) * t);

    let beta = p.epsilon() * p.delta();
    let s = (beta * x).tanh();
    let ss = T::one() - s * s;
    let b = half * (T::one() + s);
    let b1 = half * beta * ss;
    let b2 = -beta * beta * s * ss;
    ([a, a1, a2, a3, b, b1], [a1, a2, a3, a4, b1, b2])
}

/// Tanh guess on the nodes; stages are the exact derivatives at the Gauss points.
pub fn initial_guess<T: Real>(p: &ModelParams<T>, m: &Mesh<T>) -> DiscretePath<T> {
    let tab = Tableau::<T>::gauss(m.collocation_order);
    let states = m.nodes.iter().map(|x| guess_state(*x, p).0).collect();
    let mut stages = Vec::with_capacity(m.cells() * tab.s);
    for i in 0..m.cells() {
        let h = m.h(i);
        for cj in &tab.c {
            stages.push(guess_state(m.nodes[i] + *cj * h, p).1);
        }
    }
    DiscretePath { states, stages, mu: T::zero() }
}
