use std::ops::Range;

use crate::asymptotics::{decay_rate_fit, LinearFit};
use crate::error::{Error, IterationRecord, Result};
use crate::model::{first_integral_raw, ModelParams, ReducedState};
use crate::scalar::{c, Real};

use super::collocation::{field_mu, DiscretePath};
use super::mesh::Mesh;
use super::tableau::Tableau;

/// One fitted exponential rate together with its closed-form prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit<T> {
    pub fit: LinearFit<T>,
    /// `|slope|` of the log-linear fit.
    pub rate: T,
    pub expected: T,
}

impl<T: Real> DecayFit<T> {
    pub fn relative_error(&self) -> T {
        ((self.rate - self.expected) / self.expected).abs()
    }
}

/// Fits at both ends. A fit is `None` when too few nodes fall into its window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecayFits<T> {
    /// `B` as `x -> -inf`, expected `eps delta`.
    pub b_minus: Option<DecayFit<T>>,
    /// `1 - A` as `x -> -inf`, expected `2 eps delta` (forced by `B^2`).
    pub a_minus: Option<DecayFit<T>>,
    /// Envelope `sqrt(A^2 + A'^2 + A''^2 + A'''^2)` as `x -> +inf`, expected `sqrt(delta/2)`.
    pub a_plus: Option<DecayFit<T>>,
    /// `1 - B` as `x -> +inf`, expected `sqrt(2) eps`.
    pub b_plus: Option<DecayFit<T>>,
}

/// Converged connection `M- -> M+` on a truncated interval.
#[derive(Clone, Debug, PartialEq)]
pub struct HeteroclinicSolution<T> {
    pub mesh: Mesh<T>,
    pub states: Vec<ReducedState<T>>,
    /// Stage derivatives, `collocation_order` per cell.
    pub stages: Vec<[T; 6]>,
    pub params: ModelParams<T>,
    /// Unfolding parameter; zero up to the solver tolerance at a true connection.
    pub mu: T,
    pub newton_residual: T,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub wg_profile: Vec<T>,
    pub decay_fits: DecayFits<T>,
    pub phase_anchor: T,
    pub phase_index: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> HeteroclinicSolution<T> {
    pub(crate) fn assemble(
        mesh: Mesh<T>,
        path: DiscretePath<T>,
        params: ModelParams<T>,
        newton_residual: T,
        iterations: usize,
        trace: Vec<IterationRecord>,
        phase_anchor: T,
        warnings: Vec<String>,
    ) -> Result<Self> {
        let phase_index =
            mesh.zero_index().ok_or_else(|| Error::Precondition("mesh must contain the phase node x = 0".into()))?;
        let wg_profile = path.states.iter().map(|u| first_integral_raw(u, &params)).collect();
        let mut sol = Self {
            states: path.reduced_states(),
            stages: path.stages,
            mu: path.mu,
            mesh,
            params,
            newton_residual,
            iterations,
            trace,
            wg_profile,
            decay_fits: DecayFits::default(),
            phase_anchor,
            phase_index,
            warnings,
        };
        sol.decay_fits = sol.fit_decays();
        Ok(sol)
    }

    pub fn path(&self) -> DiscretePath<T> {
        DiscretePath {
            states: self.states.iter().map(|s| s.to_array()).collect(),
            stages: self.stages.clone(),
            mu: self.mu,
        }
    }

    pub fn max_abs_wg(&self) -> T {
        self.wg_profile.iter().fold(T::zero(), |m, w| m.max(w.abs()))
    }

    fn tableau(&self) -> Tableau<T> {
        Tableau::gauss(self.mesh.collocation_order)
    }

    /// Collocation polynomial and its derivative at `x` inside the mesh.
    pub fn eval(&self, x: T) -> ([T; 6], [T; 6]) {
        self.eval_with(&self.tableau(), x)
    }

    pub(crate) fn eval_with(&self, tab: &Tableau<T>, x: T) -> ([T; 6], [T; 6]) {
        let i = self.mesh.locate(x);
        let h = self.mesh.h(i);
        let theta = (x - self.mesh.nodes[i]) / h;
        let w = tab.dense_weights(theta);
        let l = tab.basis_values(theta);
        let k = &self.stages[i * tab.s..(i + 1) * tab.s];
        let mut u = self.states[i].to_array();
        let mut du = [T::zero(); 6];
        for (j, kj) in k.iter().enumerate() {
            for a in 0..6 {
                u[a] += h * w[j] * kj[a];
                du[a] += l[j] * kj[a];
            }
        }
        (u, du)
    }

    /// Dense output, extended exponentially toward the limit states outside the mesh.
    pub fn eval_extended(&self, x: T) -> ([T; 6], [T; 6]) {
        let p = &self.params;
        let (xl, xr) = (self.mesh.x_left, self.mesh.x_right);
        if x >= xl && x <= xr {
            return self.eval(x);
        }
        let (edge, lim, ra, rb) = if x < xl {
            let ra = c::<T>(2.0).powf(c(0.25)) * T::FRAC_1_SQRT_2();
            (xl, ReducedState::<T>::m_minus().to_array(), ra, p.epsilon() * p.delta())
        } else {
            let ra = -(p.delta() * c(0.5)).sqrt();
            (xr, ReducedState::<T>::m_plus().to_array(), ra, -T::SQRT_2() * p.epsilon())
        };
        let u0 = self.eval(edge).0;
        let d = x - edge;
        let mut u = [T::zero(); 6];
        for a in 0..6 {
            let r = if a < 4 { ra } else { rb };
            u[a] = lim[a] + (u0[a] - lim[a]) * (r * d).exp();
        }
        (u, field_mu(&u, self.mu, p))
    }

    /// Gauss points of every cell: `(x, U, K)` with `U` the stage value and `K = U'`.
    pub fn stage_points(&self) -> Vec<(T, [T; 6], [T; 6])> {
        let tab = self.tableau();
        let s = tab.s;
        let mut out = Vec::with_capacity(self.stages.len());
        for i in 0..self.mesh.cells() {
            let h = self.mesh.h(i);
            let k = &self.stages[i * s..(i + 1) * s];
            for j in 0..s {
                let mut u = self.states[i].to_array();
                for (l, kl) in k.iter().enumerate() {
                    for a in 0..6 {
                        u[a] += h * tab.a[j][l] * kl[a];
                    }
                }
                out.push((self.mesh.nodes[i] + tab.c[j] * h, u, k[j]));
            }
        }
        out
    }

    /// Gauss weights matching [`stage_points`](Self::stage_points).
    pub fn stage_weights(&self) -> Vec<T> {
        let tab = self.tableau();
        let mut out = Vec::with_capacity(self.stages.len());
        for i in 0..self.mesh.cells() {
            let h = self.mesh.h(i);
            out.extend(tab.b.iter().map(|b| *b * h));
        }
        out
    }

    pub fn fit_decays(&self) -> DecayFits<T> {
        let p = &self.params;
        let xs = &self.mesh.nodes;
        let eps = p.epsilon();
        let n = xs.len();
        let b: Vec<T> = self.states.iter().map(|s| s.b0).collect();
        let one_minus_b: Vec<T> = b.iter().map(|v| T::one() - *v).collect();
        let one_minus_a: Vec<T> = self.states.iter().map(|s| T::one() - s.a0).collect();
        let env: Vec<T> =
            self.states.iter().map(|s| (s.a0 * s.a0 + s.a1 * s.a1 + s.a2 * s.a2 + s.a3 * s.a3).sqrt()).collect();
        let neg = |i: usize| xs[i] < T::zero();
        let pos = |i: usize| xs[i] > T::zero();
        let small: T = c(1e-2);
        let fit = |vals: &[T], pick: &dyn Fn(usize) -> bool, expected: T| -> Option<DecayFit<T>> {
            let w = longest_run(n, pick)?;
            let f = decay_rate_fit(xs, vals, w).ok()?;
            Some(DecayFit { fit: f, rate: f.slope.abs(), expected })
        };
        DecayFits {
            b_minus: fit(&b, &|i| neg(i) && b[i] > T::zero() && b[i] < small, eps * p.delta()),
            a_minus: fit(
                &one_minus_a,
                &|i| neg(i) && one_minus_a[i] > T::zero() && one_minus_a[i] < c(1e-3),
                c::<T>(2.0) * eps * p.delta(),
            ),
            a_plus: fit(&env, &|i| pos(i) && env[i] > c(1e-11) && env[i] < c(1e-5), (p.delta() * c(0.5)).sqrt()),
            b_plus: fit(
                &one_minus_b,
                &|i| pos(i) && one_minus_b[i] > T::zero() && one_minus_b[i] < small,
                T::SQRT_2() * eps,
            ),
        }
    }
}

/// Longest run of consecutive indices satisfying `pick`.
fn longest_run(n: usize, pick: &dyn Fn(usize) -> bool) -> Option<Range<usize>> {
    let mut best: Option<Range<usize>> = None;
    let mut start = None;
    for i in 0..=n {
        let inside = i < n && pick(i);
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.as_ref().is_none_or(|b| i - s > b.len()) {
                    best = Some(s..i);
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}
