//! Catalog integrals over the heteroclinic with exponential tail corrections.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::heteroclinic::{HeteroclinicSolution, Tableau};
use crate::linalg::gauss_legendre_unit;
use crate::scalar::{c, Real};

use super::cutoff::cutoff;

/// Integrands with a fixed meaning; `A`, `B` are the heteroclinic profiles and `chi` the cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Integrand {
    /// `A''^2`
    SecondSquared,
    /// `A A'^3`
    ACubedSlope,
    /// `A^2 A' A''`
    ASquaredSlopeCurv,
    /// `(A - chi) A'`
    AMinusChiSlope,
    /// `(1 - A^2) A' chi`
    OneMinusASqSlopeChi,
    /// `(A B^2)' chi`
    AbSqPrimeChi,
    /// `chi'''' A'`
    ChiFourthSlope,
    /// `A' (A^3 - chi)`
    SlopeACubedMinusChi,
    /// `3 A A'^3 + 2g B B' A'^2 + g A A' B'^2`
    A0Prime,
    /// `g B B' A'^2 + 2g A A' B'^2 + B B'^3`
    A0DoublePrime,
    /// `B^2 A A'`
    BSqASlope,
    /// `A'' A'`
    CurvSlope,
    /// `A A'`
    ASlope,
    /// `B B'`
    BSlope,
}

pub const CATALOG: [Integrand; 14] = [
    Integrand::SecondSquared,
    Integrand::ACubedSlope,
    Integrand::ASquaredSlopeCurv,
    Integrand::AMinusChiSlope,
    Integrand::OneMinusASqSlopeChi,
    Integrand::AbSqPrimeChi,
    Integrand::ChiFourthSlope,
    Integrand::SlopeACubedMinusChi,
    Integrand::A0Prime,
    Integrand::A0DoublePrime,
    Integrand::BSqASlope,
    Integrand::CurvSlope,
    Integrand::ASlope,
    Integrand::BSlope,
];

impl Integrand {
    pub fn id(self) -> &'static str {
        match self {
            Self::SecondSquared => "A''^2",
            Self::ACubedSlope => "AA'^3",
            Self::ASquaredSlopeCurv => "A^2A'A''",
            Self::AMinusChiSlope => "(A-chi)A'",
            Self::OneMinusASqSlopeChi => "(1-A^2)A'chi",
            Self::AbSqPrimeChi => "(AB^2)'chi",
            Self::ChiFourthSlope => "chi''''A'",
            Self::SlopeACubedMinusChi => "A'(A^3-chi)",
            Self::A0Prime => "a0'",
            Self::A0DoublePrime => "a0''",
            Self::BSqASlope => "B^2AA'",
            Self::CurvSlope => "A''A'",
            Self::ASlope => "AA'",
            Self::BSlope => "BB'",
        }
    }

    /// Integrand value from the reduced state `(A, A', A'', A''', B, B')`.
    pub fn value<T: Real>(self, x: T, u: &[T; 6], g: T) -> T {
        let (a, a1, a2, b, b1) = (u[0], u[1], u[2], u[4], u[5]);
        let chi = || cutoff(x);
        let two = c::<T>(2.0);
        let three = c::<T>(3.0);
        match self {
            Self::SecondSquared => a2 * a2,
            Self::ACubedSlope => a * a1 * a1 * a1,
            Self::ASquaredSlopeCurv => a * a * a1 * a2,
            Self::AMinusChiSlope => (a - chi()[0]) * a1,
            Self::OneMinusASqSlopeChi => (T::one() - a * a) * a1 * chi()[0],
            Self::AbSqPrimeChi => (a1 * b * b + two * a * b * b1) * chi()[0],
            Self::ChiFourthSlope => chi()[4] * a1,
            Self::SlopeACubedMinusChi => a1 * (a * a * a - chi()[0]),
            Self::A0Prime => three * a * a1 * a1 * a1 + two * g * b * b1 * a1 * a1 + g * a * a1 * b1 * b1,
            Self::A0DoublePrime => g * b * b1 * a1 * a1 + two * g * a * a1 * b1 * b1 + b * b1 * b1 * b1,
            Self::BSqASlope => b * b * a * a1,
            Self::CurvSlope => a2 * a1,
            Self::ASlope => a * a1,
            Self::BSlope => b * b1,
        }
    }

    /// Vanishes outside `[-1, 0]`.
    pub fn compact(self) -> bool {
        matches!(self, Self::OneMinusASqSlopeChi | Self::AbSqPrimeChi | Self::ChiFourthSlope)
    }

    /// Decay rates of the integrand at each end from the profile rates.
    ///
    /// `r`: `B` at `-inf`; `ra`: `A` at `+inf`; `r1`: `B - 1` at `+inf`.
    /// `A - 1` at `-inf` is forced by `B^2` and decays at `2r`.
    fn tail_rates<T: Real>(self, r: T, ra: T, r1: T) -> (T, T) {
        let n = |k: f64| c::<T>(k);
        match self {
            Self::SecondSquared | Self::AMinusChiSlope | Self::BSqASlope | Self::CurvSlope => (n(4.0) * r, n(2.0) * ra),
            Self::ACubedSlope => (n(6.0) * r, n(4.0) * ra),
            Self::ASquaredSlopeCurv | Self::SlopeACubedMinusChi => (n(4.0) * r, n(4.0) * ra),
            Self::A0Prime => (n(4.0) * r, (n(2.0) * ra + r1).min(ra + n(2.0) * r1)),
            Self::A0DoublePrime => (n(4.0) * r, (n(2.0) * ra + r1).min(ra + n(2.0) * r1).min(n(3.0) * r1)),
            Self::ASlope => (n(2.0) * r, n(2.0) * ra),
            Self::BSlope => (n(2.0) * r, r1),
            Self::OneMinusASqSlopeChi | Self::AbSqPrimeChi | Self::ChiFourthSlope => (T::zero(), T::zero()),
        }
    }
}

impl fmt::Display for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Integrand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CATALOG.iter().copied().find(|i| i.id() == s.trim()).ok_or_else(|| Error::UnknownIntegrand(s.to_string()))
    }
}

/// One evaluated catalog integral with its parts.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRecord<T> {
    pub integrand: Integrand,
    pub value: T,
    pub body: T,
    pub left_tail: T,
    pub right_tail: T,
    /// Integrand decay rates used for the tails (zero for compact integrands).
    pub left_rate: T,
    pub right_rate: T,
    pub gauss_points: usize,
}

impl<T: Real> QuadratureRecord<T> {
    pub fn provenance(&self) -> String {
        if self.integrand.compact() {
            format!("int {} over [-1,0], {}-pt Gauss per cell piece", self.integrand, self.gauss_points)
        } else {
            format!(
                "int {}: body {:.6e}, tails {:.3e} (rate {:.6}) / {:.3e} (rate {:.6}), {}-pt Gauss per cell piece",
                self.integrand,
                self.body,
                self.left_tail,
                self.left_rate,
                self.right_tail,
                self.right_rate,
                self.gauss_points
            )
        }
    }
}

/// Fitted rates `(r, ra, r1)` of `B` at `-inf`, `A` at `+inf` and `B - 1` at `+inf`.
pub fn fitted_rates<T: Real>(sol: &HeteroclinicSolution<T>) -> Result<(T, T, T)> {
    let f = &sol.decay_fits;
    let get = |v: Option<T>, name: &str| v.ok_or_else(|| Error::MissingDecayFits(name.to_string()));
    Ok((
        get(f.b_minus.map(|d| d.rate), "B at -inf")?,
        get(f.a_plus.map(|d| d.rate), "A at +inf")?,
        get(f.b_plus.map(|d| d.rate), "B - 1 at +inf")?,
    ))
}

/// Composite Gauss-Legendre rule on the collocation polynomial, cells split at `x = -1` and `x = 0`.
pub fn body_integral<T: Real, F: Fn(T, &[T; 6]) -> T>(sol: &HeteroclinicSolution<T>, points: usize, f: F) -> T {
    let (gx, gw) = gauss_legendre_unit(points);
    let gx: Vec<T> = gx.into_iter().map(c).collect();
    let gw: Vec<T> = gw.into_iter().map(c).collect();
    let tab = Tableau::gauss(sol.mesh.collocation_order);
    let breaks = [-T::one(), T::zero()];
    let mut total = T::zero();
    for i in 0..sol.mesh.cells() {
        let (lo, hi) = (sol.mesh.nodes[i], sol.mesh.nodes[i + 1]);
        let mut cuts = vec![lo];
        cuts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
        cuts.push(hi);
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            let mut acc = T::zero();
            for (t, wt) in gx.iter().zip(&gw) {
                let x = w[0] + *t * len;
                let (u, _) = sol.eval_with(&tab, x);
                acc += *wt * f(x, &u);
            }
            total += acc * len;
        }
    }
    total
}

/// Evaluates one catalog integral over the real line.
pub fn quadrature<T: Real>(sol: &HeteroclinicSolution<T>, integrand: Integrand) -> Result<QuadratureRecord<T>> {
    let g = sol.params.g();
    let points = 2 * sol.mesh.collocation_order;
    let body = body_integral(sol, points, |x, u| integrand.value(x, u, g));
    let (left_rate, right_rate, left_tail, right_tail) = if integrand.compact() {
        (T::zero(), T::zero(), T::zero(), T::zero())
    } else {
        let (r, ra, r1) = fitted_rates(sol)?;
        let (lr, rr) = integrand.tail_rates(r, ra, r1);
        let first = sol.states[0].to_array();
        let last = sol.states[sol.states.len() - 1].to_array();
        let fl = integrand.value(sol.mesh.x_left, &first, g);
        let fr = integrand.value(sol.mesh.x_right, &last, g);
        (lr, rr, fl / lr, fr / rr)
    };
    Ok(QuadratureRecord {
        integrand,
        value: body + left_tail + right_tail,
        body,
        left_tail,
        right_tail,
        left_rate,
        right_rate,
        gauss_points: points,
    })
}

/// Same as [`quadrature`] with the integrand given by its catalog id.
pub fn quadrature_by_id<T: Real>(sol: &HeteroclinicSolution<T>, id: &str) -> Result<QuadratureRecord<T>> {
    quadrature(sol, id.parse()?)
}
