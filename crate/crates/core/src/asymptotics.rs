//! Boundary states at both infinities and the eigenstructure of their linearizations.

use std::ops::Range;

use num_complex::Complex;

use crate::error::{Error, IterationRecord, Result};
use crate::model::{perturbed_field, ModelParams};
use crate::scalar::{c, cu, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Expansion,
    Newton,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Expansion => "expansion",
            Mode::Newton => "newton",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumMinus<T> {
    pub a0_minus: T,
    pub b0_minus: T,
    pub omega_tilde_minus_sq: T,
    pub method: Mode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicPlus<T> {
    pub r0: T,
    pub r1: T,
    pub k_plus: T,
    /// Leading frequency `(1 + eps^2 k+)/(2 eps)`; the higher Fourier corrections are not computed.
    pub omega: T,
    pub method: Mode,
}

const NEWTON_MAX_ITER: usize = 60;

/// Rest state at `-inf`.
pub fn equilibrium_minus<T: Real>(p: &ModelParams<T>, mode: Mode) -> Result<EquilibriumMinus<T>> {
    let k = p.k_minus;
    if !(k.abs() < T::one()) {
        return Err(Error::Precondition(format!("|k_minus| = {} must be < 1", k.abs())));
    }
    let e2 = p.epsilon() * p.epsilon();
    let quarter: T = c(0.25);
    let base = T::one() - quarter * k * k;
    let a2_exp = base + p.coeffs.sigma0 * e2 * k;
    if a2_exp <= T::zero() {
        return Err(Error::Domain(format!("A0^2 = {a2_exp} from the expansion is not positive")));
    }
    let (a0, b0) = match mode {
        Mode::Expansion => (a2_exp.sqrt(), T::zero()),
        Mode::Newton => newton_equilibrium(p, base.sqrt())?,
    };
    Ok(EquilibriumMinus {
        a0_minus: a0,
        b0_minus: b0,
        omega_tilde_minus_sq: c::<T>(2.0) * (T::one() - a0),
        method: mode,
    })
}

fn newton_equilibrium<T: Real>(p: &ModelParams<T>, a_start: T) -> Result<(T, T)> {
    let residual = |a: T, cc: T| {
        let u = [a, T::zero(), T::zero(), T::zero(), cc, T::zero(), T::zero(), T::zero()];
        let f = perturbed_field(&u, p);
        (f[3], f[5])
    };
    let e2 = p.epsilon() * p.epsilon();
    let k = p.k_minus;
    let g = p.g();
    let w2 = p.omega_tilde_plus * p.omega_tilde_plus;
    let three: T = c(3.0);
    let two: T = c(2.0);
    let quarter: T = c(0.25);
    let tol: T = T::epsilon() * c(16.0);
    let (mut a, mut cc) = (a_start, T::zero());
    let mut trace = Vec::new();
    for it in 0..NEWTON_MAX_ITER {
        let (f1, f2) = residual(a, cc);
        let scale = (f1.abs() + f2.abs() / e2).as_f64();
        trace.push(IterationRecord { iteration: it, residual: scale, step_length: 1.0 });
        if f1.abs() <= tol && f2.abs() <= tol * e2 {
            return Ok((a, cc));
        }
        let j11 = T::one() - quarter * k * k - three * a * a - g * cc * cc + three * p.coeffs.sigma0 * e2 * k * a * a;
        let j12 = -two * g * a * cc;
        let j21 = two * e2 * g * a * cc;
        let j22 = e2 * (-T::one() + w2 + g * a * a + three * cc * cc);
        let det = j11 * j22 - j12 * j21;
        if det == T::zero() || !det.is_finite() {
            break;
        }
        a -= (f1 * j22 - f2 * j12) / det;
        cc -= (j11 * f2 - j21 * f1) / det;
    }
    let (f1, f2) = residual(a, cc);
    Err(Error::NonConvergence { iterations: NEWTON_MAX_ITER, residual: (f1.abs() + f2.abs()).as_f64(), trace })
}

/// Periodic orbit (circle of radius `r0`) at `+inf`.
pub fn periodic_plus<T: Real>(p: &ModelParams<T>, k_plus: T, mode: Mode) -> Result<PeriodicPlus<T>> {
    if !(k_plus.abs() < T::one()) {
        return Err(Error::Precondition(format!("|k_plus| = {} must be < 1", k_plus.abs())));
    }
    let e = p.epsilon();
    let e2 = e * e;
    let half: T = c(0.5);
    let k = &p.coeffs;
    let r0sq = T::one() - c::<T>(0.25) * k_plus * k_plus + k.sigma1 * e2 * k_plus + k.sigma2 * e2 * e2;
    if r0sq <= T::zero() {
        return Err(Error::Domain(format!("r0^2 = {r0sq} from the expansion is not positive")));
    }
    let r0 = r0sq.sqrt();
    let r1 = half * e * r0 * k_plus;
    let q = -T::one() + r0 * r0 + e * k.delta_c * r0 * r1;
    if q > c(1e-12) {
        return Err(Error::Domain(format!("Q = {q} > 0 at the candidate: no real r1/r0")));
    }
    let (r0, r1) = match mode {
        Mode::Expansion => (r0, r1),
        Mode::Newton => newton_periodic(p, k_plus, r0, r1)?,
    };
    Ok(PeriodicPlus { r0, r1, k_plus, omega: (T::one() + e2 * k_plus) / (c::<T>(2.0) * e), method: mode })
}

fn newton_periodic<T: Real>(p: &ModelParams<T>, kp: T, r0: T, r1: T) -> Result<(T, T)> {
    let e = p.epsilon();
    let e2 = e * e;
    let e3 = e2 * e;
    let e4 = e2 * e2;
    let k = &p.coeffs;
    let half: T = c(0.5);
    let two: T = c(2.0);
    let f = |r0: T, r1: T| {
        let rho = r1 / r0;
        let pp = k.alpha + k.beta * r0 * r0 + e * k.gamma * r0 * r1;
        let qq = -T::one() + r0 * r0 + e * k.delta_c * r0 * r1;
        (half * e * kp - rho - e3 * pp, rho * rho + e2 * qq)
    };
    let tol: T = T::epsilon() * c(16.0);
    let (mut r0, mut r1) = (r0, r1);
    let mut trace = Vec::new();
    for it in 0..NEWTON_MAX_ITER {
        let (f1, f2) = f(r0, r1);
        trace.push(IterationRecord {
            iteration: it,
            residual: (f1.abs() / e + f2.abs() / e2).as_f64(),
            step_length: 1.0,
        });
        if f1.abs() <= tol * e && f2.abs() <= tol * e2 {
            let qq = -T::one() + r0 * r0 + e * k.delta_c * r0 * r1;
            if qq > c(1e-12) {
                return Err(Error::Domain(format!("Q = {qq} > 0 at the solution")));
            }
            return Ok((r0, r1));
        }
        let j11 = r1 / (r0 * r0) - e3 * (two * k.beta * r0 + e * k.gamma * r1);
        let j12 = -T::one() / r0 - e4 * k.gamma * r0;
        let j21 = -two * r1 * r1 / (r0 * r0 * r0) + e2 * (two * r0 + e * k.delta_c * r1);
        let j22 = two * r1 / (r0 * r0) + e3 * k.delta_c * r0;
        let det = j11 * j22 - j12 * j21;
        if det == T::zero() || !det.is_finite() {
            break;
        }
        r0 -= (f1 * j22 - f2 * j12) / det;
        r1 -= (j11 * f2 - j21 * f1) / det;
        if !(r0 > T::zero()) {
            break;
        }
    }
    let (f1, f2) = f(r0, r1);
    Err(Error::NonConvergence { iterations: NEWTON_MAX_ITER, residual: (f1.abs() + f2.abs()).as_f64(), trace })
}

/// Linearization of the reduced system at one of its rest states.
///
/// Roots are ordered A-block first (four), then B-block (two); `basis[i]` and
/// `left[i]` are right and left eigenvectors for root `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenStructure<T> {
    pub a_block_roots: [Complex<T>; 4],
    pub b_block_roots: [Complex<T>; 2],
    pub unstable_dim: usize,
    pub stable_dim: usize,
    pub center_dim: usize,
    pub basis: Vec<[Complex<T>; 6]>,
    pub left: Vec<[Complex<T>; 6]>,
}

pub const CENTER_THRESHOLD: f64 = 1e-12;

impl<T: Real> EigenStructure<T> {
    fn build(k: T, a_const: T, b_sq: T) -> Result<Self> {
        let two: T = c(2.0);
        let disc = Complex::new(k * k + c::<T>(4.0) * a_const, T::zero()).sqrt();
        let kc = Complex::new(k, T::zero());
        let mu1 = (kc + disc) / two;
        let mu2 = (kc - disc) / two;
        let mut a_roots = [mu1.sqrt(), -mu1.sqrt(), mu2.sqrt(), -mu2.sqrt()];
        a_roots.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap_or(std::cmp::Ordering::Equal));
        let bs = Complex::new(b_sq, T::zero()).sqrt();
        let mut b_roots = [bs, -bs];
        b_roots.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap_or(std::cmp::Ordering::Equal));

        let z = Complex::new(T::zero(), T::zero());
        let o = Complex::new(T::one(), T::zero());
        let mut basis = Vec::with_capacity(6);
        let mut left = Vec::with_capacity(6);
        for l in a_roots {
            basis.push([o, l, l * l, l * l * l, z, z]);
            left.push([l * l * l - l * k, l * l - k, l, o, z, z]);
        }
        for l in b_roots {
            basis.push([z, z, z, z, o, l]);
            left.push([z, z, z, z, l, o]);
        }
        let thr: T = c(CENTER_THRESHOLD);
        let mut unstable = 0;
        let mut stable = 0;
        for l in a_roots.iter().chain(b_roots.iter()) {
            if l.re > thr {
                unstable += 1;
            } else if l.re < -thr {
                stable += 1;
            } else {
                return Err(Error::CenterDirection(format!("{} + {}i", l.re, l.im)));
            }
        }
        Ok(Self {
            a_block_roots: a_roots,
            b_block_roots: b_roots,
            unstable_dim: unstable,
            stable_dim: stable,
            center_dim: 0,
            basis,
            left,
        })
    }

    pub fn roots(&self) -> Vec<Complex<T>> {
        self.a_block_roots.iter().chain(self.b_block_roots.iter()).copied().collect()
    }

    /// Orthonormal real rows spanning the left eigenvectors of the stable roots.
    pub fn stable_projection(&self) -> Vec<[T; 6]> {
        self.projection(|l| l.re < T::zero())
    }

    pub fn unstable_projection(&self) -> Vec<[T; 6]> {
        self.projection(|l| l.re > T::zero())
    }

    fn projection(&self, pick: impl Fn(&Complex<T>) -> bool) -> Vec<[T; 6]> {
        let roots = self.roots();
        let mut rows: Vec<[T; 6]> = Vec::new();
        for (i, l) in roots.iter().enumerate() {
            if !pick(l) || l.im < T::zero() {
                continue;
            }
            rows.push(self.left[i].map(|z| z.re));
            if l.im > T::zero() {
                rows.push(self.left[i].map(|z| z.im));
            }
        }
        let mut out: Vec<[T; 6]> = Vec::new();
        for mut r in rows {
            for q in &out {
                let d: T = r.iter().zip(q).map(|(a, b)| *a * *b).sum();
                for (a, b) in r.iter_mut().zip(q) {
                    *a -= d * *b;
                }
            }
            let n: T = r.iter().map(|a| *a * *a).sum::<T>().sqrt();
            out.push(r.map(|a| a / n));
        }
        out
    }
}

/// Eigenstructure at `M-`; the A-quartic is `l^4 = k l^2 + (1 - k^2/4 - 3 A0^2)`.
pub fn linearize_at_minus<T: Real>(p: &ModelParams<T>) -> Result<EigenStructure<T>> {
    let eq = equilibrium_minus(p, Mode::Expansion)?;
    let a0 = eq.a0_minus;
    let k = p.k_minus;
    let e2 = p.epsilon() * p.epsilon();
    let a_const = T::one() - c::<T>(0.25) * k * k - c::<T>(3.0) * a0 * a0;
    let b_sq = e2 * (-T::one() + p.g() * a0 * a0);
    EigenStructure::build(k, a_const, b_sq)
}

/// Eigenstructure at `M+` (B = 1), the B-block acting on `B - 1`.
pub fn linearize_at_plus<T: Real>(p: &ModelParams<T>) -> Result<EigenStructure<T>> {
    let k = p.k_minus;
    let e2 = p.epsilon() * p.epsilon();
    let a_const = T::one() - c::<T>(0.25) * k * k - p.g();
    EigenStructure::build(k, a_const, c::<T>(2.0) * e2)
}

/// Least-squares line through `(x, ln v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    pub rms: T,
    pub start: usize,
    pub end: usize,
}

pub const MIN_FIT_POINTS: usize = 8;

pub fn decay_rate_fit<T: Real>(xs: &[T], values: &[T], window: Range<usize>) -> Result<LinearFit<T>> {
    if xs.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: values.len() });
    }
    if window.end > xs.len() || window.start >= window.end || window.len() < MIN_FIT_POINTS {
        return Err(Error::Precondition(format!(
            "fit window {:?} needs at least {MIN_FIT_POINTS} points inside 0..{}",
            window,
            xs.len()
        )));
    }
    let m = cu::<T>(window.len());
    let mut sx = T::zero();
    let mut sy = T::zero();
    for i in window.clone() {
        if !(values[i] > T::zero()) {
            return Err(Error::Domain(format!("non-positive value {} at index {i}", values[i])));
        }
        sx += xs[i];
        sy += values[i].ln();
    }
    let mx = sx / m;
    let my = sy / m;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for i in window.clone() {
        let dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (values[i].ln() - my);
    }
    if !(sxx > T::zero()) {
        return Err(Error::Precondition("degenerate fit window (all x equal)".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss = T::zero();
    for i in window.clone() {
        let r = values[i].ln() - (intercept + slope * xs[i]);
        ss += r * r;
    }
    Ok(LinearFit { slope, intercept, rms: (ss / m).sqrt(), start: window.start, end: window.end })
}
