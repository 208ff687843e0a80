//! Reduced and perturbed vector fields, the reverser `S1` and the first integral `W_g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Cubic normal-form coefficients of the perturbed system.
///
/// `d[j - 1]` holds `d_j` (j = 1..8) and `c[j]` holds `c_j` (j = 0..11).
/// The `Default` values are non-physical test values, not fluid data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalFormCoeffs<T> {
    pub d: [T; 8],
    pub c: [T; 12],
    pub sigma0: T,
    pub sigma1: T,
    pub sigma2: T,
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
    pub delta_c: T,
    /// Linear-in-z coefficient of the bifurcation equation; an input, not computed.
    pub a4: T,
}

impl<T: Real> NormalFormCoeffs<T> {
    pub fn zero() -> Self {
        Self {
            d: [T::zero(); 8],
            c: [T::zero(); 12],
            sigma0: T::zero(),
            sigma1: T::zero(),
            sigma2: T::zero(),
            alpha: T::zero(),
            beta: T::zero(),
            gamma: T::zero(),
            delta_c: T::zero(),
            a4: T::zero(),
        }
    }

    pub fn d(&self, j: usize) -> T {
        self.d[j - 1]
    }

    /// Fills `sigma1`, `sigma2` with the values implied by `alpha`, `beta`, `delta_c`.
    ///
    /// Expanding the two polar equations of the periodic orbit gives
    /// `sigma1 = alpha + beta - delta_c/2` and `sigma2 = -(alpha+beta)(alpha+beta-delta_c)`.
    pub fn with_consistent_sigmas(mut self) -> Self {
        let s = self.alpha + self.beta;
        self.sigma1 = s - self.delta_c * c(0.5);
        self.sigma2 = -s * (s - self.delta_c);
        self
    }

    pub fn all_finite(&self) -> bool {
        self.d.iter().chain(self.c.iter()).all(|v| v.is_finite())
            && [self.sigma0, self.sigma1, self.sigma2, self.alpha, self.beta, self.gamma, self.delta_c, self.a4]
                .iter()
                .all(|v| v.is_finite())
    }
}

impl<T: Real> Default for NormalFormCoeffs<T> {
    fn default() -> Self {
        let mut k = Self::zero();
        k.d[1] = c(-0.5);
        k.d[3] = c(0.5);
        k.c[9] = T::one();
        k.sigma0 = T::one();
        k
    }
}

/// Scalar parameters. `g = 1 + delta^2` is always derived, never set independently.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams<T> {
    epsilon: T,
    delta: T,
    g: T,
    pub k_minus: T,
    pub omega_tilde_plus: T,
    pub coeffs: NormalFormCoeffs<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn new(epsilon: T, delta: T) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > T::zero()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(delta.is_finite() && delta > T::zero()) {
            return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
        }
        Ok(Self {
            epsilon,
            delta,
            g: T::one() + delta * delta,
            k_minus: T::zero(),
            omega_tilde_plus: T::zero(),
            coeffs: NormalFormCoeffs::zero(),
        })
    }

    pub fn from_g(epsilon: T, g: T) -> Result<Self> {
        if !(g.is_finite() && g > T::one()) {
            return Err(Error::InvalidParameter(format!("g must be > 1, got {g}")));
        }
        let mut p = Self::new(epsilon, (g - T::one()).sqrt())?;
        p.g = g;
        Ok(p)
    }

    pub fn with_coeffs(mut self, coeffs: NormalFormCoeffs<T>) -> Self {
        self.coeffs = coeffs;
        self
    }

    pub fn with_k_minus(mut self, k_minus: T) -> Self {
        self.k_minus = k_minus;
        self
    }

    pub fn with_omega_tilde_plus(mut self, w: T) -> Self {
        self.omega_tilde_plus = w;
        self
    }

    /// Same coefficients and offsets, new `(epsilon, delta)`.
    pub fn with_eps_delta(&self, epsilon: T, delta: T) -> Result<Self> {
        let mut p = Self::new(epsilon, delta)?;
        p.k_minus = self.k_minus;
        p.omega_tilde_plus = self.omega_tilde_plus;
        p.coeffs = self.coeffs;
        Ok(p)
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn g(&self) -> T {
        self.g
    }

    /// Range check for solver entry points. Returns warnings for small but accepted `epsilon`.
    pub fn check_solver_range(&self) -> Result<Vec<String>> {
        let third = T::one() / c(3.0);
        if self.delta < third - c(1e-12) || self.delta > T::one() {
            return Err(Error::Precondition(format!("delta = {} outside [1/3, 1]", self.delta)));
        }
        if self.epsilon > c(0.2) {
            return Err(Error::Precondition(format!("epsilon = {} above 0.2", self.epsilon)));
        }
        if !self.coeffs.all_finite() {
            return Err(Error::InvalidParameter("non-finite normal-form coefficient".into()));
        }
        let mut warnings = Vec::new();
        if self.epsilon < c(0.02) {
            warnings.push(format!("epsilon = {} below 0.02: mesh grows like 1/epsilon", self.epsilon));
        }
        Ok(warnings)
    }
}

/// Point of the 6-dimensional reduced phase space.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReducedState<T> {
    pub a0: T,
    pub a1: T,
    pub a2: T,
    pub a3: T,
    pub b0: T,
    pub b1: T,
}

impl<T: Real> ReducedState<T> {
    pub fn from_array(u: [T; 6]) -> Self {
        Self { a0: u[0], a1: u[1], a2: u[2], a3: u[3], b0: u[4], b1: u[5] }
    }

    pub fn to_array(&self) -> [T; 6] {
        [self.a0, self.a1, self.a2, self.a3, self.b0, self.b1]
    }

    /// Orthogonal rolls, `A = 1`, `B = 0`.
    pub fn m_minus() -> Self {
        Self::from_array(M_MINUS_RAW.map(c))
    }

    /// Parallel rolls, `A = 0`, `B = 1`.
    pub fn m_plus() -> Self {
        Self::from_array(M_PLUS_RAW.map(c))
    }
}

const M_MINUS_RAW: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
const M_PLUS_RAW: [f64; 6] = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];

/// Point of the 8-dimensional perturbed phase space, `B0 e^{-i eps w x} = C + iD`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PerturbedState<T> {
    pub a0: T,
    pub a1: T,
    pub a2: T,
    pub a3: T,
    pub c0: T,
    pub c1: T,
    pub d0: T,
    pub d1: T,
}

impl<T: Real> PerturbedState<T> {
    pub fn from_array(u: [T; 8]) -> Self {
        Self { a0: u[0], a1: u[1], a2: u[2], a3: u[3], c0: u[4], c1: u[5], d0: u[6], d1: u[7] }
    }

    pub fn to_array(&self) -> [T; 8] {
        [self.a0, self.a1, self.a2, self.a3, self.c0, self.c1, self.d0, self.d1]
    }
}

pub const REDUCED_REVERSER: [i8; 6] = [1, -1, 1, -1, 1, -1];
pub const PERTURBED_REVERSER: [i8; 8] = [1, -1, 1, -1, 1, -1, -1, 1];

/// The reversibility involution `S1`.
pub trait Reversible: Sized {
    fn reversed(&self) -> Self;
}

fn flip<T: Real, const N: usize>(u: [T; N], signs: &[i8; N]) -> [T; N] {
    let mut out = u;
    for (v, s) in out.iter_mut().zip(signs) {
        if *s < 0 {
            *v = -*v;
        }
    }
    out
}

impl<T: Real> Reversible for ReducedState<T> {
    fn reversed(&self) -> Self {
        Self::from_array(flip(self.to_array(), &REDUCED_REVERSER))
    }
}

impl<T: Real> Reversible for PerturbedState<T> {
    fn reversed(&self) -> Self {
        Self::from_array(flip(self.to_array(), &PERTURBED_REVERSER))
    }
}

pub fn apply_reverser<S: Reversible>(s: &S) -> S {
    s.reversed()
}

/// Reduced field on a raw state vector.
#[inline]
pub fn reduced_field<T: Real>(u: &[T; 6], p: &ModelParams<T>) -> [T; 6] {
    let [a0, a1, a2, a3, b0, b1] = *u;
    let e2 = p.epsilon * p.epsilon;
    [a1, a2, a3, a0 * (T::one() - a0 * a0 - p.g * b0 * b0), b1, e2 * b0 * (-T::one() + p.g * a0 * a0 + b0 * b0)]
}

/// Jacobian of [`reduced_field`], row-major.
pub fn reduced_jacobian<T: Real>(u: &[T; 6], p: &ModelParams<T>) -> [[T; 6]; 6] {
    let [a0, _, _, _, b0, _] = *u;
    let (z, o) = (T::zero(), T::one());
    let two: T = c(2.0);
    let three: T = c(3.0);
    let e2 = p.epsilon * p.epsilon;
    let g = p.g;
    let mut j = [[z; 6]; 6];
    j[0][1] = o;
    j[1][2] = o;
    j[2][3] = o;
    j[3][0] = o - three * a0 * a0 - g * b0 * b0;
    j[3][4] = -two * g * a0 * b0;
    j[4][5] = o;
    j[5][0] = two * e2 * g * a0 * b0;
    j[5][4] = e2 * (-o + g * a0 * a0 + three * b0 * b0);
    j
}

pub fn reduced_rhs<T: Real>(s: &ReducedState<T>, p: &ModelParams<T>) -> ReducedState<T> {
    ReducedState::from_array(reduced_field(&s.to_array(), p))
}

/// `W_g`, constant along orbits of the reduced field and zero at both `M-` and `M+`.
pub fn first_integral<T: Real>(s: &ReducedState<T>, p: &ModelParams<T>) -> T {
    first_integral_raw(&s.to_array(), p)
}

pub fn first_integral_raw<T: Real>(u: &[T; 6], p: &ModelParams<T>) -> T {
    let [a0, a1, a2, a3, b0, b1] = *u;
    let e2 = p.epsilon * p.epsilon;
    let half: T = c(0.5);
    let q = a0 * a0 + b0 * b0 - T::one();
    e2 * (c::<T>(2.0) * a1 * a3 - a2 * a2) - b1 * b1 + half * e2 * q * q + e2 * (p.g - T::one()) * a0 * a0 * b0 * b0
}

pub fn first_integral_gradient<T: Real>(u: &[T; 6], p: &ModelParams<T>) -> [T; 6] {
    let [a0, a1, a2, a3, b0, b1] = *u;
    let e2 = p.epsilon * p.epsilon;
    let two: T = c(2.0);
    let q = a0 * a0 + b0 * b0 - T::one();
    let gm1 = p.g - T::one();
    [
        two * e2 * a0 * (q + gm1 * b0 * b0),
        two * e2 * a3,
        -two * e2 * a2,
        two * e2 * a1,
        two * e2 * b0 * (q + gm1 * a0 * a0),
        -two * b1,
    ]
}

/// Autonomous cubic normal form of the perturbed system (no hook).
pub fn perturbed_field<T: Real>(u: &[T; 8], p: &ModelParams<T>) -> [T; 8] {
    let [a, a1, a2, a3, cc, c1, dd, d1] = *u;
    let k = &p.coeffs;
    let e = p.epsilon;
    let e2 = e * e;
    let e3 = e2 * e;
    let e4 = e2 * e2;
    let e5 = e4 * e;
    let g = p.g;
    let km = p.k_minus;
    let w = p.omega_tilde_plus;
    let one = T::one();
    let two: T = c(2.0);
    let quarter: T = c(0.25);

    let s2 = cc * cc + dd * dd;
    let wr = cc * d1 - dd * c1;

    let f0 = k.d(1) * e * a * wr
        + k.sigma0 * e2 * km * a * a * a
        + k.d(2) * e2 * a * a1 * a1
        + k.d(3) * e2 * a2
        + k.d(4) * e2 * a * a * a2
        + k.d(5) * e2 * a2 * s2
        + k.d(6) * e2 * a * (c1 * c1 + d1 * d1)
        + k.d(7) * e2 * a1 * (cc * c1 + dd * d1)
        + k.d(8) * e3 * a2 * wr;

    let cf = &k.c;
    let mut gr = T::zero();
    let mut gi = T::zero();
    // i e^3 B' [c0 + c1 A^2 + c2 |B|^2]
    let p1 = cf[0] + cf[1] * a * a + cf[2] * s2;
    gr -= e3 * d1 * p1;
    gi += e3 * c1 * p1;
    // e^3 c3 B W
    gr += e3 * cf[3] * cc * wr;
    gi += e3 * cf[3] * dd * wr;
    // i e^3 c9 B A A'
    gr -= e3 * cf[9] * dd * a * a1;
    gi += e3 * cf[9] * cc * a * a1;
    // i e^4 c4 B' W
    gr -= e4 * cf[4] * d1 * wr;
    gi += e4 * cf[4] * c1 * wr;
    // e^4 c5 A A'' B
    gr += e4 * cf[5] * a * a2 * cc;
    gi += e4 * cf[5] * a * a2 * dd;
    // e^4 [c6 A'^2 B + c7 A A' B']
    gr += e4 * (cf[6] * a1 * a1 * cc + cf[7] * a * a1 * c1);
    gi += e4 * (cf[6] * a1 * a1 * dd + cf[7] * a * a1 * d1);
    // i e^5 B' (c7 A A'' + c10 A'^2)
    let p7 = cf[7] * a * a2 + cf[10] * a1 * a1;
    gr -= e5 * d1 * p7;
    gi += e5 * c1 * p7;
    // i e^5 B (c8 A A''' + c11 A' A'')
    let p8 = cf[8] * a * a3 + cf[11] * a1 * a2;
    gr -= e5 * dd * p8;
    gi += e5 * cc * p8;

    let bracket = -one + w * w + g * a * a + s2;
    [
        a1,
        a2,
        a3,
        km * a2 + a * (one - quarter * km * km - a * a - g * s2) + f0,
        c1,
        two * e * w * d1 + e2 * cc * bracket + gr,
        d1,
        -two * e * w * c1 + e2 * dd * bracket + gi,
    ]
}

pub fn perturbed_rhs<T: Real>(_x: T, s: &PerturbedState<T>, p: &ModelParams<T>) -> PerturbedState<T> {
    PerturbedState::from_array(perturbed_field(&s.to_array(), p))
}

pub fn perturbed_rhs_with_hook<T: Real>(
    x: T,
    s: &PerturbedState<T>,
    p: &ModelParams<T>,
    hook: &PerturbationHook<T>,
) -> PerturbedState<T> {
    let u = s.to_array();
    let mut f = perturbed_field(&u, p);
    let h = hook.evaluate(x, &u, p);
    for (fi, hi) in f.iter_mut().zip(h) {
        *fi += hi;
    }
    PerturbedState::from_array(f)
}

const HOOK_MODES: usize = 4;

/// Seeded non-autonomous remainder probe, periodic in `x/(2 eps)` and bounded by the
/// remainder envelopes.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationHook<T> {
    scale: T,
    seed: u64,
    modes: [[(T, T); HOOK_MODES]; 3],
}

impl<T: Real> PerturbationHook<T> {
    pub fn new(envelope_scale: T, seed: u64) -> Result<Self> {
        if !(envelope_scale.is_finite() && envelope_scale >= T::zero()) {
            return Err(Error::InvalidParameter(format!("envelope_scale must be >= 0, got {envelope_scale}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = [[(T::zero(), T::zero()); HOOK_MODES]; 3];
        for slot in modes.iter_mut() {
            for m in slot.iter_mut() {
                *m = (c(rng.gen_range(-1.0..=1.0)), c(rng.gen_range(-1.0..=1.0)));
            }
        }
        Ok(Self { scale: envelope_scale, seed, modes })
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Trigonometric series normalized into [-1, 1].
    fn profile(&self, slot: usize, theta: T) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for (k, (ak, bk)) in self.modes[slot].iter().enumerate() {
            let kt = crate::scalar::cu::<T>(k + 1) * theta;
            num += *ak * kt.cos() + *bk * kt.sin();
            den += ak.abs() + bk.abs();
        }
        if den > T::zero() {
            (num / den).max(-T::one()).min(T::one())
        } else {
            T::zero()
        }
    }

    /// Additive term; only the `A''''`, `C''` and `D''` slots are nonzero.
    pub fn evaluate(&self, x: T, u: &[T; 8], p: &ModelParams<T>) -> [T; 8] {
        let mut out = [T::zero(); 8];
        if self.scale == T::zero() {
            return out;
        }
        let e = p.epsilon;
        let x2: T = u[..4].iter().map(|v| *v * *v).sum();
        let y2: T = u[4..].iter().map(|v| *v * *v).sum();
        let r4 = (x2 + y2) * (x2 + y2);
        let theta = x / (c::<T>(2.0) * e);
        let e4 = e.powi(4);
        let e6 = e.powi(6);
        // odd in X so that the A-slot keeps the tau_pi equivariance
        out[3] = self.scale * e4 * u[0] * r4 * self.profile(0, theta);
        let env_b = self.scale * e6 * (x2 + y2.sqrt()) * r4 * c(0.5);
        out[5] = env_b * self.profile(1, theta);
        out[7] = env_b * self.profile(2, theta);
        out
    }

    /// Envelope bounds `(A-slot, |g_r1| + |g_i1|)` at a state.
    pub fn envelopes(&self, u: &[T; 8], p: &ModelParams<T>) -> (T, T) {
        let e = p.epsilon;
        let x2: T = u[..4].iter().map(|v| *v * *v).sum();
        let y2: T = u[4..].iter().map(|v| *v * *v).sum();
        let r4 = (x2 + y2) * (x2 + y2);
        (self.scale * e.powi(4) * x2.sqrt() * r4, self.scale * e.powi(6) * (x2 + y2.sqrt()) * r4)
    }
}
