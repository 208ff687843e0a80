//! Leading-order solutions of the bifurcation equation.

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{c, Real};

use super::BifurcationCoefficients;

/// One member of the wall family.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WallFamilySample<T> {
    pub phi: T,
    pub z: T,
    pub k_minus: T,
    /// Bound `eps^2` on `|k+|`; the family formulas do not resolve `k+` further.
    pub k_plus: T,
    /// Left side of the bifurcation equation at `(z, k_minus)`.
    pub residual: T,
}

/// Left side of the bifurcation equation.
pub fn bifurcation_residual<T: Real>(bc: &BifurcationCoefficients<T>, eps: T, z: T, k: T) -> T {
    let e2 = eps * eps;
    bc.a0 * z * z
        + bc.a1_prime * k * z
        + bc.a2_prime * k * k / c(4.0)
        + bc.a3_prime * e2 * k
        + bc.a4 * eps.powf(c(2.2)) * z
        + bc.a5 * eps.powf(c(2.8))
}

/// Family formulas at one `phi`, without range or discriminant checks.
pub fn family_sample<T: Real>(
    bc: &BifurcationCoefficients<T>,
    p: &ModelParams<T>,
    phi: T,
) -> Result<WallFamilySample<T>> {
    let eps = p.epsilon();
    let scale = eps.powf(c(1.4));
    let two = c::<T>(2.0);
    let three = c::<T>(3.0);
    let a5 = bc.a5;
    let (z, k) = if a5 < T::zero() {
        let z = (-three * a5 / two).sqrt() * scale / bc.a1_prime * phi.cosh();
        let k = two * (-two * a5 / three).sqrt() * scale * (-phi).exp();
        (z, k)
    } else if a5 > T::zero() {
        let z = (three * a5 / two).sqrt() * scale / bc.a1_prime * phi.sinh();
        let k = -two * (two * a5 / three).sqrt() * scale * (-phi).exp();
        (z, k)
    } else {
        return Err(Error::DegenerateFamily);
    };
    Ok(WallFamilySample { phi, z, k_minus: k, k_plus: eps * eps, residual: bifurcation_residual(bc, eps, z, k) })
}

/// Largest admissible `|phi|`, from `exp|phi| <= eps^(-2/5)`.
pub fn phi_limit<T: Real>(eps: T) -> T {
    -c::<T>(0.4) * eps.ln()
}

/// The wall family on a grid of `phi`, with every precondition checked.
pub fn wall_family<T: Real>(
    bc: &BifurcationCoefficients<T>,
    p: &ModelParams<T>,
    phis: &[T],
) -> Result<Vec<WallFamilySample<T>>> {
    if bc.a5 == T::zero() {
        return Err(Error::DegenerateFamily);
    }
    if !(bc.discriminant > T::zero()) {
        return Err(Error::Precondition(format!("Delta = {:e} is not positive", bc.discriminant)));
    }
    let lim = phi_limit(p.epsilon()) * (T::one() + c(1e-12));
    if let Some(phi) = phis.iter().find(|phi| !(phi.abs() <= lim)) {
        return Err(Error::Domain(format!("phi = {phi} violates exp|phi| <= eps^(-2/5) (|phi| <= {lim})")));
    }
    phis.iter().map(|phi| family_sample(bc, p, *phi)).collect()
}

/// Outcome of the equal-wavenumber case `k- = k+ = O(eps^2)`.
#[derive(Clone, Debug, PartialEq)]
pub enum EqualWavenumber<T> {
    Solution(T),
    Absent(String),
}

/// `z = eps sqrt((d4 - d2)/3)` when `d4 > d2`.
pub fn equal_wavenumber_solution<T: Real>(bc: &BifurcationCoefficients<T>, p: &ModelParams<T>) -> EqualWavenumber<T> {
    let d = -bc.d2_minus_d4;
    if d > T::zero() {
        EqualWavenumber::Solution(p.epsilon() * (d / c(3.0)).sqrt())
    } else {
        EqualWavenumber::Absent(format!("d4 - d2 = {d} is not positive"))
    }
}

/// `(gamma1, gamma2)` with `gamma1 = 2 sqrt(2|a5|/3)` and `gamma2 = eps^(1/5)/(2 a1) sqrt(3|a5|/2)`.
pub fn gamma_constants<T: Real>(bc: &BifurcationCoefficients<T>, p: &ModelParams<T>) -> Result<(T, T)> {
    if bc.a1 == T::zero() || bc.a5 == T::zero() {
        return Err(Error::Precondition(format!("gamma constants need a1, a5 != 0 (a1 = {}, a5 = {})", bc.a1, bc.a5)));
    }
    let two = c::<T>(2.0);
    let three = c::<T>(3.0);
    let a5 = bc.a5.abs();
    let g1 = two * (two * a5 / three).sqrt();
    let g2 = p.epsilon().powf(c(0.2)) / (two * bc.a1) * (three * a5 / two).sqrt();
    Ok((g1, g2))
}
