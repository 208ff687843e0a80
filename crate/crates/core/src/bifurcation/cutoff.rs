//! Smooth cutoff `chi-`: one on `(-inf, -1]`, zero on `[0, inf)`.

use crate::scalar::{c, Real};

/// Degree-9 smoothstep: `S(0) = 0`, `S(1) = 1`, first four derivatives zero at both ends.
const SMOOTHSTEP: [f64; 10] = [0.0, 0.0, 0.0, 0.0, 0.0, 126.0, -420.0, 540.0, -315.0, 70.0];

fn poly_derivative<T: Real>(t: T, k: usize) -> T {
    let mut acc = T::zero();
    for p in (k..SMOOTHSTEP.len()).rev() {
        let mut coef = SMOOTHSTEP[p];
        for j in 0..k {
            coef *= (p - j) as f64;
        }
        acc = acc * t + c(coef);
    }
    acc
}

/// `chi-` and its first four derivatives at `x`.
pub fn cutoff<T: Real>(x: T) -> [T; 5] {
    let mut out = [T::zero(); 5];
    if x <= -T::one() {
        out[0] = T::one();
        return out;
    }
    if x >= T::zero() {
        return out;
    }
    let t = x + T::one();
    out[0] = T::one() - poly_derivative(t, 0);
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        *o = -poly_derivative(t, k);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_flat() {
        for x in [-1.0_f64, 0.0] {
            let inside = cutoff(x + if x < -0.5 { 1e-12 } else { -1e-12 });
            for d in &inside[1..] {
                assert!(d.abs() < 1e-6, "{inside:?}");
            }
        }
        assert_eq!(cutoff(-2.0)[0], 1.0);
        assert_eq!(cutoff(0.5)[0], 0.0);
        assert!((cutoff(-0.5_f64)[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-5;
        for x in [-0.9, -0.6, -0.31, -0.05] {
            let lo = cutoff::<f64>(x - h);
            let hi = cutoff::<f64>(x + h);
            let mid = cutoff::<f64>(x);
            for k in 0..4 {
                let fd = (hi[k] - lo[k]) / (2.0 * h);
                assert!((fd - mid[k + 1]).abs() < 1e-5 * (1.0 + mid[k + 1].abs()), "x {x} k {k}");
            }
        }
    }
}
