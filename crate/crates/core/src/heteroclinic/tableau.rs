use crate::linalg::{gauss_legendre_unit, lagrange_monomials};
use crate::scalar::{c, Real};

/// Gauss-Legendre collocation tableau with `s` stages (nodal order `2s`).
#[derive(Clone, Debug, PartialEq)]
pub struct Tableau<T> {
    pub s: usize,
    pub c: Vec<T>,
    pub b: Vec<T>,
    /// `a[j][l] = int_0^{c_j} L_l`.
    pub a: Vec<Vec<T>>,
    lagrange: Vec<Vec<f64>>,
}

impl<T: Real> Tableau<T> {
    pub fn gauss(s: usize) -> Self {
        assert!(s >= 1, "at least one collocation point");
        let (nodes, weights) = gauss_legendre_unit(s);
        let lagrange = lagrange_monomials(&nodes);
        let a = nodes.iter().map(|cj| lagrange.iter().map(|l| c(integrate_monomials(l, *cj))).collect()).collect();
        Self { s, c: nodes.iter().map(|v| c(*v)).collect(), b: weights.iter().map(|v| c(*v)).collect(), a, lagrange }
    }

    /// `int_0^theta L_l` for every basis polynomial, used by dense output.
    pub fn dense_weights(&self, theta: T) -> Vec<T> {
        self.lagrange
            .iter()
            .map(|l| {
                let mut acc = T::zero();
                let mut pw = theta;
                for (m, cm) in l.iter().enumerate() {
                    acc += c::<T>(*cm / (m as f64 + 1.0)) * pw;
                    pw *= theta;
                }
                acc
            })
            .collect()
    }

    /// `L_l(theta)`, the derivative of the dense-output weights.
    pub fn basis_values(&self, theta: T) -> Vec<T> {
        self.lagrange
            .iter()
            .map(|l| {
                let mut acc = T::zero();
                let mut pw = T::one();
                for cm in l {
                    acc += c::<T>(*cm) * pw;
                    pw *= theta;
                }
                acc
            })
            .collect()
    }
}

fn integrate_monomials(coef: &[f64], x: f64) -> f64 {
    coef.iter().enumerate().map(|(m, cm)| cm * x.powi(m as i32 + 1) / (m as f64 + 1.0)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplifying_conditions() {
        for s in 1..=5 {
            let t = Tableau::<f64>::gauss(s);
            // C(s): sum_l a_jl c_l^(q-1) = c_j^q / q
            for q in 1..=s {
                for j in 0..s {
                    let lhs: f64 = (0..s).map(|l| t.a[j][l] * t.c[l].powi(q as i32 - 1)).sum();
                    assert!((lhs - t.c[j].powi(q as i32) / q as f64).abs() < 1e-13);
                }
            }
            let w = t.dense_weights(1.0);
            for (wl, bl) in w.iter().zip(&t.b) {
                assert!((wl - bl).abs() < 1e-13);
            }
        }
    }
}
