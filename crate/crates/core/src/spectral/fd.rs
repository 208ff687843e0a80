use crate::scalar::{c, cu, Real};

/// Finite-difference weights at `z` for derivatives `0..=m` on arbitrary nodes (Fornberg's recursion).
///
/// `out[k][j]` weights `f(x[j])` in the `k`-th derivative.
pub fn fornberg<T: Real>(z: T, x: &[T], m: usize) -> Vec<Vec<T>> {
    let n = x.len();
    let mut w = vec![vec![T::zero(); n]; m + 1];
    if n == 0 {
        return w;
    }
    let mut c1 = T::one();
    let mut c4 = x[0] - z;
    w[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (cu::<T>(k) * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - cu::<T>(k) * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// Start of a `width`-point window centred on `i`, shifted to stay inside `0..n`.
pub fn window(i: usize, width: usize, n: usize) -> usize {
    let half = width / 2;
    i.saturating_sub(half).min(n - width)
}

/// Weights of the `d`-th derivative at node `i` with a `width`-point stencil.
pub fn stencil<T: Real>(nodes: &[T], i: usize, d: usize, width: usize) -> (usize, Vec<T>) {
    let s = window(i, width, nodes.len());
    let w = fornberg(nodes[i], &nodes[s..s + width], d);
    (s, w[d].clone())
}

/// Trapezoid weights.
pub fn trapezoid_weights<T: Real>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let mut w = vec![T::zero(); n];
    for i in 0..n - 1 {
        let h = (x[i + 1] - x[i]) * c(0.5);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

/// Node weights from integrating the 6-point interpolant of each cell.
///
/// Exact for polynomials of degree 5 on any node distribution.
pub fn node_quadrature_weights<T: Real>(x: &[T]) -> Vec<T> {
    const PTS: usize = 6;
    let n = x.len();
    let mut w = vec![T::zero(); n];
    if n < PTS {
        return trapezoid_weights(x);
    }
    let gauss: [(f64, f64); 4] = [
        (0.069_431_844_202_973_71, 0.173_927_422_568_726_93),
        (0.330_009_478_207_571_87, 0.326_072_577_431_273_07),
        (0.669_990_521_792_428_1, 0.326_072_577_431_273_07),
        (0.930_568_155_797_026_3, 0.173_927_422_568_726_93),
    ];
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        let s = (i + 1).saturating_sub(PTS / 2).min(n - PTS);
        let xs = &x[s..s + PTS];
        for (g, gw) in gauss {
            let xg = x[i] + c::<T>(g) * h;
            for j in 0..PTS {
                let mut l = T::one();
                for k in 0..PTS {
                    if k != j {
                        l *= (xg - xs[k]) / (xs[j] - xs[k]);
                    }
                }
                w[s + j] += c::<T>(gw) * h * l;
            }
        }
    }
    w
}
