//! Small dense and banded linear algebra used by the solvers.

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Row-major dense LU with partial pivoting.
#[derive(Clone, Debug)]
pub struct DenseLu<T> {
    n: usize,
    lu: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    pub fn factor(mut a: Vec<T>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: a.len() });
        }
        let mut piv = vec![0; n];
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) {
                return Err(Error::Singular(k));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let d = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / d;
                a[i * n + k] = l;
                if l != T::zero() {
                    for j in k + 1..n {
                        let u = a[k * n + j];
                        a[i * n + j] -= l * u;
                    }
                }
            }
        }
        Ok(Self { n, lu: a, piv })
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for k in 0..n {
            b.swap(k, self.piv[k]);
        }
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }
}

/// Square band matrix in LAPACK-style column storage with room for pivoting fill.
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, data: vec![T::zero(); ldab * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kl(&self) -> usize {
        self.kl
    }

    pub fn ku(&self) -> usize {
        self.ku
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i + self.ku >= j && j + self.kl >= i
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Panics when `(i, j)` lies outside the declared band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.data[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    pub fn transpose_matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for (j, yj) in y.iter_mut().enumerate() {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            let mut s = T::zero();
            for (i, xi) in x.iter().enumerate().take(hi + 1).skip(lo) {
                s += self.data[self.idx(i, j)] * *xi;
            }
            *yj = s;
        }
        y
    }

    /// `D_r A D_c` for diagonal scalings.
    pub fn scaled(&self, row: &[T], col: &[T]) -> Self {
        let mut out = self.clone();
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                let k = self.idx(i, j);
                out.data[k] = self.data[k] * row[i] * col[j];
            }
        }
        out
    }

    pub fn add_diagonal(&mut self, s: T) {
        for i in 0..self.n {
            self.add(i, i, s);
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn factor(&self) -> Result<BandLu<T>> {
        BandLu::factor(self.clone())
    }
}

/// LU factors of a [`BandMatrix`] with partial pivoting.
#[derive(Clone, Debug)]
pub struct BandLu<T> {
    a: BandMatrix<T>,
    piv: Vec<usize>,
}

impl<T: Real> BandLu<T> {
    pub fn factor(mut a: BandMatrix<T>) -> Result<Self> {
        let n = a.n;
        let (kl, ku) = (a.kl, a.ku);
        let mut piv = vec![0; n];
        for j in 0..n {
            let last_row = (j + kl).min(n - 1);
            let last_col = (j + kl + ku).min(n - 1);
            let mut p = j;
            let mut best = a.data[a.idx(j, j)].abs();
            for i in j + 1..=last_row {
                let v = a.data[a.idx(i, j)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > T::zero()) {
                return Err(Error::Singular(j));
            }
            piv[j] = p;
            if p != j {
                for col in j..=last_col {
                    let (x, y) = (a.idx(j, col), a.idx(p, col));
                    a.data.swap(x, y);
                }
            }
            let d = a.data[a.idx(j, j)];
            for i in j + 1..=last_row {
                let k = a.idx(i, j);
                let l = a.data[k] / d;
                a.data[k] = l;
                if l != T::zero() {
                    for col in j + 1..=last_col {
                        let u = a.data[a.idx(j, col)];
                        let t = a.idx(i, col);
                        a.data[t] -= l * u;
                    }
                }
            }
        }
        Ok(Self { a, piv })
    }

    pub fn n(&self) -> usize {
        self.a.n
    }

    /// Smallest and largest absolute pivot of `U`.
    pub fn pivot_range(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::zero();
        for j in 0..self.a.n {
            let v = self.a.data[self.a.idx(j, j)].abs();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let a = &self.a;
        let n = a.n;
        let kl = a.kl;
        let kuu = a.kl + a.ku;
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            if bj != T::zero() {
                for i in j + 1..=(j + kl).min(n - 1) {
                    b[i] -= a.data[a.idx(i, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= a.data[a.idx(j, j)];
            let bj = b[j];
            if bj != T::zero() {
                for i in j.saturating_sub(kuu)..j {
                    b[i] -= a.data[a.idx(i, j)] * bj;
                }
            }
        }
    }

    /// Solves `A^T x = b` in place.
    pub fn solve_transpose_in_place(&self, b: &mut [T]) {
        let a = &self.a;
        let n = a.n;
        let kl = a.kl;
        let kuu = a.kl + a.ku;
        for j in 0..n {
            let mut s = b[j];
            for (i, bi) in b.iter().enumerate().take(j).skip(j.saturating_sub(kuu)) {
                s -= a.data[a.idx(i, j)] * *bi;
            }
            b[j] = s / a.data[a.idx(j, j)];
        }
        for j in (0..n).rev() {
            let mut s = b[j];
            for i in j + 1..=(j + kl).min(n - 1) {
                s -= a.data[a.idx(i, j)] * b[i];
            }
            b[j] = s;
            b.swap(j, self.piv[j]);
        }
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues ascending and the matching eigenvectors as columns
/// (`vecs[row][col]`).
pub fn symmetric_eigen<T: Real>(m: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut v = vec![vec![T::zero(); n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag += a[i][i] * a[i][i];
            for j in i + 1..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (c::<T>(2.0) * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = cs * vp - sn * vq;
                    row[q] = sn * vp + cs * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n).map(|r| order.iter().map(|&col| v[r][col]).collect()).collect();
    (vals, vecs)
}

/// Gauss-Legendre nodes and weights on [0, 1], computed in double precision.
pub fn gauss_legendre_unit(s: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(s);
    let mut weights = Vec::with_capacity(s);
    for i in 0..s {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (s as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(s, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(s, x);
        dp = if d != 0.0 { d } else { dp };
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Monomial coefficients of the Lagrange basis through `nodes`: `out[l][m]` multiplies `t^m`.
pub fn lagrange_monomials(nodes: &[f64]) -> Vec<Vec<f64>> {
    let s = nodes.len();
    let mut out = Vec::with_capacity(s);
    for l in 0..s {
        let mut poly = vec![1.0];
        let mut denom = 1.0;
        for (m, xm) in nodes.iter().enumerate() {
            if m == l {
                continue;
            }
            let mut next = vec![0.0; poly.len() + 1];
            for (k, pk) in poly.iter().enumerate() {
                next[k + 1] += pk;
                next[k] -= pk * xm;
            }
            poly = next;
            denom *= nodes[l] - xm;
        }
        out.push(poly.into_iter().map(|v| v / denom).collect());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_band(n: usize, kl: usize, ku: usize, seed: u64) -> (BandMatrix<f64>, Vec<Vec<f64>>) {
        let mut m = BandMatrix::zeros(n, kl, ku);
        let mut d = vec![vec![0.0; n]; n];
        let mut state = seed;
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let v = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                m.set(i, j, v);
                d[i][j] = v;
            }
        }
        (m, d)
    }

    #[test]
    fn band_solve_and_transpose() {
        let n = 40;
        let (m, d) = dense_band(n, 3, 5, 9);
        let lu = m.factor().unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| d[i][j] * x[j]).sum()).collect();
        assert_eq!(m.matvec(&x).len(), n);
        lu.solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-9);
        }
        let mut bt: Vec<f64> = (0..n).map(|j| (0..n).map(|i| d[i][j] * x[i]).sum()).collect();
        let tm = m.transpose_matvec(&x);
        for j in 0..n {
            assert!((tm[j] - bt[j]).abs() < 1e-12);
        }
        lu.solve_transpose_in_place(&mut bt);
        for i in 0..n {
            assert!((bt[i] - x[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_lu_solves() {
        let a = vec![0.0_f64, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::factor(a, 3).unwrap();
        let mut b = vec![5.0, 3.0, 6.0];
        lu.solve_in_place(&mut b);
        let check = [2.0 * b[1] + b[2], b[0] + b[1], 3.0 * b[0] + b[2]];
        for (u, v) in check.iter().zip([5.0, 3.0, 6.0]) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(DenseLu::factor(vec![1.0, 2.0, 2.0, 4.0], 2).is_err());
    }

    #[test]
    fn jacobi_eigen() {
        let m = vec![vec![2.0_f64, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
        let (vals, vecs) = symmetric_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 5.0).abs() < 1e-12);
        assert!((vecs[0][0].abs() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gauss_rule_exactness() {
        for s in 1..=6 {
            let (x, w) = gauss_legendre_unit(s);
            for deg in 0..2 * s {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "s={s} deg={deg}");
            }
        }
    }

    #[test]
    fn lagrange_basis_interpolates() {
        let (x, _) = gauss_legendre_unit(4);
        let l = lagrange_monomials(&x);
        for (i, li) in l.iter().enumerate() {
            for (j, xj) in x.iter().enumerate() {
                let v: f64 = li.iter().enumerate().map(|(m, cm)| cm * xj.powi(m as i32)).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
