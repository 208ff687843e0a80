//! Finite-difference discretizations of the linearized operators along the connection.
//!
//! `Mg` acts on pairs `(A, C)` stored interleaved per node, `Lg` on a single
//! grid function. Both use the solution mesh directly.

mod fd;

pub use fd::{fornberg, node_quadrature_weights, trapezoid_weights};

use crate::error::{Error, Result};
use crate::heteroclinic::HeteroclinicSolution;
use crate::linalg::{symmetric_eigen, BandLu, BandMatrix};
use crate::model::ModelParams;
use crate::scalar::{c, Real};

/// Stencil widths. Six-point accuracy for both derivatives.
pub const D4_WIDTH: usize = 9;
pub const D2_WIDTH: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Mg,
    Lg,
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OperatorKind::Mg => "Mg",
            OperatorKind::Lg => "Lg",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedOperator<T> {
    pub grid: Vec<T>,
    pub matrix: BandMatrix<T>,
    pub kind: OperatorKind,
    /// Rows replaced by `u = 0`.
    pub bc: Vec<usize>,
}

impl<T: Real> DiscretizedOperator<T> {
    /// Unknowns per node.
    pub fn components(&self) -> usize {
        match self.kind {
            OperatorKind::Mg => 2,
            OperatorKind::Lg => 1,
        }
    }

    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.matrix.n() {
            return Err(Error::DimensionMismatch { expected: self.matrix.n(), got: v.len() });
        }
        Ok(self.matrix.matvec(v))
    }

    /// Same operator with `s` added on the diagonal.
    pub fn shifted(&self, s: T) -> Self {
        let mut out = self.clone();
        out.matrix.add_diagonal(s);
        out
    }

    pub fn is_bc_row(&self, r: usize) -> bool {
        self.bc.binary_search(&r).is_ok()
    }

    /// Trapezoid weights repeated per component.
    fn weights(&self) -> Vec<T> {
        let w = trapezoid_weights(&self.grid);
        let m = self.components();
        w.iter().flat_map(|v| std::iter::repeat_n(*v, m)).collect()
    }
}

fn require_nodes<T>(grid: &[T]) -> Result<()> {
    if grid.len() < D4_WIDTH + 1 {
        return Err(Error::Precondition(format!(
            "grid has {} nodes; the fourth-derivative stencil needs at least {}",
            grid.len(),
            D4_WIDTH + 1
        )));
    }
    Ok(())
}

fn build_band<T: Real>(n: usize, entries: &[(usize, usize, T)]) -> BandMatrix<T> {
    let (mut kl, mut ku) = (0, 0);
    for (r, col, _) in entries {
        if r > col {
            kl = kl.max(r - col);
        } else {
            ku = ku.max(col - r);
        }
    }
    let mut m = BandMatrix::zeros(n, kl, ku);
    for (r, col, v) in entries {
        m.add(*r, *col, *v);
    }
    m
}

/// `Mg` for given profiles `A*`, `B*` on `grid`.
pub fn assemble_mg_profiles<T: Real>(
    grid: &[T],
    a: &[T],
    b: &[T],
    p: &ModelParams<T>,
) -> Result<DiscretizedOperator<T>> {
    require_nodes(grid)?;
    let n = grid.len();
    if a.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len().min(b.len()) });
    }
    let g = p.g();
    let inv_e2 = T::one() / (p.epsilon() * p.epsilon());
    let three: T = c(3.0);
    let two: T = c(2.0);
    let mut e = Vec::with_capacity(n * 20);
    let mut bc = Vec::new();
    for i in 0..n {
        let (ra, rc) = (2 * i, 2 * i + 1);
        if i < 2 || i + 2 >= n {
            e.push((ra, ra, T::one()));
            bc.push(ra);
        } else {
            let (s, w) = fd::stencil(grid, i, 4, D4_WIDTH);
            for (k, wk) in w.iter().enumerate() {
                e.push((ra, 2 * (s + k), -*wk));
            }
            e.push((ra, ra, T::one() - three * a[i] * a[i] - g * b[i] * b[i]));
            e.push((ra, rc, -two * g * a[i] * b[i]));
        }
        if i == 0 || i + 1 == n {
            e.push((rc, rc, T::one()));
            bc.push(rc);
        } else {
            let (s, w) = fd::stencil(grid, i, 2, D2_WIDTH);
            for (k, wk) in w.iter().enumerate() {
                e.push((rc, 2 * (s + k) + 1, inv_e2 * *wk));
            }
            e.push((rc, rc, T::one() - g * a[i] * a[i] - three * b[i] * b[i]));
            e.push((rc, ra, -two * g * a[i] * b[i]));
        }
    }
    bc.sort_unstable();
    Ok(DiscretizedOperator { grid: grid.to_vec(), matrix: build_band(2 * n, &e), kind: OperatorKind::Mg, bc })
}

/// `Lg` for given profiles.
pub fn assemble_lg_profiles<T: Real>(
    grid: &[T],
    a: &[T],
    b: &[T],
    p: &ModelParams<T>,
) -> Result<DiscretizedOperator<T>> {
    require_nodes(grid)?;
    let n = grid.len();
    if a.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len().min(b.len()) });
    }
    let g = p.g();
    let inv_e2 = T::one() / (p.epsilon() * p.epsilon());
    let mut e = Vec::with_capacity(n * 8);
    for i in 0..n {
        if i == 0 || i + 1 == n {
            e.push((i, i, T::one()));
            continue;
        }
        let (s, w) = fd::stencil(grid, i, 2, D2_WIDTH);
        for (k, wk) in w.iter().enumerate() {
            e.push((i, s + k, inv_e2 * *wk));
        }
        e.push((i, i, T::one() - g * a[i] * a[i] - b[i] * b[i]));
    }
    Ok(DiscretizedOperator {
        grid: grid.to_vec(),
        matrix: build_band(n, &e),
        kind: OperatorKind::Lg,
        bc: vec![0, n - 1],
    })
}

fn profiles<T: Real>(sol: &HeteroclinicSolution<T>) -> (Vec<T>, Vec<T>) {
    (sol.states.iter().map(|s| s.a0).collect(), sol.states.iter().map(|s| s.b0).collect())
}

pub fn assemble_mg<T: Real>(sol: &HeteroclinicSolution<T>) -> Result<DiscretizedOperator<T>> {
    let (a, b) = profiles(sol);
    assemble_mg_profiles(&sol.mesh.nodes, &a, &b, &sol.params)
}

pub fn assemble_lg<T: Real>(sol: &HeteroclinicSolution<T>) -> Result<DiscretizedOperator<T>> {
    let (a, b) = profiles(sol);
    assemble_lg_profiles(&sol.mesh.nodes, &a, &b, &sol.params)
}

/// The kernel direction `(A*', B*')`, interleaved.
pub fn mg_kernel_vector<T: Real>(sol: &HeteroclinicSolution<T>) -> Vec<T> {
    sol.states.iter().flat_map(|s| [s.a1, s.b1]).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelReport<T> {
    /// Ascending.
    pub smallest_singulars: Vec<T>,
    /// Angle, in the trapezoid-weighted inner product, between the first singular vector and `(A*', B*')`.
    pub kernel_angle: Option<T>,
    /// `sigma_2 / sigma_1`.
    pub spectral_gap: Option<T>,
    pub iterations: usize,
    /// Diagonal shifts needed to factor the operator, if any.
    pub shifts: Vec<f64>,
}

/// Options of the subspace inverse iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseIterationConfig {
    pub block: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for InverseIterationConfig {
    fn default() -> Self {
        Self { block: 4, max_iter: 300, rel_tol: 1e-12 }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

fn orthonormalize<T: Real>(x: &mut [Vec<T>]) {
    for i in 0..x.len() {
        for _ in 0..2 {
            for j in 0..i {
                let d = dot(&x[i], &x[j]);
                let (head, tail) = x.split_at_mut(i);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= d * *b;
                }
            }
        }
        let n = dot(&x[i], &x[i]).sqrt();
        for a in x[i].iter_mut() {
            *a /= n;
        }
    }
}

fn start_block<T: Real>(n: usize, k: usize) -> Vec<Vec<T>> {
    // deterministic, smooth and linearly independent
    let mut x: Vec<Vec<T>> = (0..k)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let t = (i as f64 + 0.5) / n as f64;
                    c::<T>(
                        (std::f64::consts::PI * (j as f64 + 1.0) * t).sin()
                            + 0.1 * ((i * 7 + j * 13) % 17) as f64 / 17.0,
                    )
                })
                .collect()
        })
        .collect();
    orthonormalize(&mut x);
    x
}

/// Subspace iteration with `solve = (M^T M)^{-1}` and Rayleigh-Ritz through `apply = M`.
fn block_iteration<T: Real>(
    n: usize,
    k: usize,
    solve: &dyn Fn(&mut [T]),
    apply: &dyn Fn(&[T]) -> Vec<T>,
    cfg: &InverseIterationConfig,
    watch: usize,
    floor: T,
    shifts: &[f64],
) -> Result<(Vec<T>, Vec<Vec<T>>, usize)> {
    let mut x = start_block::<T>(n, k);
    let mut prev: Vec<T> = vec![T::infinity(); k];
    let mut sig = vec![T::zero(); k];
    let mut it = 0;
    while it < cfg.max_iter {
        it += 1;
        for col in x.iter_mut() {
            solve(col);
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InverseIteration { shifts: shifts.to_vec() });
            }
        }
        orthonormalize(&mut x);
        let y: Vec<Vec<T>> = x.iter().map(|col| apply(col)).collect();
        let h: Vec<Vec<T>> = (0..k).map(|a| (0..k).map(|b| dot(&y[a], &y[b])).collect()).collect();
        let (vals, vecs) = symmetric_eigen(&h);
        x = (0..k)
            .map(|a| {
                let mut v = vec![T::zero(); n];
                for b in 0..k {
                    let w = vecs[b][a];
                    for (o, xi) in v.iter_mut().zip(&x[b]) {
                        *o += w * *xi;
                    }
                }
                v
            })
            .collect();
        sig = vals.iter().map(|v| v.max(T::zero()).sqrt()).collect();
        let scale = sig.iter().fold(T::TINY, |m, v| m.max(*v));
        let settled = sig
            .iter()
            .zip(&prev)
            .take(watch.min(k))
            .all(|(s, p)| (*s - *p).abs() <= c::<T>(cfg.rel_tol) * scale + floor);
        if settled {
            break;
        }
        prev = sig.clone();
    }
    Ok((sig, x, it))
}

/// `(values ascending, vectors, iterations, shifts)`.
pub type SingularBlock<T> = (Vec<T>, Vec<Vec<T>>, usize, Vec<f64>);

/// Smallest singular values and right singular vectors of `m` by block inverse iteration on `m^T m`.
///
/// A singular value far below the rest is deflated (rank-one update applied
/// through Sherman-Morrison) so the next ones are not lost to roundoff.
pub fn smallest_singular<T: Real>(m: &BandMatrix<T>, cfg: &InverseIterationConfig) -> Result<SingularBlock<T>> {
    let n = m.n();
    let k = cfg.block.min(n).max(1);
    let mut shifts = Vec::new();
    let lu: BandLu<T> = match m.factor() {
        Ok(lu) => lu,
        Err(_) => {
            let scale = m.max_abs().as_f64().max(f64::MIN_POSITIVE);
            let mut found = None;
            for rel in [1e-14, 1e-12, 1e-10, 1e-8] {
                let s = rel * scale;
                shifts.push(s);
                let mut mm = m.clone();
                mm.add_diagonal(c(s));
                if let Ok(lu) = mm.factor() {
                    found = Some(lu);
                    break;
                }
            }
            found.ok_or(Error::InverseIteration { shifts: shifts.clone() })?
        }
    };
    let solve = |x: &mut [T]| {
        lu.solve_transpose_in_place(x);
        lu.solve_in_place(x);
    };
    let apply = |x: &[T]| m.matvec(x);
    // roundoff level of `m x`
    let floor = c::<T>(100.0) * T::epsilon() * m.max_abs();
    let (sig, vecs, it) = block_iteration(n, k, &solve, &apply, cfg, 1, floor, &shifts)?;
    let top = sig[k - 1];
    if k < 2 || !(sig[0] < c::<T>(1e-6) * top) {
        let (sig, vecs, it2) = block_iteration(n, k, &solve, &apply, cfg, k - 1, floor, &shifts)?;
        return Ok((sig, vecs, it + it2, shifts));
    }

    // deflate the near-null pair (u1, v1): M' = M + s u1 v1^T
    let v1 = vecs[0].clone();
    let mut u1 = v1.clone();
    lu.solve_transpose_in_place(&mut u1);
    let nu = dot(&u1, &u1).sqrt();
    u1.iter_mut().for_each(|v| *v /= nu);
    let s = top;
    let mut a = v1.clone();
    lu.solve_transpose_in_place(&mut a);
    let mut b = u1.clone();
    lu.solve_in_place(&mut b);
    let da = T::one() + s * dot(&u1, &a);
    let db = T::one() + s * dot(&v1, &b);
    let solve_d = |x: &mut [T]| {
        lu.solve_transpose_in_place(x);
        let f = s * dot(&u1, x) / da;
        x.iter_mut().zip(&a).for_each(|(xi, ai)| *xi -= f * *ai);
        lu.solve_in_place(x);
        let f = s * dot(&v1, x) / db;
        x.iter_mut().zip(&b).for_each(|(xi, bi)| *xi -= f * *bi);
    };
    let apply_d = |x: &[T]| {
        let mut y = m.matvec(x);
        let f = s * dot(&v1, x);
        y.iter_mut().zip(&u1).for_each(|(yi, ui)| *yi += f * *ui);
        y
    };
    let (sig2, vecs2, it2) = block_iteration(n, k, &solve_d, &apply_d, cfg, k - 1, floor, &shifts)?;
    let mut pairs: Vec<(T, Vec<T>)> = vec![(sig[0], v1.clone())];
    for (sv, vv) in sig2.into_iter().zip(vecs2) {
        // drop the deflated direction
        if dot(&vv, &v1).abs() < c(0.5) {
            pairs.push((sv, vv));
        }
    }
    pairs.truncate(k);
    let (vals, vs): (Vec<T>, Vec<Vec<T>>) = pairs.into_iter().unzip();
    Ok((vals, vs, it + it2, shifts))
}

/// Rows and columns of `m` listed in `keep` (ascending).
fn restrict<T: Real>(m: &BandMatrix<T>, keep: &[usize]) -> BandMatrix<T> {
    let mut pos = vec![usize::MAX; m.n()];
    for (k, i) in keep.iter().enumerate() {
        pos[*i] = k;
    }
    let mut out = BandMatrix::zeros(keep.len(), m.kl(), m.ku());
    for (r, i) in keep.iter().enumerate() {
        let lo = i.saturating_sub(m.kl());
        let hi = (i + m.ku()).min(m.n() - 1);
        for j in lo..=hi {
            if pos[j] != usize::MAX {
                let v = m.get(*i, j);
                if v != T::zero() {
                    out.set(r, pos[j], v);
                }
            }
        }
    }
    out
}

/// Smallest singular values of `W^(1/2) M W^(-1/2)` restricted to the unknowns not fixed by the boundary rows.
///
/// For `Mg` also the kernel angle and gap.
pub fn kernel_diagnostics<T: Real>(
    op: &DiscretizedOperator<T>,
    sol: &HeteroclinicSolution<T>,
    cfg: &InverseIterationConfig,
) -> Result<KernelReport<T>> {
    let keep: Vec<usize> = (0..op.matrix.n()).filter(|r| !op.is_bc_row(*r)).collect();
    let w = op.weights();
    let sq: Vec<T> = keep.iter().map(|i| w[*i].sqrt()).collect();
    let inv: Vec<T> = sq.iter().map(|v| T::one() / *v).collect();
    let mw = restrict(&op.matrix, &keep).scaled(&sq, &inv);
    let (sig, vecs, iterations, shifts) = smallest_singular(&mw, cfg)?;
    let (kernel_angle, spectral_gap) = match op.kind {
        OperatorKind::Mg => {
            let kv = mg_kernel_vector(sol);
            if kv.len() != w.len() {
                return Err(Error::DimensionMismatch { expected: w.len(), got: kv.len() });
            }
            let kw: Vec<T> = keep.iter().zip(&sq).map(|(i, s)| kv[*i] * *s).collect();
            let nk = dot(&kw, &kw).sqrt();
            let v = &vecs[0];
            let proj = dot(&kw, v) / dot(v, v).sqrt();
            let perp = (nk * nk - proj * proj).max(T::zero()).sqrt();
            let angle = perp.atan2(proj.abs());
            let gap = if sig.len() > 1 { Some(sig[1] / sig[0].max(T::TINY)) } else { None };
            (Some(angle), gap)
        }
        OperatorKind::Lg => (None, None),
    };
    Ok(KernelReport { smallest_singulars: sig, kernel_angle, spectral_gap, iterations, shifts })
}

/// Decay rates used by the tail corrections of inner products.
fn tail_rates<T: Real>(sol: &HeteroclinicSolution<T>) -> (T, T) {
    let p = &sol.params;
    let left = sol.decay_fits.b_minus.map_or(p.epsilon() * p.delta(), |f| f.rate);
    let right = sol.decay_fits.b_plus.map_or(T::SQRT_2() * p.epsilon(), |f| f.rate);
    (left, right)
}

/// `int f g` over the nodes plus exponential tails (`f g` decays at `2 r_left` and `r_right`).
pub fn inner_product<T: Real>(sol: &HeteroclinicSolution<T>, f: &[T], g: &[T]) -> T {
    let w = node_quadrature_weights(&sol.mesh.nodes);
    let n = f.len();
    let (rl, rr) = tail_rates(sol);
    let body: T = (0..n).map(|i| w[i] * f[i] * g[i]).sum();
    body + f[0] * g[0] / (c::<T>(2.0) * rl) + f[n - 1] * g[n - 1] / rr
}

fn weighted_norm<T: Real>(sol: &HeteroclinicSolution<T>, f: &[T]) -> T {
    let w = node_quadrature_weights(&sol.mesh.nodes);
    f.iter().zip(&w).map(|(v, wi)| *v * *v * *wi).sum::<T>().max(T::zero()).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LgSolve<T> {
    pub w: Vec<T>,
    /// `<rhs, B*>`.
    pub compatibility_defect: T,
    pub rhs_norm: T,
}

/// Solves `Lg w = rhs` after checking `|<rhs, B*>| <= tol * ||rhs||`.
///
/// The truncated operator is invertible, so the minimum-norm solution is the LU solution.
pub fn solve_lg<T: Real>(
    op: &DiscretizedOperator<T>,
    sol: &HeteroclinicSolution<T>,
    rhs: &[T],
    tol: T,
) -> Result<LgSolve<T>> {
    if op.kind != OperatorKind::Lg {
        return Err(Error::Precondition("solve_lg needs an Lg operator".into()));
    }
    let n = op.matrix.n();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let b: Vec<T> = sol.states.iter().map(|s| s.b0).collect();
    let defect = inner_product(sol, rhs, &b);
    let norm = weighted_norm(sol, rhs);
    if defect.abs() > tol * norm {
        return Err(Error::Precondition(format!(
            "compatibility violated: <rhs, B*> = {defect:e} exceeds {tol:e} * ||rhs|| = {:e}",
            tol * norm
        )));
    }
    let mut w = rhs.to_vec();
    for r in &op.bc {
        w[*r] = T::zero();
    }
    if norm > T::zero() {
        op.matrix.factor()?.solve_in_place(&mut w);
    }
    Ok(LgSolve { w, compatibility_defect: defect, rhs_norm: norm })
}

#[derive(Clone, Debug, PartialEq)]
pub struct W1Report<T> {
    pub w1: Vec<T>,
    /// `int B*^2 A* A*'` with tails.
    pub integral: T,
    pub compatibility_defect: T,
    pub rhs_norm: T,
    pub l2_norm: T,
    pub max_norm: T,
}

/// `w1 = c9 Lg^{-1}[B A A' - 2 B' int B^2 A A']`.
pub fn compute_w1<T: Real>(sol: &HeteroclinicSolution<T>, c9: T, tol: T) -> Result<W1Report<T>> {
    let op = assemble_lg(sol)?;
    let s = &sol.states;
    let n = s.len();
    let w = node_quadrature_weights(&sol.mesh.nodes);
    let (rl, _) = tail_rates(sol);
    let ra = sol.decay_fits.a_plus.map_or((sol.params.delta() * c(0.5)).sqrt(), |f| f.rate);
    let f: Vec<T> = s.iter().map(|u| u.b0 * u.b0 * u.a0 * u.a1).collect();
    let integral = (0..n).map(|i| w[i] * f[i]).sum::<T>() + f[0] / (c::<T>(4.0) * rl) + f[n - 1] / (c::<T>(2.0) * ra);
    let two: T = c(2.0);
    let rhs: Vec<T> = s.iter().map(|u| c9 * (u.b0 * u.a0 * u.a1 - two * u.b1 * integral)).collect();
    let r = solve_lg(&op, sol, &rhs, tol)?;
    let l2 = weighted_norm(sol, &r.w);
    let mx = r.w.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    Ok(W1Report {
        w1: r.w,
        integral,
        compatibility_defect: r.compatibility_defect,
        rhs_norm: r.rhs_norm,
        l2_norm: l2,
        max_norm: mx,
    })
}
