//! Gauss collocation equations, their condensed Newton system and stage reconstruction.

use crate::asymptotics::{linearize_at_minus, linearize_at_plus};
use crate::error::{Error, Result};
use crate::linalg::{BandMatrix, DenseLu};
use crate::model::{reduced_field, reduced_jacobian, ModelParams, ReducedState};
use crate::scalar::{c, Real};

use super::mesh::Mesh;
use super::tableau::Tableau;

/// Discrete orbit: node states, stage derivatives (cell-major) and the unfolding parameter.
///
/// `mu` multiplies `b1` in the `b1'` equation. The first integral then obeys
/// `dW/dx = -2 mu b1^2`, which makes the boundary value problem square; it
/// vanishes at a true connection.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePath<T> {
    pub states: Vec<[T; 6]>,
    pub stages: Vec<[T; 6]>,
    pub mu: T,
}

impl<T: Real> DiscretePath<T> {
    pub fn reduced_states(&self) -> Vec<ReducedState<T>> {
        self.states.iter().map(|u| ReducedState::from_array(*u)).collect()
    }
}

/// Limit states and projection rows for both boundary conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData<T> {
    pub m_minus: [T; 6],
    pub m_plus: [T; 6],
    /// Stable left-eigenvector rows at `M-`: `u(x_left) - M-` must lie in the unstable space.
    pub left_rows: Vec<[T; 6]>,
    /// Unstable left-eigenvector rows at `M+`.
    pub right_rows: Vec<[T; 6]>,
}

impl<T: Real> BoundaryData<T> {
    pub fn new(p: &ModelParams<T>) -> Result<Self> {
        let q = p.with_k_minus(T::zero());
        let lm = linearize_at_minus(&q)?;
        let lp = linearize_at_plus(&q)?;
        if lm.unstable_dim != 3 || lp.stable_dim != 3 {
            return Err(Error::Precondition(format!(
                "eigen counts {} / {} differ from 3 / 3",
                lm.unstable_dim, lp.stable_dim
            )));
        }
        Ok(Self {
            m_minus: ReducedState::m_minus().to_array(),
            m_plus: ReducedState::m_plus().to_array(),
            left_rows: lm.stable_projection(),
            right_rows: lp.unstable_projection(),
        })
    }

    pub fn left_residual(&self, u0: &[T; 6]) -> [T; 3] {
        project(&self.left_rows, u0, &self.m_minus)
    }

    pub fn right_residual(&self, un: &[T; 6]) -> [T; 3] {
        project(&self.right_rows, un, &self.m_plus)
    }
}

fn project<T: Real>(rows: &[[T; 6]], u: &[T; 6], m: &[T; 6]) -> [T; 3] {
    let mut out = [T::zero(); 3];
    for (o, r) in out.iter_mut().zip(rows) {
        *o = (0..6).map(|k| r[k] * (u[k] - m[k])).sum();
    }
    out
}

#[inline]
pub(crate) fn field_mu<T: Real>(u: &[T; 6], mu: T, p: &ModelParams<T>) -> [T; 6] {
    let mut f = reduced_field(u, p);
    f[5] += mu * u[5];
    f
}

#[inline]
fn jac_mu<T: Real>(u: &[T; 6], mu: T, p: &ModelParams<T>) -> [[T; 6]; 6] {
    let mut j = reduced_jacobian(u, p);
    j[5][5] += mu;
    j
}

/// Everything fixed during one solve.
#[derive(Clone, Debug)]
pub struct Collocation<'a, T> {
    pub p: &'a ModelParams<T>,
    pub mesh: &'a Mesh<T>,
    pub tab: Tableau<T>,
    pub bc: BoundaryData<T>,
    pub anchor: usize,
    pub a_mid: T,
}

impl<'a, T: Real> Collocation<'a, T> {
    pub fn new(p: &'a ModelParams<T>, mesh: &'a Mesh<T>, a_mid: T) -> Result<Self> {
        let anchor =
            mesh.zero_index().ok_or_else(|| Error::Precondition("mesh must contain the phase node x = 0".into()))?;
        Ok(Self { p, mesh, tab: Tableau::gauss(mesh.collocation_order), bc: BoundaryData::new(p)?, anchor, a_mid })
    }

    pub fn s(&self) -> usize {
        self.tab.s
    }

    pub fn check_dims(&self, path: &DiscretePath<T>) -> Result<()> {
        let n = self.mesh.cells();
        if path.states.len() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n + 1, got: path.states.len() });
        }
        if path.stages.len() != n * self.s() {
            return Err(Error::DimensionMismatch { expected: n * self.s(), got: path.stages.len() });
        }
        Ok(())
    }

    /// Number of scalar equations (equal to the number of unknowns).
    pub fn equation_count(&self) -> usize {
        let n = self.mesh.cells();
        6 * (n + 1) + 1 + 6 * self.s() * n
    }

    pub fn stage_values(&self, i: usize, u: &[T; 6], k: &[[T; 6]]) -> Vec<[T; 6]> {
        let h = self.mesh.h(i);
        let s = self.s();
        (0..s)
            .map(|j| {
                let mut v = *u;
                for (l, kl) in k.iter().enumerate().take(s) {
                    let w = h * self.tab.a[j][l];
                    for a in 0..6 {
                        v[a] += w * kl[a];
                    }
                }
                v
            })
            .collect()
    }

    fn continuity(&self, i: usize, path: &DiscretePath<T>) -> [T; 6] {
        let s = self.s();
        let h = self.mesh.h(i);
        let k = &path.stages[i * s..(i + 1) * s];
        let mut out = [T::zero(); 6];
        for a in 0..6 {
            let mut acc = T::zero();
            for (j, kj) in k.iter().enumerate() {
                acc += self.tab.b[j] * kj[a];
            }
            out[a] = path.states[i + 1][a] - path.states[i][a] - h * acc;
        }
        out
    }

    /// Full residual: left BC (3), per cell stage (6s) and continuity (6) rows, phase (1), right BC (3).
    pub fn residual(&self, path: &DiscretePath<T>) -> Result<Vec<T>> {
        self.check_dims(path)?;
        let s = self.s();
        let n = self.mesh.cells();
        let mut r = Vec::with_capacity(self.equation_count());
        r.extend(self.bc.left_residual(&path.states[0]));
        for i in 0..n {
            let k = &path.stages[i * s..(i + 1) * s];
            let uv = self.stage_values(i, &path.states[i], k);
            for (kj, uj) in k.iter().zip(&uv) {
                let f = field_mu(uj, path.mu, self.p);
                for a in 0..6 {
                    r.push(kj[a] - f[a]);
                }
            }
            r.extend(self.continuity(i, path));
        }
        r.push(path.states[self.anchor][0] - self.a_mid);
        r.extend(self.bc.right_residual(&path.states[n]));
        Ok(r)
    }

    /// Cell matrix `S = I - h (a (x) J)` at the given stage values.
    fn cell_matrix(&self, h: T, jacs: &[[[T; 6]; 6]]) -> Vec<T> {
        let s = self.s();
        let m = 6 * s;
        let mut smat = vec![T::zero(); m * m];
        for j in 0..s {
            for l in 0..s {
                let w = h * self.tab.a[j][l];
                for a in 0..6 {
                    for b in 0..6 {
                        let mut v = -w * jacs[j][a][b];
                        if j == l && a == b {
                            v += T::one();
                        }
                        smat[(6 * j + a) * m + 6 * l + b] = v;
                    }
                }
            }
        }
        smat
    }

    /// Newton correction from the condensed banded system.
    pub fn newton_direction(&self, path: &DiscretePath<T>) -> Result<DiscretePath<T>> {
        self.check_dims(path)?;
        let s = self.s();
        let m = 6 * s;
        let nc = self.mesh.cells();
        let ntot = 7 * (nc + 1);
        let mut entries: Vec<(usize, usize, T)> = Vec::with_capacity(nc * 60 + 64);
        let mut rhs = vec![T::zero(); ntot];
        // per cell: P (m x 7) then q (m)
        let mut cond: Vec<(Vec<T>, Vec<T>)> = Vec::with_capacity(nc);

        for (r, row) in self.bc.left_rows.iter().enumerate() {
            for b in 0..6 {
                entries.push((r, b, row[b]));
            }
        }
        let lres = self.bc.left_residual(&path.states[0]);
        rhs[..3].copy_from_slice(&[-lres[0], -lres[1], -lres[2]]);

        for i in 0..nc {
            let h = self.mesh.h(i);
            let k = &path.stages[i * s..(i + 1) * s];
            let uv = self.stage_values(i, &path.states[i], k);
            let jacs: Vec<[[T; 6]; 6]> = uv.iter().map(|u| jac_mu(u, path.mu, self.p)).collect();
            let lu = DenseLu::factor(self.cell_matrix(h, &jacs), m)?;
            let mut pcols = vec![T::zero(); m * 7];
            let mut col = vec![T::zero(); m];
            for b in 0..7 {
                for j in 0..s {
                    for a in 0..6 {
                        col[6 * j + a] = match (b, a) {
                            (6, 5) => uv[j][5],
                            (6, _) => T::zero(),
                            _ => jacs[j][a][b],
                        };
                    }
                }
                lu.solve_in_place(&mut col);
                for (row, v) in col.iter().enumerate() {
                    pcols[row * 7 + b] = *v;
                }
            }
            let mut q = vec![T::zero(); m];
            for j in 0..s {
                let f = field_mu(&uv[j], path.mu, self.p);
                for a in 0..6 {
                    q[6 * j + a] = -(k[j][a] - f[a]);
                }
            }
            lu.solve_in_place(&mut q);

            let row0 = 3 + 7 * i + usize::from(i >= self.anchor);
            let cres = self.continuity(i, path);
            for a in 0..6 {
                let r = row0 + a;
                entries.push((r, 7 * (i + 1) + a, T::one()));
                for b in 0..7 {
                    let mut acc = T::zero();
                    for j in 0..s {
                        acc += self.tab.b[j] * pcols[(6 * j + a) * 7 + b];
                    }
                    let mut v = -h * acc;
                    if b == a {
                        v -= T::one();
                    }
                    entries.push((r, 7 * i + b, v));
                }
                let mut bq = T::zero();
                for j in 0..s {
                    bq += self.tab.b[j] * q[6 * j + a];
                }
                rhs[r] = -cres[a] + h * bq;
            }
            entries.push((row0 + 6, 7 * (i + 1) + 6, T::one()));
            entries.push((row0 + 6, 7 * i + 6, -T::one()));
            cond.push((pcols, q));
        }

        let prow = 3 + 7 * self.anchor;
        entries.push((prow, 7 * self.anchor, T::one()));
        rhs[prow] = -(path.states[self.anchor][0] - self.a_mid);

        let rres = self.bc.right_residual(&path.states[nc]);
        for (r, row) in self.bc.right_rows.iter().enumerate() {
            let rr = 3 + 7 * nc + 1 + r;
            for b in 0..6 {
                entries.push((rr, 7 * nc + b, row[b]));
            }
            rhs[rr] = -rres[r];
        }

        let mut kl = 0;
        let mut ku = 0;
        for (r, cidx, _) in &entries {
            if r > cidx {
                kl = kl.max(r - cidx);
            } else {
                ku = ku.max(cidx - r);
            }
        }
        let mut band = BandMatrix::zeros(ntot, kl, ku);
        for (r, cidx, v) in entries {
            band.add(r, cidx, v);
        }
        band.factor()?.solve_in_place(&mut rhs);

        let mut states = Vec::with_capacity(nc + 1);
        for i in 0..=nc {
            let mut du = [T::zero(); 6];
            du.copy_from_slice(&rhs[7 * i..7 * i + 6]);
            states.push(du);
        }
        let mut stages = Vec::with_capacity(nc * s);
        for (i, (pcols, q)) in cond.iter().enumerate() {
            let z = &rhs[7 * i..7 * i + 7];
            for j in 0..s {
                let mut dk = [T::zero(); 6];
                for a in 0..6 {
                    let row = 6 * j + a;
                    let mut v = q[row];
                    for (b, zb) in z.iter().enumerate() {
                        v += pcols[row * 7 + b] * *zb;
                    }
                    dk[a] = v;
                }
                stages.push(dk);
            }
        }
        Ok(DiscretePath { states, stages, mu: rhs[6] })
    }

    /// Solves the stage equations of every cell for given node states.
    ///
    /// Returns the stages and the largest continuity defect, the quantity
    /// verification reports as collocation residual.
    pub fn reconstruct(&self, states: &[[T; 6]], mu: T) -> Result<(Vec<[T; 6]>, T)> {
        let nc = self.mesh.cells();
        if states.len() != nc + 1 {
            return Err(Error::DimensionMismatch { expected: nc + 1, got: states.len() });
        }
        let s = self.s();
        let m = 6 * s;
        let mut stages = Vec::with_capacity(nc * s);
        let mut worst = T::zero();
        for i in 0..nc {
            let h = self.mesh.h(i);
            let f0 = field_mu(&states[i], mu, self.p);
            let mut k = vec![f0; s];
            let mut converged = false;
            let mut last = T::infinity();
            // rounding leaves a floor a few ulps above zero
            let floor = c::<T>(16.0) * T::epsilon();
            for _ in 0..40 {
                let uv = self.stage_values(i, &states[i], &k);
                let mut r = vec![T::zero(); m];
                let mut rmax = T::zero();
                let mut kmax = T::zero();
                for j in 0..s {
                    let f = field_mu(&uv[j], mu, self.p);
                    for a in 0..6 {
                        r[6 * j + a] = -(k[j][a] - f[a]);
                        rmax = rmax.max(r[6 * j + a].abs());
                        kmax = kmax.max(k[j][a].abs());
                    }
                }
                if rmax <= floor * (T::one() + kmax) {
                    converged = true;
                    break;
                }
                last = rmax;
                let jacs: Vec<[[T; 6]; 6]> = uv.iter().map(|u| jac_mu(u, mu, self.p)).collect();
                DenseLu::factor(self.cell_matrix(h, &jacs), m)?.solve_in_place(&mut r);
                let mut step = T::zero();
                for j in 0..s {
                    for a in 0..6 {
                        k[j][a] += r[6 * j + a];
                        step = step.max(r[6 * j + a].abs());
                    }
                }
                if step <= floor * (T::one() + kmax) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NonConvergence { iterations: 40, residual: last.as_f64(), trace: Vec::new() });
            }
            for a in 0..6 {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    acc += self.tab.b[j] * kj[a];
                }
                let d = states[i + 1][a] - states[i][a] - h * acc;
                worst = worst.max(d.abs());
            }
            stages.extend(k);
        }
        Ok((stages, worst))
    }
}

/// Collocation residual of `path` for the reduced field, with the phase value `a_mid`.
pub fn assemble_residual<T: Real>(
    p: &ModelParams<T>,
    mesh: &Mesh<T>,
    path: &DiscretePath<T>,
    a_mid: T,
) -> Result<Vec<T>> {
    Collocation::new(p, mesh, a_mid)?.residual(path)
}
