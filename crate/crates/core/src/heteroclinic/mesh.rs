use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{c, cu, Real};

/// Truncated interval and its nodes. Node positions `x = -1` and `x = 0` are always present.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<T> {
    pub x_left: T,
    pub x_right: T,
    pub nodes: Vec<T>,
    pub collocation_order: usize,
}

/// Controls for the graded mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshConfig<T> {
    /// `x_left = -left_factor / (eps delta)`.
    pub left_factor: T,
    /// `x_right = right_factor / (sqrt(2) eps)`.
    pub right_factor: T,
    /// Cell size inside the core region.
    pub h_core: T,
    pub core_left: T,
    pub core_right: T,
    /// e-folding length of the cell-size growth outside the core.
    pub transition: T,
    /// Upper bound on the far-field cell size.
    pub h_far_max: T,
    /// Far-field cells resolve the slow B scales with this fraction of an e-fold.
    pub far_fraction: T,
    pub collocation_order: usize,
}

impl<T: Real> Default for MeshConfig<T> {
    fn default() -> Self {
        Self {
            left_factor: c(12.0),
            right_factor: c(12.0),
            h_core: c(0.06),
            core_left: c(-20.0),
            core_right: c(60.0),
            transition: c(10.0),
            h_far_max: c(2.0),
            far_fraction: c(0.1),
            collocation_order: 4,
        }
    }
}

impl<T: Real> MeshConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("left_factor", self.left_factor),
            ("right_factor", self.right_factor),
            ("h_core", self.h_core),
            ("transition", self.transition),
            ("h_far_max", self.h_far_max),
            ("far_fraction", self.far_fraction),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > T::zero()) {
                return Err(Error::InvalidParameter(format!("mesh.{name} must be > 0, got {v}")));
            }
        }
        if !(self.core_left < T::zero() && self.core_right > T::zero()) {
            return Err(Error::InvalidParameter("mesh core must contain 0".into()));
        }
        if self.collocation_order == 0 || self.collocation_order > 8 {
            return Err(Error::InvalidParameter(format!(
                "mesh.collocation_order must be in 1..=8, got {}",
                self.collocation_order
            )));
        }
        Ok(())
    }
}

pub fn min_x_left<T: Real>(p: &ModelParams<T>) -> T {
    -c::<T>(10.0) / (p.epsilon() * p.delta())
}

pub fn min_x_right<T: Real>(p: &ModelParams<T>) -> T {
    c::<T>(10.0) / (T::SQRT_2() * p.epsilon())
}

impl<T: Real> Mesh<T> {
    pub fn cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn h(&self, i: usize) -> T {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the node at `x = 0`.
    pub fn zero_index(&self) -> Option<usize> {
        self.nodes.iter().position(|x| *x == T::zero())
    }

    /// Cell containing `x` (clamped to the interval).
    pub fn locate(&self, x: T) -> usize {
        let n = self.cells();
        match self.nodes.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(std::cmp::Ordering::Less)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Checks the truncation invariant and node sanity.
    pub fn validate(&self, p: &ModelParams<T>) -> Result<()> {
        if self.nodes.len() < 3 {
            return Err(Error::Precondition("mesh needs at least two cells".into()));
        }
        if self.collocation_order == 0 {
            return Err(Error::Precondition("collocation_order must be >= 1".into()));
        }
        if self.nodes[0] != self.x_left || *self.nodes.last().unwrap() != self.x_right {
            return Err(Error::Precondition("mesh endpoints disagree with nodes".into()));
        }
        if self.x_left > min_x_left(p) * (T::one() - c(1e-12)) {
            return Err(Error::Precondition(format!(
                "x_left = {} must be <= -10/(eps delta) = {}",
                self.x_left,
                min_x_left(p)
            )));
        }
        if self.x_right < min_x_right(p) * (T::one() - c(1e-12)) {
            return Err(Error::Precondition(format!(
                "x_right = {} must be >= 10/(sqrt2 eps) = {}",
                self.x_right,
                min_x_right(p)
            )));
        }
        if self.nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition("mesh nodes must be strictly increasing".into()));
        }
        if self.zero_index().is_none() {
            return Err(Error::Precondition("mesh must contain the phase node x = 0".into()));
        }
        Ok(())
    }

    /// Splits every cell in two.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push((w[0] + w[1]) * c(0.5));
        }
        nodes.push(self.x_right);
        Self { nodes, ..self.clone() }
    }
}

/// Graded mesh with unit-density core and geometric growth toward the truncation points.
pub fn build_mesh<T: Real>(p: &ModelParams<T>, cfg: &MeshConfig<T>) -> Result<Mesh<T>> {
    cfg.validate()?;
    let e = p.epsilon();
    let x_left = -cfg.left_factor / (e * p.delta());
    let x_right = cfg.right_factor / (T::SQRT_2() * e);
    if !(x_left < -T::one()) {
        return Err(Error::Precondition(format!("x_left = {x_left} must lie left of -1")));
    }
    let h_far_left = cfg.h_far_max.min(cfg.far_fraction / (e * p.delta())).max(cfg.h_core);
    let h_far_right = cfg.h_far_max.min(cfg.far_fraction / (T::SQRT_2() * e)).max(cfg.h_core);
    let density = |x: T| -> T {
        let d = if x < cfg.core_left {
            cfg.core_left - x
        } else if x > cfg.core_right {
            x - cfg.core_right
        } else {
            T::zero()
        };
        let far = if x < T::zero() { h_far_left } else { h_far_right };
        (T::one() / cfg.h_core * (-d / cfg.transition).exp()).max(T::one() / far)
    };
    let mut nodes = Vec::new();
    let breaks = [x_left, -T::one(), T::zero(), x_right];
    for (k, w) in breaks.windows(2).enumerate() {
        let seg = equidistribute(w[0], w[1], &density);
        let skip = if k == 0 { 0 } else { 1 };
        nodes.extend(seg.into_iter().skip(skip));
    }
    let mesh = Mesh { x_left, x_right, nodes, collocation_order: cfg.collocation_order };
    mesh.validate(p)?;
    Ok(mesh)
}

fn equidistribute<T: Real>(a: T, b: T, rho: &impl Fn(T) -> T) -> Vec<T> {
    const SAMPLES: usize = 4000;
    let dx = (b - a) / cu::<T>(SAMPLES);
    let mut cum = Vec::with_capacity(SAMPLES + 1);
    cum.push(T::zero());
    let mut acc = T::zero();
    for i in 0..SAMPLES {
        let x0 = a + dx * cu::<T>(i);
        let x1 = x0 + dx;
        acc += (rho(x0) + c::<T>(4.0) * rho((x0 + x1) * c(0.5)) + rho(x1)) * dx / c(6.0);
        cum.push(acc);
    }
    let cells = acc.ceil().to_usize().unwrap_or(1).max(1);
    let mut out = Vec::with_capacity(cells + 1);
    out.push(a);
    let mut j = 0;
    for k in 1..cells {
        let target = acc * cu::<T>(k) / cu::<T>(cells);
        while cum[j + 1] < target {
            j += 1;
        }
        let frac = (target - cum[j]) / (cum[j + 1] - cum[j]);
        out.push(a + dx * (cu::<T>(j) + frac));
    }
    out.push(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mesh_shape() {
        let p = ModelParams::new(0.1, 0.6).unwrap();
        let m = build_mesh(&p, &MeshConfig::default()).unwrap();
        assert!(m.validate(&p).is_ok());
        assert!(m.nodes.contains(&-1.0));
        assert!(m.zero_index().is_some());
        assert!(m.cells() > 1000 && m.cells() < 3000, "cells = {}", m.cells());
        let i = m.locate(0.5);
        assert!(m.nodes[i] <= 0.5 && 0.5 <= m.nodes[i + 1]);
        assert_eq!(m.locate(m.x_right), m.cells() - 1);
    }

    #[test]
    fn truncation_invariant_enforced() {
        let p = ModelParams::new(0.1, 0.6).unwrap();
        let cfg = MeshConfig { left_factor: 5.0, ..MeshConfig::default() };
        assert!(matches!(build_mesh(&p, &cfg), Err(Error::Precondition(_))));
    }
}
