use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::scalar::{c, Real};

use super::collocation::Collocation;
use super::mesh::Mesh;
use super::solution::HeteroclinicSolution;

pub const FORMAT_TAG: &str = "wallforge-heteroclinic-1";

/// Columnar text: `# key=value` headers, then `x A A' A'' A''' B B'` per node.
///
/// `echo` lines are appended to the header verbatim as `# key=value`.
pub fn write_solution<T: Real, W: Write>(
    sol: &HeteroclinicSolution<T>,
    out: &mut W,
    echo: &[(String, String)],
) -> std::io::Result<()> {
    let p = &sol.params;
    writeln!(out, "# format={FORMAT_TAG}")?;
    writeln!(out, "# epsilon={:.17e}", p.epsilon())?;
    writeln!(out, "# delta={:.17e}", p.delta())?;
    writeln!(out, "# k_minus={:.17e}", p.k_minus)?;
    writeln!(out, "# collocation_order={}", sol.mesh.collocation_order)?;
    writeln!(out, "# nodes={}", sol.mesh.nodes.len())?;
    writeln!(out, "# mu={:.17e}", sol.mu)?;
    writeln!(out, "# phase_index={}", sol.phase_index)?;
    writeln!(out, "# phase_anchor={:.17e}", sol.phase_anchor)?;
    writeln!(out, "# newton_residual={:.6e}", sol.newton_residual)?;
    writeln!(out, "# iterations={}", sol.iterations)?;
    writeln!(out, "# max_abs_wg={:.6e}", sol.max_abs_wg())?;
    for (k, v) in echo {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "# columns=x A A' A'' A''' B B'")?;
    for (x, s) in sol.mesh.nodes.iter().zip(&sol.states) {
        write!(out, "{x:.16e}")?;
        for v in s.to_array() {
            write!(out, " {v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn header<T: Real>(pairs: &[(String, String)], key: &str) -> Result<T> {
    let v = pairs.iter().find(|(k, _)| k == key).ok_or_else(|| Error::Parse(format!("missing header `{key}`")))?;
    v.1.trim().parse::<f64>().map(c).map_err(|e| Error::Parse(format!("header `{key}`: {e}")))
}

/// Reads a file written by [`write_solution`]. Stages are rebuilt from the node states.
pub fn read_solution<T: Real, R: BufRead>(input: R) -> Result<HeteroclinicSolution<T>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut xs = Vec::new();
    let mut states = Vec::new();
    for (ln, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.trim().split_once('=') {
                pairs.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
        if vals.len() != 7 {
            return Err(Error::Parse(format!("line {}: expected 7 columns, got {}", ln + 1, vals.len())));
        }
        xs.push(c::<T>(vals[0]));
        let mut u = [T::zero(); 6];
        for k in 0..6 {
            u[k] = c(vals[k + 1]);
        }
        states.push(u);
    }
    match pairs.iter().find(|(k, _)| k == "format") {
        Some((_, v)) if v == FORMAT_TAG => {}
        _ => return Err(Error::Parse(format!("not a `{FORMAT_TAG}` file"))),
    }
    let n: f64 = header(&pairs, "nodes")?;
    if n as usize != xs.len() || xs.len() < 3 {
        return Err(Error::Parse(format!("header says {n} nodes, found {}", xs.len())));
    }
    let p = ModelParams::new(header(&pairs, "epsilon")?, header(&pairs, "delta")?)?
        .with_k_minus(header(&pairs, "k_minus")?);
    let order: f64 = header(&pairs, "collocation_order")?;
    let mesh = Mesh { x_left: xs[0], x_right: xs[xs.len() - 1], nodes: xs, collocation_order: order as usize };
    mesh.validate(&p)?;
    let mu: T = header(&pairs, "mu")?;
    let anchor: T = header(&pairs, "phase_anchor")?;
    let col = Collocation::new(&p, &mesh, anchor)?;
    let (stages, _) = col.reconstruct(&states, mu)?;
    let path = super::collocation::DiscretePath { states, stages, mu };
    let res: T = header(&pairs, "newton_residual")?;
    let it: f64 = header(&pairs, "iterations")?;
    HeteroclinicSolution::assemble(mesh, path, p, res, it as usize, Vec::new(), anchor, Vec::new())
}
