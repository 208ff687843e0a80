//! Run configuration: flat `section.key = value` lines, `#` comments.

use std::path::{Path, PathBuf};

use toml::Value;
use wallforge_core::heteroclinic::{SolverConfig, VerifyConfig};
use wallforge_core::model::{ModelParams, NormalFormCoeffs};
use wallforge_core::spectral::InverseIterationConfig;
use wallforge_core::ModelParams64;

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub k_minus: f64,
    pub omega_tilde_plus: f64,
    /// Wavenumber offset of the periodic state reported by `asymptotics`.
    pub k_plus: f64,
    pub coeffs: NormalFormCoeffs<f64>,
    pub solver: SolverConfig<f64>,
    pub verify: VerifyConfig,
    pub spectral: InverseIterationConfig,
    pub w1_tol: f64,
    pub sweep_epsilon: Vec<f64>,
    pub sweep_delta: Vec<f64>,
    pub sweep_phi: Vec<f64>,
    pub sweep_steps: usize,
    /// Emit the family even when `Delta <= 0`.
    pub family_unchecked: bool,
    pub out_dir: String,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub seed: u64,
    pub hook_scale: f64,
    pub input_solution: Option<String>,
    pub input_coefficients: Option<String>,
    /// Directory of the config file; relative input paths resolve against it.
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.6,
            k_minus: 0.0,
            omega_tilde_plus: 0.0,
            k_plus: 0.0,
            coeffs: NormalFormCoeffs::default(),
            solver: SolverConfig::default(),
            verify: VerifyConfig::default(),
            spectral: InverseIterationConfig::default(),
            w1_tol: 1e-6,
            sweep_epsilon: vec![0.1, 0.05],
            sweep_delta: vec![0.6],
            sweep_phi: vec![-0.8, -0.4, 0.0, 0.4, 0.8],
            sweep_steps: 5,
            family_unchecked: false,
            out_dir: "wallforge-out".into(),
            threads: 0,
            seed: 0,
            hook_scale: 0.0,
            input_solution: None,
            input_coefficients: None,
            base_dir: PathBuf::from("."),
        }
    }
}

const COEFF_NAMES: [&str; 8] = ["sigma0", "sigma1", "sigma2", "alpha", "beta", "gamma", "delta_c", "a4"];

fn coeff_slot<'a>(k: &'a mut NormalFormCoeffs<f64>, name: &str) -> Option<&'a mut f64> {
    if let Some(j) = name.strip_prefix('d').and_then(|s| s.parse::<usize>().ok()) {
        return (1..=8).contains(&j).then(|| &mut k.d[j - 1]);
    }
    if let Some(j) = name.strip_prefix('c').and_then(|s| s.parse::<usize>().ok()) {
        return (j < 12).then(|| &mut k.c[j]);
    }
    Some(match name {
        "sigma0" => &mut k.sigma0,
        "sigma1" => &mut k.sigma1,
        "sigma2" => &mut k.sigma2,
        "alpha" => &mut k.alpha,
        "beta" => &mut k.beta,
        "gamma" => &mut k.gamma,
        "delta_c" => &mut k.delta_c,
        "a4" => &mut k.a4,
        _ => return None,
    })
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn line_of(text: &str, key: &str) -> usize {
    let last = key.rsplit('.').next().unwrap_or(key);
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.starts_with(key) || (l.starts_with(last) && l[last.len()..].trim_start().starts_with('='))
        })
        .map_or(0, |i| i + 1)
}

fn float(key: &str, v: &Value) -> Result<f64, String> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(format!("`{key}` expects a number")),
    }
}

fn uint(key: &str, v: &Value) -> Result<usize, String> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(format!("`{key}` expects a non-negative integer")),
    }
}

fn floats(key: &str, v: &Value) -> Result<Vec<f64>, String> {
    match v {
        Value::Array(a) => a.iter().map(|x| float(key, x)).collect(),
        _ => Err(format!("`{key}` expects a list of numbers")),
    }
}

fn string(key: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        _ => Err(format!("`{key}` expects a string")),
    }
}

/// 17 significant digits; non-finite values in TOML spelling.
pub(crate) fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

fn list(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", "))
}

fn quoted(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let at = e.span().map(|s| {
                let before = &text[..s.start.min(text.len())];
                let line = before.matches('\n').count() + 1;
                let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                (line, col)
            });
            match at {
                Some((l, c)) => CliError::Parse(format!("line {l}, column {c}: {}", e.message())),
                None => CliError::Parse(e.message().to_string()),
            }
        })?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        let mut cfg = Self::default();
        for (key, v) in &flat {
            cfg.set(key, v).map_err(|m| CliError::Parse(format!("line {}: {m}", line_of(text, key))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<(), String> {
        let (section, name) = key.split_once('.').ok_or_else(|| format!("unknown key `{key}`"))?;
        match (section, name) {
            ("params", "epsilon") => self.epsilon = float(key, v)?,
            ("params", "delta") => self.delta = float(key, v)?,
            ("params", "k_minus") => self.k_minus = float(key, v)?,
            ("params", "omega_tilde_plus") => self.omega_tilde_plus = float(key, v)?,
            ("params", "k_plus") => self.k_plus = float(key, v)?,
            ("coeffs", n) => {
                *coeff_slot(&mut self.coeffs, n).ok_or_else(|| format!("unknown key `{key}`"))? = float(key, v)?
            }
            ("mesh", "left_factor") => self.solver.mesh.left_factor = float(key, v)?,
            ("mesh", "right_factor") => self.solver.mesh.right_factor = float(key, v)?,
            ("mesh", "h_core") => self.solver.mesh.h_core = float(key, v)?,
            ("mesh", "core_left") => self.solver.mesh.core_left = float(key, v)?,
            ("mesh", "core_right") => self.solver.mesh.core_right = float(key, v)?,
            ("mesh", "transition") => self.solver.mesh.transition = float(key, v)?,
            ("mesh", "h_far_max") => self.solver.mesh.h_far_max = float(key, v)?,
            ("mesh", "far_fraction") => self.solver.mesh.far_fraction = float(key, v)?,
            ("mesh", "collocation_order") => self.solver.mesh.collocation_order = uint(key, v)?,
            ("solver", "tol") => self.solver.tol = float(key, v)?,
            ("solver", "max_iter") => self.solver.max_iter = uint(key, v)?,
            ("solver", "a_mid") => self.solver.a_mid = float(key, v)?,
            ("verify", "residual_tol") => self.verify.residual_tol = float(key, v)?,
            ("verify", "wg_tol") => self.verify.wg_tol = float(key, v)?,
            ("verify", "bc_tol") => self.verify.bc_tol = float(key, v)?,
            ("verify", "phase_tol") => self.verify.phase_tol = float(key, v)?,
            ("verify", "mu_tol") => self.verify.mu_tol = float(key, v)?,
            ("verify", "fit_rel_tol") => self.verify.fit_rel_tol = float(key, v)?,
            ("verify", "a_plus_min_ratio") => self.verify.a_plus_min_ratio = float(key, v)?,
            ("spectral", "block") => self.spectral.block = uint(key, v)?,
            ("spectral", "max_iter") => self.spectral.max_iter = uint(key, v)?,
            ("spectral", "rel_tol") => self.spectral.rel_tol = float(key, v)?,
            ("spectral", "w1_tol") => self.w1_tol = float(key, v)?,
            ("sweep", "epsilon") => self.sweep_epsilon = floats(key, v)?,
            ("sweep", "delta") => self.sweep_delta = floats(key, v)?,
            ("sweep", "phi") => self.sweep_phi = floats(key, v)?,
            ("sweep", "steps") => self.sweep_steps = uint(key, v)?,
            ("family", "unchecked") => {
                self.family_unchecked = v.as_bool().ok_or_else(|| format!("`{key}` expects true or false"))?
            }
            ("run", "out_dir") => self.out_dir = string(key, v)?,
            ("run", "threads") => self.threads = uint(key, v)?,
            ("run", "seed") => self.seed = uint(key, v)? as u64,
            ("run", "hook_scale") => self.hook_scale = float(key, v)?,
            ("input", "solution") => self.input_solution = Some(string(key, v)?),
            ("input", "coefficients") => self.input_coefficients = Some(string(key, v)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks value ranges; each violation names its key.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        let positive = [
            ("params.epsilon", self.epsilon),
            ("params.delta", self.delta),
            ("solver.tol", self.solver.tol),
            ("verify.residual_tol", self.verify.residual_tol),
            ("verify.wg_tol", self.verify.wg_tol),
            ("verify.bc_tol", self.verify.bc_tol),
            ("verify.phase_tol", self.verify.phase_tol),
            ("verify.mu_tol", self.verify.mu_tol),
            ("verify.fit_rel_tol", self.verify.fit_rel_tol),
            ("verify.a_plus_min_ratio", self.verify.a_plus_min_ratio),
            ("spectral.rel_tol", self.spectral.rel_tol),
            ("spectral.w1_tol", self.w1_tol),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                bad.push(format!("{k} must be > 0, got {v}"));
            }
        }
        for (k, l) in
            [("sweep.epsilon", &self.sweep_epsilon), ("sweep.delta", &self.sweep_delta), ("sweep.phi", &self.sweep_phi)]
        {
            if l.is_empty() {
                bad.push(format!("{k} must not be empty"));
            }
        }
        if self.sweep_epsilon.iter().chain(&self.sweep_delta).any(|v| !(*v > 0.0)) {
            bad.push("sweep.epsilon and sweep.delta entries must be > 0".into());
        }
        let finite = [
            ("params.k_minus", self.k_minus),
            ("params.omega_tilde_plus", self.omega_tilde_plus),
            ("params.k_plus", self.k_plus),
            ("solver.a_mid", self.solver.a_mid),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                bad.push(format!("{k} must be finite, got {v}"));
            }
        }
        if self.sweep_phi.iter().any(|v| !v.is_finite()) {
            bad.push("sweep.phi entries must be finite".into());
        }
        if self.sweep_steps == 0 {
            bad.push("sweep.steps must be >= 1".into());
        }
        if self.solver.max_iter == 0 || self.spectral.max_iter == 0 || self.spectral.block == 0 {
            bad.push("solver.max_iter, spectral.max_iter and spectral.block must be >= 1".into());
        }
        if !(self.hook_scale >= 0.0) {
            bad.push(format!("run.hook_scale must be >= 0, got {}", self.hook_scale));
        }
        if let Err(e) = self.solver.mesh.validate() {
            bad.push(e.to_string());
        }
        if !self.coeffs.all_finite() {
            bad.push("coeffs must be finite".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Precondition(bad.join("; ")))
        }
    }

    pub fn params(&self) -> Result<ModelParams64, CliError> {
        Ok(ModelParams::new(self.epsilon, self.delta)?
            .with_k_minus(self.k_minus)
            .with_omega_tilde_plus(self.omega_tilde_plus)
            .with_coeffs(self.coeffs))
    }

    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("params.epsilon", num(self.epsilon));
        put("params.delta", num(self.delta));
        put("params.k_minus", num(self.k_minus));
        put("params.omega_tilde_plus", num(self.omega_tilde_plus));
        put("params.k_plus", num(self.k_plus));
        for j in 1..=8 {
            put(&format!("coeffs.d{j}"), num(self.coeffs.d[j - 1]));
        }
        for j in 0..12 {
            put(&format!("coeffs.c{j}"), num(self.coeffs.c[j]));
        }
        let mut k = self.coeffs;
        for n in COEFF_NAMES {
            let v = *coeff_slot(&mut k, n).expect("named coefficient");
            put(&format!("coeffs.{n}"), num(v));
        }
        let m = &self.solver.mesh;
        put("mesh.left_factor", num(m.left_factor));
        put("mesh.right_factor", num(m.right_factor));
        put("mesh.h_core", num(m.h_core));
        put("mesh.core_left", num(m.core_left));
        put("mesh.core_right", num(m.core_right));
        put("mesh.transition", num(m.transition));
        put("mesh.h_far_max", num(m.h_far_max));
        put("mesh.far_fraction", num(m.far_fraction));
        put("mesh.collocation_order", m.collocation_order.to_string());
        put("solver.tol", num(self.solver.tol));
        put("solver.max_iter", self.solver.max_iter.to_string());
        put("solver.a_mid", num(self.solver.a_mid));
        let v = &self.verify;
        put("verify.residual_tol", num(v.residual_tol));
        put("verify.wg_tol", num(v.wg_tol));
        put("verify.bc_tol", num(v.bc_tol));
        put("verify.phase_tol", num(v.phase_tol));
        put("verify.mu_tol", num(v.mu_tol));
        put("verify.fit_rel_tol", num(v.fit_rel_tol));
        put("verify.a_plus_min_ratio", num(v.a_plus_min_ratio));
        put("spectral.block", self.spectral.block.to_string());
        put("spectral.max_iter", self.spectral.max_iter.to_string());
        put("spectral.rel_tol", num(self.spectral.rel_tol));
        put("spectral.w1_tol", num(self.w1_tol));
        put("sweep.epsilon", list(&self.sweep_epsilon));
        put("sweep.delta", list(&self.sweep_delta));
        put("sweep.phi", list(&self.sweep_phi));
        put("sweep.steps", self.sweep_steps.to_string());
        put("family.unchecked", self.family_unchecked.to_string());
        put("run.out_dir", quoted(&self.out_dir));
        put("run.threads", self.threads.to_string());
        put("run.seed", self.seed.to_string());
        put("run.hook_scale", num(self.hook_scale));
        if let Some(s) = &self.input_solution {
            put("input.solution", quoted(s));
        }
        if let Some(s) = &self.input_coefficients {
            put("input.coefficients", quoted(s));
        }
        out
    }

    /// The config as text that parses back to an identical value.
    pub fn serialize(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Config lines prefixed with `prefix`, for file headers.
    pub fn echo(&self, prefix: &str) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{prefix}{k} = {v}\n")).collect()
    }
}
