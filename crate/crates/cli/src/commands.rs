//! One function per command. Each writes its artifacts under `out` and
//! returns the paths it wrote.

use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use wallforge_core::asymptotics::{
    equilibrium_minus, linearize_at_minus, linearize_at_plus, periodic_plus, EigenStructure, Mode,
};
use wallforge_core::bifurcation::{
    coefficient_table, equal_wavenumber_solution, family_sample, quadrature, wall_family, EqualWavenumber, Integrand,
};
use wallforge_core::heteroclinic::{continue_in_parameter, read_solution, solve, verify_solution, write_solution};
use wallforge_core::model::PerturbationHook;
use wallforge_core::spectral::{assemble_lg, assemble_mg, compute_w1, kernel_diagnostics, KernelReport};
use wallforge_core::{BifurcationCoefficients64, Error as CoreError, HeteroclinicSolution64};

use crate::config::{num, RunConfig};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Asymptotics,
    HetSolve,
    Continue,
    Spectral,
    Coefficients,
    Family,
    Verify,
    Report,
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub message: String,
}

pub const ASYMPTOTICS: &str = "asymptotics.txt";
pub const SOLUTION: &str = "solution.txt";
pub const VERIFY: &str = "verify.txt";
pub const TRACE: &str = "trace.txt";
pub const SWEEP: &str = "sweep";
pub const SPECTRAL: &str = "spectral.json";
pub const COEFFICIENTS: &str = "coefficients.txt";
pub const FAMILY: &str = "family.csv";
pub const REPORT: &str = "report.txt";

pub fn run(cmd: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    if cmd == Command::Report {
        return report(cfg, out);
    }
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    match cmd {
        Command::Asymptotics => asymptotics(cfg, out),
        Command::HetSolve => het_solve(cfg, out),
        Command::Continue => continuation(cfg, out),
        Command::Spectral => spectral(cfg, out),
        Command::Coefficients => coefficients(cfg, out),
        Command::Family => family(cfg, out),
        Command::Verify => verify(cfg, out),
        Command::Report => unreachable!(),
    }
}

fn write(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(())
}

fn header(cfg: &RunConfig, what: &str) -> String {
    format!("# wallforge {what}\n{}", cfg.echo("# "))
}

fn obtain_solution(cfg: &RunConfig) -> Result<HeteroclinicSolution64, CliError> {
    match &cfg.input_solution {
        Some(s) => {
            let path = cfg.resolve(s);
            let f = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
            Ok(read_solution(BufReader::new(f))?)
        }
        None => Ok(solve(&cfg.params()?, &cfg.solver)?),
    }
}

fn trace_text(cfg: &RunConfig, e: &CoreError) -> Option<String> {
    let CoreError::NonConvergence { trace, .. } = e else { return None };
    let mut s = header(cfg, "newton trace");
    s.push_str("# iteration residual step_length\n");
    for r in trace {
        let _ = writeln!(s, "{} {:.16e} {:.16e}", r.iteration, r.residual, r.step_length);
    }
    Some(s)
}

fn roots_line(s: &mut String, key: &str, roots: impl Iterator<Item = (f64, f64)>) {
    let items: Vec<String> = roots.map(|(re, im)| format!("[{}, {}]", num(re), num(im))).collect();
    let _ = writeln!(s, "{key} = [{}]", items.join(", "));
}

fn eigen_lines(s: &mut String, side: &str, es: &EigenStructure<f64>) {
    roots_line(s, &format!("{side}.a_roots"), es.a_block_roots.iter().map(|z| (z.re, z.im)));
    roots_line(s, &format!("{side}.b_roots"), es.b_block_roots.iter().map(|z| (z.re, z.im)));
    let _ = writeln!(s, "{side}.unstable_dim = {}", es.unstable_dim);
    let _ = writeln!(s, "{side}.stable_dim = {}", es.stable_dim);
    let _ = writeln!(s, "{side}.center_dim = {}", es.center_dim);
}

fn asymptotics(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p = cfg.params()?;
    let hook = PerturbationHook::new(cfg.hook_scale, cfg.seed)?;
    let mut s = header(cfg, "boundary states and eigenstructure");
    for mode in [Mode::Expansion, Mode::Newton] {
        let m = equilibrium_minus(&p, mode)?;
        let _ = writeln!(s, "minus.{mode}.a0 = {}", num(m.a0_minus));
        let _ = writeln!(s, "minus.{mode}.b0 = {}", num(m.b0_minus));
        let _ = writeln!(s, "minus.{mode}.omega_tilde_sq = {}", num(m.omega_tilde_minus_sq));
    }
    for mode in [Mode::Expansion, Mode::Newton] {
        let q = periodic_plus(&p, cfg.k_plus, mode)?;
        let _ = writeln!(s, "plus.{mode}.r0 = {}", num(q.r0));
        let _ = writeln!(s, "plus.{mode}.r1 = {}", num(q.r1));
        let _ = writeln!(s, "plus.{mode}.k_plus = {}", num(q.k_plus));
        let _ = writeln!(s, "plus.{mode}.omega = {}", num(q.omega));
    }
    eigen_lines(&mut s, "minus", &linearize_at_minus(&p)?);
    eigen_lines(&mut s, "plus", &linearize_at_plus(&p)?);
    let _ = writeln!(s, "hook.scale = {}", num(hook.scale()));
    let _ = writeln!(s, "hook.seed = {}", hook.seed());
    let mut files = Vec::new();
    write(out.join(ASYMPTOTICS), &s, &mut files)?;
    Ok(Outcome { files, message: "boundary states written".into() })
}

fn het_solve(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let mut files = Vec::new();
    let sol = match solve(&cfg.params()?, &cfg.solver) {
        Ok(s) => s,
        Err(e) => {
            if let Some(t) = trace_text(cfg, &e) {
                write(out.join(TRACE), &t, &mut files)?;
            }
            return Err(e.into());
        }
    };
    let mut buf = Vec::new();
    write_solution(&sol, &mut buf, &cfg.entries()).map_err(|e| CliError::Io(e.to_string()))?;
    let text = String::from_utf8(buf).expect("solution text is ascii");
    write(out.join(SOLUTION), &text, &mut files)?;
    let rep = verify_solution(&sol, &cfg.verify);
    write_verify(cfg, &rep, out, &mut files)?;
    if !rep.passed() {
        return Err(CliError::Invariant(format!("verification failed, see {}", out.join(VERIFY).display())));
    }
    Ok(Outcome {
        files,
        message: format!("converged in {} iterations, residual {:.3e}", sol.iterations, sol.newton_residual),
    })
}

fn write_verify(
    cfg: &RunConfig,
    rep: &wallforge_core::heteroclinic::VerificationReport,
    out: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<(), CliError> {
    let mut s = header(cfg, "verification report");
    s.push_str(&rep.to_string());
    let _ = writeln!(s, "overall = {}", if rep.passed() { "pass" } else { "FAIL" });
    write(out.join(VERIFY), &s, files)
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var("WALLFORGE_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::Precondition(format!("WALLFORGE_THREADS must be a non-negative integer, got `{v}`"))
        })?,
        Err(_) => cfg.threads,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Precondition(format!("thread pool: {e}")))
}

struct SweepItem {
    file: String,
    text: String,
    summary: Vec<String>,
    failure: Option<CliError>,
}

fn sweep_item(cfg: &RunConfig, base: &HeteroclinicSolution64, eps: f64, delta: f64) -> SweepItem {
    let file = format!("eps_{eps:.6}_delta_{delta:.6}.txt");
    let mut item = SweepItem { file, text: header(cfg, "continuation"), summary: Vec::new(), failure: None };
    let target = match base.params.with_eps_delta(eps, delta) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(item.text, "# failed: {e}");
            item.failure = Some(e.into());
            return item;
        }
    };
    let (path, err) = match continue_in_parameter(base, &target, cfg.sweep_steps, &cfg.solver) {
        Ok(path) => (path, None),
        Err(f) => {
            let _ = writeln!(item.text, "# failed at t = {:.6}: {}", f.t_failed, f.error);
            (f.completed, Some(f.error))
        }
    };
    let _ = writeln!(item.text, "# step epsilon delta newton_residual iterations a1");
    for (i, s) in path.iter().enumerate() {
        let a1 = quadrature(s, Integrand::SecondSquared).map_or(f64::NAN, |r| r.value);
        let line = format!(
            "{i} {} {} {:.6e} {} {}",
            num(s.params.epsilon()),
            num(s.params.delta()),
            s.newton_residual,
            s.iterations,
            num(a1)
        );
        let _ = writeln!(item.text, "{line}");
        item.summary.push(line);
    }
    if let Some(last) = path.last().filter(|_| err.is_none()) {
        let mut buf = Vec::new();
        if write_solution(last, &mut buf, &[]).is_ok() {
            item.text.push_str("# final solution\n");
            for line in String::from_utf8_lossy(&buf).lines() {
                let _ = writeln!(item.text, "{line}");
            }
        }
    }
    item.failure = err.map(CliError::from);
    item
}

fn continuation(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let base = obtain_solution(cfg)?;
    let targets: Vec<(f64, f64)> =
        cfg.sweep_epsilon.iter().flat_map(|e| cfg.sweep_delta.iter().map(move |d| (*e, *d))).collect();
    let items: Vec<SweepItem> =
        pool(cfg)?.install(|| targets.par_iter().map(|(e, d)| sweep_item(cfg, &base, *e, *d)).collect());
    let dir = out.join(SWEEP);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut files = Vec::new();
    let mut summary = header(cfg, "continuation summary");
    summary.push_str("# target step epsilon delta newton_residual iterations a1\n");
    let mut first_failure = None;
    for it in items {
        write(dir.join(&it.file), &it.text, &mut files)?;
        for line in &it.summary {
            let _ = writeln!(summary, "{} {line}", it.file);
        }
        if let Some(f) = it.failure {
            let _ = writeln!(summary, "{} failed: {f}", it.file);
            first_failure.get_or_insert(f);
        }
    }
    write(dir.join("summary.txt"), &summary, &mut files)?;
    match first_failure {
        Some(f) => Err(f),
        None => Ok(Outcome { files, message: format!("{} sweep targets written", targets.len()) }),
    }
}

fn kernel_json(r: &KernelReport<f64>) -> Value {
    json!({
        "smallest_singulars": r.smallest_singulars,
        "kernel_angle": r.kernel_angle,
        "spectral_gap": r.spectral_gap,
        "iterations": r.iterations,
        "shifts": r.shifts,
    })
}

fn config_json(cfg: &RunConfig) -> Value {
    Value::Object(cfg.entries().into_iter().map(|(k, v)| (k, Value::String(v))).collect::<Map<_, _>>())
}

fn spectral(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let sol = obtain_solution(cfg)?;
    let mg = kernel_diagnostics(&assemble_mg(&sol)?, &sol, &cfg.spectral)?;
    let lg = kernel_diagnostics(&assemble_lg(&sol)?, &sol, &cfg.spectral)?;
    let w1 = compute_w1(&sol, cfg.coeffs.c[9], cfg.w1_tol)?;
    let doc = json!({
        "config": config_json(cfg),
        "mg": kernel_json(&mg),
        "lg": kernel_json(&lg),
        "w1": {
            "integral": w1.integral,
            "compatibility_defect": w1.compatibility_defect,
            "rhs_norm": w1.rhs_norm,
            "relative_defect": w1.compatibility_defect / w1.rhs_norm,
            "l2_norm": w1.l2_norm,
            "max_norm": w1.max_norm,
        },
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let mut files = Vec::new();
    write(out.join(SPECTRAL), &text, &mut files)?;
    Ok(Outcome {
        files,
        message: format!(
            "Mg sigma_1 = {:.3e}, Lg sigma_1 = {:.3e}",
            mg.smallest_singulars[0], lg.smallest_singulars[0]
        ),
    })
}

fn stated_key(name: &str) -> &'static str {
    match name {
        "a2" => "a2",
        "a3" => "a3",
        "sigma0'/sigma0" => "sigma_ratio",
        "int (A-chi)A'" => "chi_slope_integral",
        _ => "cutoff_integral",
    }
}

/// Coefficient table as `name = value  # provenance` lines.
pub fn coefficient_text(cfg: &RunConfig, bc: &BifurcationCoefficients64) -> String {
    let mut s = header(cfg, "bifurcation coefficients");
    let _ = writeln!(s, "epsilon = {}", num(bc.epsilon));
    let _ = writeln!(s, "g = {}", num(bc.g));
    for (name, v, prov) in bc.rows() {
        let _ = writeln!(s, "{name} = {}  # {prov}", num(v));
    }
    let _ = writeln!(s, "sigma_ratio = {}  # sigma0'/sigma0", num(bc.sigma_ratio));
    let _ = writeln!(s, "d2_minus_d4 = {}  # input", num(bc.d2_minus_d4));
    s.push_str("# computed against stated constants; flagged when the relative discrepancy exceeds 0.1\n");
    for pc in bc.stated_constants() {
        let k = stated_key(pc.name);
        let _ = writeln!(
            s,
            "stated.{k} = {{ computed = {}, stated = {}, relative_discrepancy = {}, flagged = {} }}  # {}",
            num(pc.computed),
            num(pc.stated),
            num(pc.relative_discrepancy),
            pc.flagged,
            pc.name
        );
    }
    let _ = writeln!(s, "check.a1_positive = {}", bc.a1 > 0.0);
    let _ = writeln!(s, "check.delta_positive = {}", bc.discriminant > 0.0);
    let _ = writeln!(s, "check.a2_consistency = {}  # |a2 - (int (A-chi)A' - a3)|", num(bc.a2_consistency()));
    s
}

/// Reads a coefficient file written by `coefficients`; only scalar fields are restored.
pub fn parse_coefficients(text: &str) -> Result<BifurcationCoefficients64, CliError> {
    let table: toml::Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Parse(format!("coefficient file: {}", e.message())))?;
    let mut bc = BifurcationCoefficients64::default();
    let mut missing = Vec::new();
    {
        let mut take = |name: &str, slot: &mut f64| match table.get(name) {
            Some(toml::Value::Float(v)) => *slot = *v,
            Some(toml::Value::Integer(v)) => *slot = *v as f64,
            _ => missing.push(name.to_string()),
        };
        take("epsilon", &mut bc.epsilon);
        take("g", &mut bc.g);
        take("a0", &mut bc.a0);
        take("a0_prime", &mut bc.a0_prime);
        take("a0_dblprime", &mut bc.a0_dblprime);
        take("a1", &mut bc.a1);
        take("a1_prime", &mut bc.a1_prime);
        take("a2", &mut bc.a2);
        take("a2_prime", &mut bc.a2_prime);
        take("a3", &mut bc.a3);
        take("a3_prime", &mut bc.a3_prime);
        take("a3_dblprime", &mut bc.a3_dblprime);
        take("a4", &mut bc.a4);
        take("a5", &mut bc.a5);
        take("sigma0", &mut bc.sigma0);
        take("sigma0_prime", &mut bc.sigma0_prime);
        take("sigma_ratio", &mut bc.sigma_ratio);
        take("d2_minus_d4", &mut bc.d2_minus_d4);
        take("Delta", &mut bc.discriminant);
        take("gamma1", &mut bc.gamma1);
        take("gamma2", &mut bc.gamma2);
    }
    if missing.is_empty() {
        Ok(bc)
    } else {
        Err(CliError::Parse(format!("coefficient file lacks {}", missing.join(", "))))
    }
}

fn coefficients(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let sol = obtain_solution(cfg)?;
    let bc = coefficient_table(&sol, &cfg.coeffs)?;
    let mut files = Vec::new();
    write(out.join(COEFFICIENTS), &coefficient_text(cfg, &bc), &mut files)?;
    let mut bad = Vec::new();
    if !(bc.a1 > 0.0) {
        bad.push(format!("a1 = {:e} is not positive", bc.a1));
    }
    if !(bc.discriminant > 0.0) {
        bad.push(format!("Delta = {:e} is not positive", bc.discriminant));
    }
    if !bad.is_empty() {
        return Err(CliError::Invariant(bad.join("; ")));
    }
    Ok(Outcome { files, message: format!("a1 = {:.6e}, Delta = {:.6e}", bc.a1, bc.discriminant) })
}

fn family(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let p = cfg.params()?;
    let bc = match &cfg.input_coefficients {
        Some(f) => {
            let path = cfg.resolve(f);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let bc = parse_coefficients(&text)?;
            if (bc.epsilon - p.epsilon()).abs() > 1e-14 * p.epsilon() {
                return Err(CliError::Precondition(format!(
                    "coefficient file is for epsilon = {}, config has params.epsilon = {}",
                    bc.epsilon,
                    p.epsilon()
                )));
            }
            bc
        }
        None => coefficient_table(&obtain_solution(cfg)?, &cfg.coeffs)?,
    };
    if bc.a5 == 0.0 {
        let alt = match equal_wavenumber_solution(&bc, &p) {
            EqualWavenumber::Solution(z) => format!("z = {z:e}"),
            EqualWavenumber::Absent(why) => format!("no solution: {why}"),
        };
        return Err(CliError::Degenerate(format!("a5 = 0; use equal_wavenumber_solution instead ({alt})")));
    }
    let samples = if cfg.family_unchecked {
        cfg.sweep_phi.iter().map(|phi| family_sample(&bc, &p, *phi)).collect::<Result<Vec<_>, _>>()?
    } else {
        wall_family(&bc, &p, &cfg.sweep_phi)?
    };
    let mut s = header(cfg, "wall family");
    let _ = writeln!(s, "# a5 = {}", num(bc.a5));
    let _ = writeln!(s, "# Delta = {}", num(bc.discriminant));
    let _ = writeln!(s, "# k_plus column is the bound eps^2 on |k+|");
    s.push_str("phi,z,k_minus,k_plus,residual\n");
    for w in &samples {
        let _ = writeln!(s, "{},{},{},{},{}", num(w.phi), num(w.z), num(w.k_minus), num(w.k_plus), num(w.residual));
    }
    let mut files = Vec::new();
    write(out.join(FAMILY), &s, &mut files)?;
    Ok(Outcome { files, message: format!("{} family samples", samples.len()) })
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    if cfg.input_solution.is_none() {
        return Err(CliError::Precondition("verify needs input.solution".into()));
    }
    let sol = obtain_solution(cfg)?;
    let rep = verify_solution(&sol, &cfg.verify);
    let mut files = Vec::new();
    write_verify(cfg, &rep, out, &mut files)?;
    if !rep.passed() {
        return Err(CliError::Invariant(format!("verification failed, see {}", out.join(VERIFY).display())));
    }
    Ok(Outcome { files, message: "all checks pass".into() })
}

const SECTIONS: [&str; 10] =
    ["params", "coeffs", "mesh", "solver", "verify", "spectral", "sweep", "family", "run", "input"];

/// Config echo lines, as written by [`RunConfig::echo`] and `write_solution`.
fn is_echo(line: &str) -> bool {
    line.strip_prefix("# ").and_then(|l| l.split_once('.')).is_some_and(|(sec, _)| SECTIONS.contains(&sec))
}

fn report(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let known = [ASYMPTOTICS, SOLUTION, VERIFY, TRACE, SPECTRAL, COEFFICIENTS, FAMILY, "sweep/summary.txt"];
    let present: Vec<&str> = known.iter().copied().filter(|f| out.join(f).is_file()).collect();
    if present.is_empty() {
        return Ok(Outcome { files: Vec::new(), message: "nothing to report".into() });
    }
    let mut s = header(cfg, "report");
    for name in present {
        let path = out.join(name);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let _ = writeln!(s, "\n== {name} ==");
        for l in text.lines().filter(|l| !is_echo(l)) {
            if name == SOLUTION && !l.starts_with('#') {
                // node rows stay in the solution file
                break;
            }
            let _ = writeln!(s, "{l}");
        }
    }
    let mut files = Vec::new();
    write(out.join(REPORT), &s, &mut files)?;
    Ok(Outcome { files, message: format!("report written to {}", out.join(REPORT).display()) })
}
