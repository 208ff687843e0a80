//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wallforge::RunConfig;
use wallforge_core::asymptotics::{equilibrium_minus, linearize_at_minus, linearize_at_plus, periodic_plus, Mode};
use wallforge_core::bifurcation::{coefficient_table, family_sample};
use wallforge_core::heteroclinic::{solve, verify_solution, MeshConfig, SolverConfig, VerifyConfig};
use wallforge_core::model::{
    first_integral_raw, perturbed_field, reduced_field, ModelParams, NormalFormCoeffs, PERTURBED_REVERSER,
    REDUCED_REVERSER,
};
use wallforge_core::spectral::{assemble_lg, assemble_mg, compute_w1, kernel_diagnostics, InverseIterationConfig};
use wallforge_core::{BifurcationCoefficients64, HeteroclinicSolution64, ModelParams64};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn params(eps: f64, delta: f64) -> ModelParams64 {
    ModelParams::new(eps, delta).unwrap().with_coeffs(NormalFormCoeffs::default())
}

fn solved(eps: f64, delta: f64) -> HeteroclinicSolution64 {
    solve(&params(eps, delta), &SolverConfig::default()).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn reversibility() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let eps = rng.gen_range(0.01..0.3);
        let delta = rng.gen_range(0.1..2.0);
        let mut k = NormalFormCoeffs::default();
        for v in k.d.iter_mut().chain(k.c.iter_mut()) {
            *v = rng.gen_range(-2.0..2.0);
        }
        let p = ModelParams::new(eps, delta).unwrap().with_coeffs(k).with_k_minus(rng.gen_range(-0.5..0.5));
        let u: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let su: [f64; 6] = std::array::from_fn(|i| f64::from(REDUCED_REVERSER[i]) * u[i]);
        let (f, fs) = (reduced_field(&u, &p), reduced_field(&su, &p));
        let r: Vec<f64> = (0..6).map(|i| fs[i] + f64::from(REDUCED_REVERSER[i]) * f[i]).collect();
        worst = worst.max(norm(&r) / (1e-12 * (1.0 + norm(&f))));
        let w: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let sw: [f64; 8] = std::array::from_fn(|i| f64::from(PERTURBED_REVERSER[i]) * w[i]);
        let (g, gs) = (perturbed_field(&w, &p), perturbed_field(&sw, &p));
        let r: Vec<f64> = (0..8).map(|i| gs[i] + f64::from(PERTURBED_REVERSER[i]) * g[i]).collect();
        worst = worst.max(norm(&r) / (1e-12 * (1.0 + norm(&g))));
    }
    let secs = t.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1.0 && secs < 1.0,
        detail: format!("max ||F(Su)+SF(u)|| / (1e-12 (1+||F||)) = {worst:.3e} over 2x10^4 evaluations, {secs:.3} s"),
    }
}

/// Classical RK4 at fixed step; stops early once the state leaves `|u| < 1e6`.
fn rk4(p: &ModelParams64, u0: [f64; 6], span: f64, h: f64) -> Vec<(f64, [f64; 6])> {
    let f = |u: &[f64; 6]| reduced_field(u, p);
    let add = |u: &[f64; 6], k: &[f64; 6], w: f64| -> [f64; 6] { std::array::from_fn(|i| u[i] + w * k[i]) };
    let steps = (span / h).round() as usize;
    let mut u = u0;
    let mut out = vec![(0.0, u)];
    for n in 1..=steps {
        let k1 = f(&u);
        let k2 = f(&add(&u, &k1, h / 2.0));
        let k3 = f(&add(&u, &k2, h / 2.0));
        let k4 = f(&add(&u, &k3, h));
        u = std::array::from_fn(|i| u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        if !(norm(&u) < 1e6) {
            break;
        }
        out.push((n as f64 * h, u));
    }
    out
}

fn first_integral() -> Outcome {
    let t = Instant::now();
    let p = params(0.1, 0.6);
    let es = linearize_at_minus(&p).unwrap();
    // the real unstable direction is the B mode
    let v =
        es.basis.iter().zip(es.roots()).find(|(_, l)| l.re > 0.0 && l.im == 0.0).map(|(v, _)| v.map(|z| z.re)).unwrap();
    let s = 1e-3 / norm(&v);
    let u0: [f64; 6] = std::array::from_fn(|i| [1.0, 0.0, 0.0, 0.0, 0.0, 0.0][i] + s * v[i]);
    let w0 = first_integral_raw(&u0, &p);
    let path = rk4(&p, u0, 50.0, 1e-3);
    let mut drift = 0.0f64;
    for (_, u) in &path {
        drift = drift.max((first_integral_raw(u, &p) - w0).abs());
    }
    let reached = path.last().map_or(0.0, |(x, _)| *x);
    let secs = t.elapsed().as_secs_f64();
    let ended = if reached >= 50.0 - 1e-9 {
        "span completed".to_string()
    } else {
        let first =
            path.iter().find(|(_, u)| (first_integral_raw(u, &p) - w0).abs() > 1e-10).map_or(reached, |(x, _)| *x);
        format!("orbit leaves |u| < 1e6 at x = {reached:.2}, drift exceeds 1e-10 from x = {first:.2}")
    };
    Outcome {
        pass: reached >= 50.0 - 1e-9 && drift <= 1e-10 && secs < 5.0,
        detail: format!("|W_g| drift {drift:.3e} from M- + 1e-3 v_B; {ended}; {secs:.2} s"),
    }
}

fn eigenstructure() -> Outcome {
    let p = params(0.1, 0.6);
    let m = linearize_at_minus(&p).unwrap();
    let q = linearize_at_plus(&p).unwrap();
    let a_minus = m.a_block_roots.iter().map(|l| (l.powi(4).re + 2.0).hypot(l.powi(4).im)).fold(0.0, f64::max);
    let a_plus = q.a_block_roots.iter().map(|l| (l.powi(4).re + 0.36).hypot(l.powi(4).im)).fold(0.0, f64::max);
    let b = |es: &wallforge_core::asymptotics::EigenStructure<f64>, r: f64| {
        let mut re: Vec<f64> = es.b_block_roots.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let im = es.b_block_roots.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        (re[0] + r).abs().max((re[1] - r).abs()).max(im)
    };
    let b_minus = b(&m, 0.06);
    let b_plus = b(&q, 0.1f64 * 2f64.sqrt());
    let err = a_minus.max(a_plus).max(b_minus).max(b_plus);
    let dims = [m.unstable_dim, m.stable_dim, q.unstable_dim, q.stable_dim];
    Outcome {
        pass: err <= 1e-10 && dims == [3, 3, 3, 3],
        detail: format!(
            "|l^4+2| {a_minus:.1e}, |l^4+0.36| {a_plus:.1e}, B roots {b_minus:.1e}/{b_plus:.1e}; dims -: {}/{}, +: {}/{}",
            dims[0], dims[1], dims[2], dims[3]
        ),
    }
}

struct Solved {
    eps: f64,
    delta: f64,
    secs: f64,
    sol: Result<HeteroclinicSolution64, String>,
}

fn solves() -> Vec<Solved> {
    let mut out = Vec::new();
    for eps in [0.05_f64, 0.1] {
        for delta in [0.5, 0.6, 0.8] {
            let t = Instant::now();
            let sol = solve(&params(eps, delta), &SolverConfig::default()).map_err(|e| e.to_string());
            out.push(Solved { eps, delta, secs: t.elapsed().as_secs_f64(), sol });
        }
    }
    out
}

fn heteroclinic(runs: &[Solved]) -> Outcome {
    let cfg = VerifyConfig::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for r in runs {
        let tag = format!("({}, {})", r.eps, r.delta);
        let sol = match &r.sol {
            Ok(s) => s,
            Err(e) => {
                pass = false;
                notes.push(format!("{tag}: {e}"));
                continue;
            }
        };
        let rep = verify_solution(sol, &cfg);
        let val = |n: &str| rep.get(n).map_or(f64::NAN, |c| c.value);
        let ok = sol.newton_residual <= 1e-10
            && sol.max_abs_wg() <= 1e-6
            && val("a_positive") > 0.0
            && val("b_positive") > 0.0
            && val("b_prime_positive") > 0.0
            && r.secs <= 30.0;
        pass &= ok;
        notes.push(format!(
            "{tag}: res {:.1e} |W| {:.1e} minA {:.2e} minB {:.1e} minB' {:.1e} {} cells {:.2}s",
            sol.newton_residual,
            sol.max_abs_wg(),
            val("a_positive"),
            val("b_positive"),
            val("b_prime_positive"),
            sol.mesh.cells(),
            r.secs
        ));
    }
    Outcome { pass, detail: notes.join("; ") }
}

fn decay(runs: &[Solved]) -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for r in runs {
        let Ok(sol) = &r.sol else {
            pass = false;
            continue;
        };
        let f = &sol.decay_fits;
        let rate = |d: &Option<wallforge_core::heteroclinic::DecayFit<f64>>| d.as_ref().map_or(f64::NAN, |d| d.rate);
        let (bm, bp, ap) = (rate(&f.b_minus), rate(&f.b_plus), rate(&f.a_plus));
        let ebm = (bm / (r.eps * r.delta) - 1.0).abs();
        let ebp = (bp / (2f64.sqrt() * r.eps) - 1.0).abs();
        let rap = ap / (r.delta / 2.0).sqrt();
        pass &= ebm <= 0.1 && ebp <= 0.1 && rap >= 0.9;
        notes.push(format!("({}, {}): {ebm:.1e} {ebp:.1e} {rap:.3}", r.eps, r.delta));
    }
    Outcome { pass, detail: format!("rel err B-, rel err B+, A+ ratio: {}", notes.join("; ")) }
}

fn operators() -> Outcome {
    let sol = solved(0.1, 0.6);
    let cfg = InverseIterationConfig::default();
    let mg = kernel_diagnostics(&assemble_mg(&sol).unwrap(), &sol, &cfg).unwrap();
    let lg = kernel_diagnostics(&assemble_lg(&sol).unwrap(), &sol, &cfg).unwrap();
    let fine_cfg =
        SolverConfig { mesh: MeshConfig { h_core: 0.03, ..MeshConfig::default() }, ..SolverConfig::default() };
    let fine = solve(&params(0.1, 0.6), &fine_cfg).unwrap();
    let lg_fine = kernel_diagnostics(&assemble_lg(&fine).unwrap(), &fine, &cfg).unwrap();
    let w1 = compute_w1(&sol, sol.params.coeffs.c[9], 1e-6).unwrap();
    let angle = mg.kernel_angle.unwrap_or(f64::NAN);
    let gap = mg.spectral_gap.unwrap_or(f64::NAN);
    let (s, sf) = (lg.smallest_singulars[0], lg_fine.smallest_singulars[0]);
    let drift = (s - sf).abs() / sf;
    let defect = w1.compatibility_defect / w1.rhs_norm;
    Outcome {
        pass: angle <= 1e-3 && gap >= 1e3 && s > 0.0 && drift <= 0.01 && defect <= 1e-6,
        detail: format!(
            "Mg angle {angle:.2e} rad, gap {gap:.2e}; Lg sigma_min {s:.6} (h/2: {sf:.6}, change {drift:.1e}); w1 defect {defect:.1e}"
        ),
    }
}

fn coefficients(eps: f64) -> BifurcationCoefficients64 {
    coefficient_table(&solved(eps, 0.6), &NormalFormCoeffs::default()).unwrap()
}

fn scaling() -> Outcome {
    let table: Vec<(f64, BifurcationCoefficients64)> = [0.04, 0.08, 0.16].map(|e| (e, coefficients(e))).into();
    let ratios: Vec<f64> = table.iter().map(|(e, b)| b.a1 / e.powf(0.2)).collect();
    let band = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let a1_pos = table.iter().all(|(_, b)| b.a1 > 0.0);
    let delta_pos = table.iter().all(|(_, b)| b.discriminant > 0.0);
    let list = |f: &dyn Fn(&BifurcationCoefficients64) -> f64| {
        table.iter().map(|(e, b)| format!("{e}: {:.3e}", f(b))).collect::<Vec<_>>().join(", ")
    };
    Outcome {
        pass: a1_pos && band <= 25.0 && delta_pos,
        detail: format!("a1 [{}]; a1/eps^(1/5) band {band:.2}; Delta [{}]", list(&|b| b.a1), list(&|b| b.discriminant)),
    }
}

fn stated_constants() -> Outcome {
    let bc = coefficients(0.1);
    let rows: Vec<String> = bc
        .stated_constants()
        .iter()
        .map(|c| format!("{} {:.4} vs {}{}", c.name, c.computed, c.stated, if c.flagged { " [flag]" } else { "" }))
        .collect();
    let consistency = bc.a2_consistency();
    Outcome {
        pass: rows.len() == 5 && consistency <= 1e-8,
        detail: format!("{}; a2 consistency {consistency:.1e}", rows.join(", ")),
    }
}

fn family() -> Outcome {
    let phis = [-0.9_f64, -0.5, 0.0, 0.5, 0.9];
    let mut pass = true;
    let mut normalized = Vec::new();
    let mut notes = Vec::new();
    for eps in [0.1_f64, 0.05] {
        let bc = coefficients(eps);
        let p = params(eps, 0.6);
        let mut worst_z = 0.0f64;
        let mut worst_k = 0.0f64;
        let mut row = Vec::new();
        for phi in phis {
            assert!(phi.abs().exp() <= eps.powf(-0.4));
            let w = family_sample(&bc, &p, phi).unwrap();
            pass &= w.k_minus.abs() < eps && w.z.abs() < eps.powf(0.2) && w.k_minus.signum() == -bc.a5.signum();
            worst_z = worst_z.max(w.z.abs() / eps.powf(0.2));
            worst_k = worst_k.max(w.k_minus.abs() / eps);
            row.push(w.residual.abs() / eps.powf(2.8));
        }
        notes.push(format!("eps {eps}: a5 {:.2e}, max|z|/eps^(1/5) {worst_z:.2}, max|k-|/eps {worst_k:.3}", bc.a5));
        normalized.push(row);
    }
    let decreasing = normalized[0].iter().zip(&normalized[1]).all(|(a, b)| b < a);
    pass &= decreasing;
    let trend: Vec<String> = phis
        .iter()
        .enumerate()
        .map(|(i, phi)| format!("{phi}: {:.3}->{:.3}", normalized[0][i], normalized[1][i]))
        .collect();
    Outcome { pass, detail: format!("{}; |res|/eps^2.8 [{}]", notes.join("; "), trend.join(", ")) }
}

fn oracles() -> Outcome {
    let k = NormalFormCoeffs { alpha: 0.3, beta: -0.2, gamma: 0.1, delta_c: 0.4, ..NormalFormCoeffs::default() };
    let k = k.with_consistent_sigmas();
    let mut worst = 0.0f64;
    for e in [0.02_f64, 0.05, 0.08, 0.12, 0.16] {
        for kk in [-0.3_f64, -0.12, 0.04, 0.15, 0.3] {
            let p = ModelParams::new(e, 0.6).unwrap().with_coeffs(k).with_k_minus(kk);
            let n = equilibrium_minus(&p, Mode::Newton).unwrap();
            let x = equilibrium_minus(&p, Mode::Expansion).unwrap();
            worst = worst.max((n.a0_minus - x.a0_minus).abs() / (5.0 * (e * e * kk.abs().powi(3) + e.powi(4))));
            let n = periodic_plus(&p, kk, Mode::Newton).unwrap();
            let x = periodic_plus(&p, kk, Mode::Expansion).unwrap();
            worst = worst.max((n.r0 * n.r0 - x.r0 * x.r0).abs() / (5.0 * (kk.abs() + e * e).powi(4)));
        }
    }
    Outcome { pass: worst <= 1.0, detail: format!("worst error / bound = {worst:.3} over 25 points") }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse("params.epsilon = 0.1\nparams.delta = 0.6\n").unwrap();
    let mut outputs = Vec::new();
    for run in ["first", "second"] {
        let out = dir.path().join(run);
        let ok = wallforge::run(wallforge::Command::HetSolve, &cfg, &out).is_ok();
        let files: Vec<Vec<u8>> =
            ["solution.txt", "verify.txt"].iter().map(|f| fs::read(out.join(f)).unwrap_or_default()).collect();
        outputs.push((ok, files));
    }
    let same = outputs[0].1 == outputs[1].1 && outputs[0].1.iter().all(|f| !f.is_empty());
    let bytes: usize = outputs[0].1.iter().map(Vec::len).sum();
    Outcome {
        pass: outputs.iter().all(|o| o.0) && same,
        detail: format!("two het-solve runs: {bytes} bytes of output, identical = {same}"),
    }
}

fn main() -> ExitCode {
    let runs = solves();
    let criteria: Vec<Criterion> = vec![
        ("reversibility identity", Box::new(reversibility)),
        ("first-integral conservation", Box::new(first_integral)),
        ("eigenstructure closed forms", Box::new(eigenstructure)),
        ("heteroclinic solves", Box::new(|| heteroclinic(&runs))),
        ("decay-rate fits", Box::new(|| decay(&runs))),
        ("operator structure", Box::new(operators)),
        ("coefficient scaling", Box::new(scaling)),
        ("stated-constant report", Box::new(stated_constants)),
        ("family consistency", Box::new(family)),
        ("boundary-state oracles", Box::new(oracles)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
