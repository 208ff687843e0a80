use std::sync::OnceLock;

use wallforge_core::heteroclinic::*;
use wallforge_core::model::{ModelParams, ReducedState, REDUCED_REVERSER};
use wallforge_core::{Error, HeteroclinicSolution64};

fn params() -> ModelParams<f64> {
    ModelParams::new(0.1, 0.6).unwrap()
}

fn reference() -> &'static HeteroclinicSolution64 {
    static SOL: OnceLock<HeteroclinicSolution64> = OnceLock::new();
    SOL.get_or_init(|| solve(&params(), &SolverConfig::default()).expect("reference solve"))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn guess_shape() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let g = initial_guess(&p, &m);
    let z = m.zero_index().unwrap();
    assert!((g.states[z][0] - 0.5).abs() < 1e-15);
    assert!((g.states[z][4] - 0.5).abs() < 1e-15);
    assert!((g.states[0][0] - 1.0).abs() < 1e-6 && g.states[0][4].abs() < 1e-6);
    for w in g.states.windows(2) {
        assert!(w[1][0] <= w[0][0] && w[1][4] >= w[0][4]);
    }
}

#[test]
fn constant_path_fails_only_the_right_condition() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let s = m.collocation_order;
    let mm = ReducedState::<f64>::m_minus().to_array();
    let path = DiscretePath { states: vec![mm; m.nodes.len()], stages: vec![[0.0; 6]; m.cells() * s], mu: 0.0 };
    let r = assemble_residual(&p, &m, &path, 1.0).unwrap();
    let n = r.len();
    assert_eq!(max_abs(&r[..n - 3]), 0.0);
    assert!(max_abs(&r[n - 3..]) > 0.1);
}

#[test]
fn dimension_mismatch_is_reported() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let mut g = initial_guess(&p, &m);
    g.stages.pop();
    assert!(matches!(assemble_residual(&p, &m, &g, 0.5), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn phase_condition_detects_shift() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let g = initial_guess(&p, &m);
    let shifted = DiscretePath { states: m.nodes.iter().map(|x| guess_state(x - 0.7, &p).0).collect(), ..g.clone() };
    let ra = assemble_residual(&p, &m, &g, 0.5).unwrap();
    let rb = assemble_residual(&p, &m, &shifted, 0.5).unwrap();
    let k = ra.len() - 4;
    assert_eq!(ra[k], 0.0);
    assert!(rb[k].abs() > 0.1);
}

#[test]
fn newton_direction_matches_finite_differences() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let col = Collocation::new(&p, &m, 0.5).unwrap();
    let g = initial_guess(&p, &m);
    let r0 = col.residual(&g).unwrap();
    let d = col.newton_direction(&g).unwrap();
    let mut errs = Vec::new();
    for h in [1e-4, 1e-5] {
        let mut t = g.clone();
        for (a, b) in t.states.iter_mut().zip(&d.states).chain(t.stages.iter_mut().zip(&d.stages)) {
            for k in 0..6 {
                a[k] += h * b[k];
            }
        }
        t.mu += h * d.mu;
        let r1 = col.residual(&t).unwrap();
        let e: Vec<f64> = r0.iter().zip(&r1).map(|(a, b)| (b - a) / h + a).collect();
        errs.push(max_abs(&e));
    }
    // J d = -r up to the O(h) truncation of the difference quotient.
    assert!(errs[1] < 1e-4 * max_abs(&r0), "{errs:?}");
    assert!(errs[1] < 0.2 * errs[0]);
}

#[test]
fn converges_at_reference_point() {
    let s = reference();
    assert!(s.newton_residual <= 1e-10);
    assert!(s.max_abs_wg() <= 1e-6);
    let n = s.states.len();
    assert!(s.states[1..n - 1].iter().all(|u| u.b0 > 0.0 && u.b1 > 0.0));
    let rep = verify_solution(s, &VerifyConfig::default());
    assert!(rep.passed(), "{rep}");
}

#[test]
fn decay_fits_at_reference_point() {
    let f = reference().decay_fits;
    let b = f.b_minus.unwrap();
    assert!((b.rate - 0.06).abs() <= 0.1 * 0.06, "B rate {}", b.rate);
    let a = f.a_plus.unwrap();
    assert!(a.rate >= 0.9 * 0.3f64.sqrt(), "A rate {}", a.rate);
    assert!(f.b_plus.unwrap().relative_error() < 0.1);
}

#[test]
fn vacuous_tolerance_returns_guess() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let g = initial_guess(&p, &m);
    let s = newton_solve(&p, &m, g.clone(), 1e30, 10, 0.5).unwrap();
    assert_eq!(s.iterations, 0);
    assert_eq!(s.path(), g);
    assert_eq!(s.trace.len(), 1);
}

#[test]
fn truncation_invariant_checked_before_iterating() {
    let p = params();
    let m = build_mesh(&p, &MeshConfig::default()).unwrap();
    let g = initial_guess(&p, &m);
    let short = Mesh { x_left: -50.0, nodes: m.nodes.iter().copied().filter(|x| *x >= -50.0).collect(), ..m.clone() };
    let mut short = short;
    short.nodes[0] = -50.0;
    let err = newton_solve(&p, &short, g, 1e-10, 10, 0.5).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

#[test]
fn noise_breaks_first_integral_check() {
    let mut s = reference().clone();
    for (i, u) in s.states.iter_mut().enumerate() {
        let mut v = u.to_array();
        for (k, x) in v.iter_mut().enumerate() {
            *x += if (i + k) % 2 == 0 { 1e-3 } else { -1e-3 };
        }
        *u = ReducedState::from_array(v);
    }
    let rep = verify_solution(&s, &VerifyConfig::default());
    assert!(!rep.get("max_abs_wg").unwrap().passed);
    assert!(!rep.passed());
}

#[test]
fn reversed_orbit_solves_the_same_equations() {
    let s = reference();
    let tol = 1e-10;
    let nodes: Vec<f64> = s.mesh.nodes.iter().rev().map(|x| -x).collect();
    let mesh = Mesh { x_left: nodes[0], x_right: *nodes.last().unwrap(), nodes, ..s.mesh.clone() };
    let flip = |u: &[f64; 6], sign: f64| {
        let mut o = *u;
        for k in 0..6 {
            o[k] *= sign * REDUCED_REVERSER[k] as f64;
        }
        o
    };
    let q = s.mesh.collocation_order;
    let states: Vec<[f64; 6]> = s.states.iter().rev().map(|u| flip(&u.to_array(), 1.0)).collect();
    let mut stages = Vec::with_capacity(s.stages.len());
    for cell in s.stages.chunks(q).rev() {
        stages.extend(cell.iter().rev().map(|k| flip(k, -1.0)));
    }
    let path = DiscretePath { states, stages, mu: -s.mu };
    let p = params();
    let col = Collocation::new(&p, &mesh, 0.5).unwrap();
    let r = col.residual(&path).unwrap();
    let n = r.len();
    // skip the boundary and phase rows
    assert!(max_abs(&r[3..n - 4]) <= 10.0 * tol, "{}", max_abs(&r[3..n - 4]));
}

fn rk4(p: &ModelParams<f64>, u0: [f64; 6], x_end: f64) -> [f64; 6] {
    let f = |u: &[f64; 6]| wallforge_core::model::reduced_field(u, p);
    let add = |a: &[f64; 6], b: &[f64; 6], w: f64| {
        let mut o = *a;
        for k in 0..6 {
            o[k] += w * b[k];
        }
        o
    };
    let steps = (x_end / 1e-3).round().max(1.0) as usize;
    let h = x_end / steps as f64;
    let mut u = u0;
    for _ in 0..steps {
        let k1 = f(&u);
        let k2 = f(&add(&u, &k1, h / 2.0));
        let k3 = f(&add(&u, &k2, h / 2.0));
        let k4 = f(&add(&u, &k3, h));
        for k in 0..6 {
            u[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
        }
    }
    u
}

#[test]
fn collocation_defect_vanishes_at_order() {
    let p = params();
    let s = reference();
    let u0 = s.states[s.mesh.zero_index().unwrap()].to_array();
    for order in [2usize, 4] {
        let mut defects = Vec::new();
        for cells in [8usize, 16] {
            let nodes: Vec<f64> = (0..=cells).map(|i| 4.0 * i as f64 / cells as f64).collect();
            let states: Vec<[f64; 6]> = nodes.iter().map(|x| rk4(&p, u0, *x)).collect();
            let mesh = Mesh { x_left: 0.0, x_right: 4.0, nodes, collocation_order: order };
            let col = Collocation::new(&p, &mesh, 0.5).unwrap();
            defects.push(col.reconstruct(&states, 0.0).unwrap().1);
        }
        let rate = (defects[0] / defects[1]).log2();
        assert!(rate >= order as f64 - 0.5, "order {order}: defects {defects:?}, rate {rate}");
    }
}

#[test]
fn mesh_refinement_convergence() {
    let p = params();
    let order = 2;
    let mc = MeshConfig { h_core: 0.5, h_far_max: 4.0, collocation_order: order, ..MeshConfig::default() };
    let mut mesh = build_mesh(&p, &mc).unwrap();
    let mut sols = Vec::new();
    for _ in 0..3 {
        let g = initial_guess(&p, &mesh);
        sols.push(newton_solve(&p, &mesh, g, 1e-12, 40, 0.5).unwrap());
        mesh = mesh.refined();
    }
    let diff = |a: &HeteroclinicSolution64, b: &HeteroclinicSolution64| {
        let mut d = 0.0f64;
        for (i, u) in a.states.iter().enumerate() {
            let v = b.states[2 * i];
            assert_eq!(a.mesh.nodes[i], b.mesh.nodes[2 * i]);
            for (x, y) in u.to_array().iter().zip(v.to_array()) {
                d = d.max((x - y).abs());
            }
        }
        d
    };
    let e1 = diff(&sols[0], &sols[1]);
    let e2 = diff(&sols[1], &sols[2]);
    let rate = (e1 / e2).log2();
    assert!(rate >= order as f64 - 0.5, "e1 {e1:e} e2 {e2:e} rate {rate}");
}

#[test]
fn file_round_trip_preserves_the_report() {
    let s = reference();
    let mut a = Vec::new();
    write_solution(s, &mut a, &[("config.tol".into(), "1e-11".into())]).unwrap();
    let mut b = Vec::new();
    write_solution(s, &mut b, &[("config.tol".into(), "1e-11".into())]).unwrap();
    assert_eq!(a, b);
    let back: HeteroclinicSolution64 = read_solution(&a[..]).unwrap();
    assert_eq!(back.mesh, s.mesh);
    assert_eq!(back.states, s.states);
    let cfg = VerifyConfig::default();
    assert_eq!(verify_solution(&back, &cfg), verify_solution(s, &cfg));
    assert!(read_solution::<f64, _>(&b"# format=other\n"[..]).is_err());
}

#[test]
fn noop_continuation_returns_the_input() {
    let s = reference();
    let out = continue_in_parameter(s, &s.params, 1, &SolverConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].iterations, 0);
    assert_eq!(out[0].states, s.states);
}

#[test]
fn continuation_in_delta_keeps_the_splitting() {
    let s = reference();
    let target = s.params.with_eps_delta(0.1, 0.35).unwrap();
    let out = continue_in_parameter(s, &target, 5, &SolverConfig::default()).unwrap();
    assert!((out.last().unwrap().params.delta() - 0.35).abs() < 1e-15);
    for sol in &out {
        let lm = wallforge_core::asymptotics::linearize_at_minus(&sol.params).unwrap();
        let lp = wallforge_core::asymptotics::linearize_at_plus(&sol.params).unwrap();
        assert_eq!((lm.unstable_dim, lm.stable_dim), (3, 3));
        assert_eq!((lp.unstable_dim, lp.stable_dim), (3, 3));
        assert!(verify_solution(sol, &VerifyConfig::default()).get("max_abs_wg").unwrap().passed);
    }
}

#[test]
fn continuation_rejects_other_changes() {
    let s = reference();
    let target = s.params.with_k_minus(0.01);
    let err = continue_in_parameter(s, &target, 2, &SolverConfig::default()).unwrap_err();
    assert!(err.completed.is_empty());
    assert!(matches!(err.error, Error::Precondition(_)));
}

#[test]
fn small_epsilon_falls_back_to_continuation() {
    let p = ModelParams::new(0.05, 0.5).unwrap();
    let s = solve(&p, &SolverConfig::default()).unwrap();
    assert_eq!(s.params.epsilon(), 0.05);
    assert!(s.newton_residual <= 1e-10);
    let rep = verify_solution(&s, &VerifyConfig::default());
    assert!(rep.passed(), "{rep}");
}
