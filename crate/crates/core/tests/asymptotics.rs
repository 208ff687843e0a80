use num_complex::Complex;
use wallforge_core::asymptotics::*;
use wallforge_core::model::{ModelParams, NormalFormCoeffs};

fn coeffs() -> NormalFormCoeffs<f64> {
    let k = NormalFormCoeffs { alpha: 0.3, beta: -0.2, gamma: 0.1, delta_c: 0.4, ..NormalFormCoeffs::default() };
    k.with_consistent_sigmas()
}

const GRID_EPS: [f64; 5] = [0.02, 0.05, 0.08, 0.12, 0.16];
const GRID_K: [f64; 5] = [-0.3, -0.12, 0.04, 0.15, 0.3];

#[test]
fn equilibrium_newton_matches_expansion() {
    for e in GRID_EPS {
        for k in GRID_K {
            let p = ModelParams::new(e, 0.6).unwrap().with_coeffs(coeffs()).with_k_minus(k);
            let n = equilibrium_minus(&p, Mode::Newton).unwrap();
            let x = equilibrium_minus(&p, Mode::Expansion).unwrap();
            let bound = 5.0 * (e * e * k.abs().powi(3) + e.powi(4));
            assert!((n.a0_minus - x.a0_minus).abs() <= bound, "eps {e} k {k}");
            assert!(n.a0_minus > 0.0 && n.a0_minus <= 1.1);
        }
    }
}

#[test]
fn periodic_newton_matches_expansion() {
    for e in GRID_EPS {
        for k in GRID_K {
            let p = ModelParams::new(e, 0.6).unwrap().with_coeffs(coeffs());
            let n = periodic_plus(&p, k, Mode::Newton).unwrap();
            let x = periodic_plus(&p, k, Mode::Expansion).unwrap();
            let bound = 5.0 * (k.abs() + e * e).powi(4);
            assert!((n.r0 * n.r0 - x.r0 * x.r0).abs() <= bound, "eps {e} k {k}");
            assert!(n.r0 > 0.0 && n.r0 <= 1.1);
            assert!((n.r1 / n.r0).abs() <= e);
        }
    }
}

#[test]
fn eigen_counts_and_symmetry() {
    for e in [0.01, 0.05, 0.1, 0.2] {
        for d in [1.0 / 3.0, 0.5, 0.75, 1.0] {
            let p = ModelParams::new(e, d).unwrap();
            for es in [linearize_at_minus(&p).unwrap(), linearize_at_plus(&p).unwrap()] {
                let roots = es.roots();
                for l in &roots {
                    assert!(roots.iter().any(|m| (m + l).norm() < 1e-12), "{l} has no mirror");
                }
            }
            assert_eq!(linearize_at_minus(&p).unwrap().unstable_dim, 3);
            assert_eq!(linearize_at_plus(&p).unwrap().stable_dim, 3);
        }
    }
}

#[test]
fn closed_form_roots() {
    let p = ModelParams::new(0.1, 0.6).unwrap();
    let m = linearize_at_minus(&p).unwrap();
    for l in m.a_block_roots {
        let l4 = l.powu(4);
        assert!((l4 + 2.0).norm() < 1e-10);
    }
    let prod: Complex<f64> = m.a_block_roots.iter().product();
    assert!((prod - 2.0).norm() < 1e-12);
    let mut b: Vec<f64> = m.b_block_roots.iter().map(|z| z.re).collect();
    b.sort_by(f64::total_cmp);
    assert!((b[0] + 0.06).abs() < 1e-12 && (b[1] - 0.06).abs() < 1e-12);

    let q = linearize_at_plus(&p).unwrap();
    for l in q.a_block_roots {
        assert!((l.powu(4) + 0.36).norm() < 1e-10);
        assert!((l.norm() - 0.6f64.sqrt()).abs() < 1e-12);
        assert!((l.re.abs() - 0.3f64.sqrt()).abs() < 1e-12);
    }
    let mut b: Vec<f64> = q.b_block_roots.iter().map(|z| z.re).collect();
    b.sort_by(f64::total_cmp);
    assert!((b[1] - 0.1 * 2f64.sqrt()).abs() < 1e-12 && (b[0] + b[1]).abs() < 1e-15);
}

#[test]
fn fit_recovers_exponentials() {
    let xs: Vec<f64> = (0..=40).map(|i| 10.0 + 0.25 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (-0.5 * x).exp()).collect();
    let f = decay_rate_fit(&xs, &ys, 0..xs.len()).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-10);
    let xs: Vec<f64> = (0..=40).map(|i| -40.0 + 0.5 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * (0.06 * x).exp()).collect();
    let f = decay_rate_fit(&xs, &ys, 0..xs.len()).unwrap();
    assert!((f.slope - 0.06).abs() < 1e-10);
    assert!(decay_rate_fit(&xs, &ys, 0..5).is_err());
    let mut bad = ys.clone();
    bad[3] = 0.0;
    assert!(decay_rate_fit(&xs, &bad, 0..xs.len()).is_err());
}
