use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wallforge_core::model::*;

fn params(coeffs: NormalFormCoeffs<f64>) -> ModelParams<f64> {
    ModelParams::new(0.1, 0.6).unwrap().with_coeffs(coeffs).with_k_minus(0.07).with_omega_tilde_plus(0.05)
}

fn random_coeffs(rng: &mut ChaCha8Rng) -> NormalFormCoeffs<f64> {
    let mut k = NormalFormCoeffs::zero();
    for v in k.d.iter_mut().chain(k.c.iter_mut()) {
        *v = rng.gen_range(-1.0..1.0);
    }
    k.sigma0 = rng.gen_range(-1.0..1.0);
    k.alpha = rng.gen_range(-1.0..1.0);
    k.beta = rng.gen_range(-1.0..1.0);
    k.gamma = rng.gen_range(-1.0..1.0);
    k.delta_c = rng.gen_range(-1.0..1.0);
    k.with_consistent_sigmas()
}

fn norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn reversibility_on_seeded_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = params(random_coeffs(&mut rng));
    for _ in 0..10_000 {
        let u: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let s = ReducedState::from_array(u);
        let f = reduced_rhs(&s, &p).to_array();
        let lhs = reduced_rhs(&s.reversed(), &p).to_array();
        let sf = ReducedState::from_array(f).reversed().to_array();
        let defect: [f64; 6] = std::array::from_fn(|i| lhs[i] + sf[i]);
        assert!(norm(&defect) <= 1e-12 * (1.0 + norm(&f)));

        let w: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let s = PerturbedState::from_array(w);
        let f = perturbed_rhs(0.3, &s, &p).to_array();
        let lhs = perturbed_rhs(0.3, &s.reversed(), &p).to_array();
        let sf = PerturbedState::from_array(f).reversed().to_array();
        let defect: [f64; 8] = std::array::from_fn(|i| lhs[i] + sf[i]);
        assert!(norm(&defect) <= 1e-12 * (1.0 + norm(&f)));
    }
}

#[test]
fn perturbed_reduces_to_reduced() {
    let p = ModelParams::new(0.1, 0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let u: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
        let w = [u[0], u[1], u[2], u[3], u[4], u[5], 0.0, 0.0];
        let f = reduced_field(&u, &p);
        let g = perturbed_field(&w, &p);
        for i in 0..6 {
            assert!((f[i] - g[i]).abs() <= 1e-15 * (1.0 + f[i].abs()), "slot {i}");
        }
        assert_eq!((g[6], g[7]), (0.0, 0.0));
    }
}

#[test]
fn first_integral_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = ModelParams::new(0.1, 0.6).unwrap();
    for _ in 0..200 {
        let u: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.5..1.5));
        let g = first_integral_gradient(&u, &p);
        for k in 0..6 {
            let h = 1e-6;
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let fd = (first_integral_raw(&up, &p) - first_integral_raw(&um, &p)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8 * (1.0 + g[k].abs()), "slot {k}: {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn first_integral_examples() {
    let p = ModelParams::from_g(0.1, 1.36).unwrap();
    assert_eq!(first_integral(&ReducedState::m_minus(), &p), 0.0);
    assert_eq!(first_integral(&ReducedState::m_plus(), &p), 0.0);
    let s = ReducedState::from_array([0.5, 0.1, -0.2, 0.3, 0.4, 0.05]);
    // 0.01(0.06 - 0.04) - 0.0025 + 0.005 (0.41 - 1)^2 + 0.01 * 0.36 * 0.04
    let by_hand = 0.01 * 0.02 - 0.0025 + 0.005 * 0.59f64.powi(2) + 0.01 * 0.36 * 0.04;
    assert!((first_integral(&s, &p) - by_hand).abs() < 1e-16);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn first_integral_is_conserved(u in prop::array::uniform6(-3.0..3.0f64), eps in 0.01..0.3f64, delta in 0.1..1.5f64) {
        let p = ModelParams::new(eps, delta).unwrap();
        let g = first_integral_gradient(&u, &p);
        let f = reduced_field(&u, &p);
        let dot: f64 = g.iter().zip(&f).map(|(a, b)| a * b).sum();
        prop_assert!(dot.abs() <= 1e-12 * (1.0 + norm(&u).powi(6)));
    }

    #[test]
    fn reverser_is_an_involution(u in prop::array::uniform8(-5.0..5.0f64)) {
        let s = PerturbedState::from_array(u);
        prop_assert_eq!(apply_reverser(&apply_reverser(&s)), s);
        let r = ReducedState::from_array([u[0], u[1], u[2], u[3], u[4], u[5]]);
        prop_assert_eq!(apply_reverser(&apply_reverser(&r)), r);
    }

    #[test]
    fn tau_pi_equivariance(u in prop::array::uniform8(-2.0..2.0f64), seed in 0u64..1000, x in -50.0..50.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = params(random_coeffs(&mut rng));
        let flip = |v: [f64; 8]| -> [f64; 8] { std::array::from_fn(|i| if i < 4 { -v[i] } else { v[i] }) };

        let r: [f64; 6] = std::array::from_fn(|i| u[i]);
        let fr = reduced_field(&r, &p);
        let rr: [f64; 6] = std::array::from_fn(|i| if i < 4 { -r[i] } else { r[i] });
        let gr = reduced_field(&rr, &p);
        for i in 0..6 {
            let want = if i < 4 { -fr[i] } else { fr[i] };
            prop_assert!((gr[i] - want).abs() <= 1e-14 * (1.0 + want.abs()));
        }

        let hook = PerturbationHook::new(1.0, seed).unwrap();
        let s = PerturbedState::from_array(u);
        let f = perturbed_rhs_with_hook(x, &s, &p, &hook).to_array();
        let g = perturbed_rhs_with_hook(x, &PerturbedState::from_array(flip(u)), &p, &hook).to_array();
        let want = flip(f);
        for i in 0..8 {
            prop_assert!((g[i] - want[i]).abs() <= 1e-14 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn hook_respects_envelopes(u in prop::array::uniform8(-2.0..2.0f64), seed in 0u64..1000, x in -100.0..100.0f64, scale in 0.0..3.0f64) {
        let p = ModelParams::new(0.1, 0.6).unwrap();
        let hook = PerturbationHook::new(scale, seed).unwrap();
        let h = hook.evaluate(x, &u, &p);
        let (ea, eb) = hook.envelopes(&u, &p);
        prop_assert!(h[3].abs() <= ea * (1.0 + 1e-12));
        prop_assert!(h[5].abs() + h[7].abs() <= eb * (1.0 + 1e-12));
        for i in [0, 1, 2, 4, 6] {
            prop_assert_eq!(h[i], 0.0);
        }
    }
}

#[test]
fn negative_hook_scale_rejected() {
    assert!(PerturbationHook::<f64>::new(-1.0, 0).is_err());
    assert!(PerturbationHook::<f64>::new(f64::NAN, 0).is_err());
}

#[test]
fn parameter_validation() {
    assert!(ModelParams::new(0.0, 0.6).is_err());
    assert!(ModelParams::new(0.1, -0.1).is_err());
    let p = ModelParams::new(0.1, 0.6).unwrap();
    assert_eq!(p.g(), 1.0 + 0.36);
    assert!(p.check_solver_range().is_ok());
    assert!(ModelParams::new(0.1, 0.2).unwrap().check_solver_range().is_err());
}
