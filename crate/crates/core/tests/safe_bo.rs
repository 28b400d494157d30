use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wienerbo_core::benchmark::CubicBenchmark;
use wienerbo_core::safe_bo::{argmax_finite, barrier_score};
use wienerbo_core::{
    observe, run, safe_region, select_action, BoState, BoundKind, BoundSpec, KernelSpec,
    SafeBoConfig, SafeRegion,
};

const BENCH: CubicBenchmark = CubicBenchmark::DEFAULT;

fn config(kind: BoundKind, grid_points: usize) -> SafeBoConfig {
    let spec = BoundSpec::new(kind, 2.5, 0.001).unwrap();
    SafeBoConfig {
        domain: vec![(-5.0, 5.0)],
        grid_points,
        tau: 1e-6,
        x_safe: vec![5.0],
        bound_f: spec,
        bound_g: spec,
        sigma_m: 1.0,
        jitter: 0.0,
        kernel: KernelSpec::squared_exponential(4.21, 3.59).unwrap(),
    }
}

/// State after `n` noisy observations at random safe inputs.
fn random_state(cfg: &SafeBoConfig, rng: &mut ChaCha8Rng, n: usize) -> BoState {
    let mut s = BoState::new(cfg).unwrap();
    for _ in 0..n {
        let x = rng.random_range(-4.0..5.0);
        let m: f64 = StandardNormal.sample(rng);
        let y = BENCH.f(x) + m;
        s = observe(&s, cfg, &[x], y, -y + BENCH.f_min, false).unwrap();
    }
    s
}

#[test]
fn empty_state_falls_back_and_has_no_safe_region() {
    for kind in BoundKind::ALL {
        let cfg = config(kind, 1001);
        let s = BoState::new(&cfg).unwrap();
        let a = select_action(&s, &cfg).unwrap();
        assert_eq!((a.x.as_slice(), a.feasible), (&[5.0][..], false));
        let r = safe_region(&s, &cfg).unwrap();
        assert_eq!(r.measure, 0.0);
        let (_, g) = s.ucb_pair(&[0.0]).unwrap();
        // B σ_SE for the Wiener and Fiedler bounds (σ_WK = 0); larger for
        // Abbasi-Yadkori, which scales β₁ by σ_GP.
        if kind == BoundKind::AbbasiYadkori {
            assert!(g > 10.525);
        } else {
            assert!((g - 10.525).abs() < 1e-12);
        }
    }
}

#[test]
fn full_mask_covers_the_domain() {
    let r = SafeRegion::from_constraint_ucb(&[-1.0; 1001], 10.0);
    assert_eq!(r.measure, 10.0);
    assert!(r.mask.iter().all(|&m| m));
}

#[test]
fn feasible_actions_are_strictly_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut feasible = 0;
    for kind in BoundKind::ALL {
        let cfg = config(kind, 201);
        for _ in 0..30 {
            let n = rng.random_range(0..40);
            let s = random_state(&cfg, &mut rng, n);
            let a = select_action(&s, &cfg).unwrap();
            if a.feasible {
                feasible += 1;
                assert!(s.ucb_pair(&a.x).unwrap().1 < 0.0);
            } else {
                assert_eq!(a.x, cfg.x_safe);
            }
        }
    }
    assert!(feasible > 0);
}

#[test]
fn observe_refits_and_leaves_the_old_state() {
    let cfg = config(BoundKind::WienerKernel, 101);
    let s0 = BoState::new(&cfg).unwrap();
    let s1 = observe(&s0, &cfg, &[1.0], 0.3, -5.0, false).unwrap();
    assert_eq!((s0.t(), s1.t()), (0, 1));
    assert_eq!(s1.model_f().len(), 1);
    let before = s1.model_f().posterior_variance(&[1.0]).unwrap();
    let s2 = observe(&s1, &cfg, &[1.0], 0.3, -5.0, false).unwrap();
    assert!(s2.model_f().posterior_variance(&[1.0]).unwrap() < before);
    assert!(s2.model_f().factor_residual() < 1e-8);
    assert!(observe(&s2, &cfg, &[1.0], f64::NAN, 0.0, false).is_err());
    assert!(observe(&s2, &cfg, &[7.0], 0.0, 0.0, false).is_err());
    assert_eq!(s1.t(), 1);
}

#[test]
fn single_step_is_the_fallback() {
    let cfg = config(BoundKind::AbbasiYadkori, 1001);
    let traj = run(
        &cfg,
        |x| BENCH.f(x[0]),
        |x| BENCH.g(x[0]),
        |_| (0.0, 0.0),
        1,
    )
    .unwrap();
    assert_eq!(traj.len(), 1);
    assert_eq!(traj[0].x, vec![5.0]);
    assert!(!traj[0].feasible);
    assert!((traj[0].f_value + 2.75).abs() < 1e-12);
    assert!(run(&cfg, |_| 0.0, |_| 0.0, |_| (0.0, 0.0), 0).is_err());
}

#[test]
fn runs_are_deterministic_and_safe() {
    let cfg = config(BoundKind::WienerKernel, 201);
    let noise = |t: usize| {
        let m = ((t * 7919) % 23) as f64 / 23.0 - 0.5;
        (m, -m)
    };
    let a = run(&cfg, |x| BENCH.f(x[0]), |x| BENCH.g(x[0]), noise, 25).unwrap();
    let b = run(&cfg, |x| BENCH.f(x[0]), |x| BENCH.g(x[0]), noise, 25).unwrap();
    assert_eq!(a, b);
    let beta = a[0].beta_f;
    for s in &a {
        assert!(s.g_value <= 0.0);
        assert_eq!(s.beta_f, beta);
        assert!((0.0..=10.0).contains(&s.safe_measure));
    }
    assert!(a.last().unwrap().safe_measure > 0.0);
}

#[test]
fn beta_trajectories_follow_their_formulas() {
    let cfg = config(BoundKind::Fiedler, 101);
    let traj = run(
        &cfg,
        |x| BENCH.f(x[0]),
        |x| BENCH.g(x[0]),
        |_| (0.0, 0.0),
        10,
    )
    .unwrap();
    for s in &traj {
        let expected = wienerbo_core::beta_2(0.001, s.t).unwrap();
        assert_eq!(s.beta_f, expected);
    }
}

/// Winner by an order-free rule: largest finite score, then lowest index.
fn oracle_argmax(scores: &[f64]) -> Option<usize> {
    let best = scores
        .iter()
        .copied()
        .filter(|s| s.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return None;
    }
    scores.iter().position(|&s| s == best)
}

proptest! {
    #[test]
    fn argmax_is_order_free(
        scores in prop::collection::vec(
            prop_oneof![Just(f64::NEG_INFINITY), Just(1.0), -3.0f64..3.0], 0..60),
        seed in any::<u64>(),
    ) {
        prop_assert_eq!(argmax_finite(&scores), oracle_argmax(&scores));
        // Evaluating in a shuffled order and reducing by (score, index)
        // gives the same index.
        let mut order: Vec<usize> = (0..scores.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled = order
            .iter()
            .filter(|&&i| scores[i].is_finite())
            .fold(None::<usize>, |acc, &i| match acc {
                Some(j) if scores[j] > scores[i] || (scores[j] == scores[i] && j < i) => Some(j),
                _ => Some(i),
            });
        prop_assert_eq!(shuffled, argmax_finite(&scores));
    }

    #[test]
    fn barrier_is_finite_only_inside(f in -10.0f64..10.0, g in -10.0f64..10.0, tau in 1e-8f64..1.0) {
        let s = barrier_score(f, g, tau);
        prop_assert_eq!(s.is_finite(), g < 0.0);
        if g == -1.0 {
            prop_assert_eq!(s, f);
        }
    }
}
