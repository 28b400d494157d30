use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wienerbo_core::bounds::log_det_information;
use wienerbo_core::{
    beta_1, beta_2, beta_wk, gamma_condition, BoundKind, BoundSpec, Dataset, GpModel, KernelSpec,
    Points,
};

const DELTAS: [f64; 4] = [0.5, 0.1, 0.01, 0.001];

fn se(amp: f64, ls: f64, a: f64, b: f64) -> f64 {
    amp * amp * (-(a - b) * (a - b) / (2.0 * ls * ls)).exp()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn random_model(rng: &mut ChaCha8Rng, d: usize) -> (GpModel, f64) {
    let amp = rng.random_range(0.5..5.0);
    let ls = rng.random_range(1.0..5.0);
    let s = rng.random_range(0.1..3.0);
    let xs: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
    let ys: Vec<f64> = (0..d)
        .map(|_| 2.0 * Distribution::<f64>::sample(&StandardNormal, &mut *rng))
        .collect();
    let kernel = KernelSpec::squared_exponential(amp, ls).unwrap();
    let data = Dataset::new(Points::from_scalars(&xs), ys).unwrap();
    (GpModel::fit(kernel, data, s, 0.0).unwrap(), s)
}

fn params(model: &GpModel, kind: BoundKind, b: f64, delta: f64) -> wienerbo_core::BoundParams {
    BoundSpec::new(kind, b, delta)
        .unwrap()
        .params(model)
        .unwrap()
}

#[test]
fn wiener_bound_dominates_when_gamma_or_size_large() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let grid = Points::from_scalars(&linspace(-5.0, 5.0, 51));
    let (mut checked_a, mut checked_b) = (0, 0);
    for _ in 0..300 {
        let d = rng.random_range(0..=25);
        let (model, s) = random_model(&mut rng, d);
        let gamma = gamma_condition(model.gram(), s).unwrap();
        let b = rng.random_range(0.1..10.0);
        let qs = model.query_many(&grid).unwrap();
        for delta in DELTAS {
            let wk = params(&model, BoundKind::WienerKernel, b, delta);
            let ay = params(&model, BoundKind::AbbasiYadkori, b, delta);
            let fi = params(&model, BoundKind::Fiedler, b, delta);
            for q in &qs {
                if gamma.holds {
                    checked_a += 1;
                    assert!(wk.evaluate(q).eta < ay.evaluate(q).eta);
                }
                if d >= 2 {
                    checked_b += 1;
                    assert!(wk.evaluate(q).eta < fi.evaluate(q).eta);
                }
            }
        }
    }
    assert!(checked_a > 1000 && checked_b > 1000);
}

#[test]
fn single_observation_still_dominates_fiedler() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let grid = Points::from_scalars(&linspace(-5.0, 5.0, 51));
    for _ in 0..200 {
        let (model, _) = random_model(&mut rng, 1);
        let delta = rng.random_range(1e-6..0.5);
        let wk = params(&model, BoundKind::WienerKernel, 2.5, delta);
        let fi = params(&model, BoundKind::Fiedler, 2.5, delta);
        for q in model.query_many(&grid).unwrap() {
            assert!(wk.evaluate(&q).eta < fi.evaluate(&q).eta);
        }
    }
}

#[test]
fn wiener_safe_set_contains_the_others() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let grid = Points::from_scalars(&linspace(-5.0, 5.0, 101));
    let mut nontrivial = 0;
    for _ in 0..200 {
        let d = rng.random_range(2..=30);
        let (model, s) = random_model(&mut rng, d);
        let gamma = gamma_condition(model.gram(), s).unwrap();
        let qs = model.query_many(&grid).unwrap();
        let wk = params(&model, BoundKind::WienerKernel, 2.5, 0.01);
        for kind in [BoundKind::AbbasiYadkori, BoundKind::Fiedler] {
            if kind == BoundKind::AbbasiYadkori && !gamma.holds {
                continue;
            }
            let other = params(&model, kind, 2.5, 0.01);
            for q in &qs {
                if other.ucb(q) <= 0.0 {
                    nontrivial += 1;
                    assert!(wk.ucb(q) <= 0.0);
                }
            }
        }
    }
    assert!(nontrivial > 0);
}

#[test]
fn beta_values_against_closed_forms() {
    assert!((beta_wk(0.001).unwrap() - (2.0 * 2000f64.ln()).sqrt()).abs() < 1e-12);
    assert!((beta_wk(0.001).unwrap() - 3.8990).abs() < 1e-3);
    let l = 1000f64.ln();
    let b2 = (100.0 + 2.0 * (100.0 * l).sqrt() + 2.0 * l).sqrt();
    assert!((beta_2(0.001, 100).unwrap() - b2).abs() < 1e-12);
    assert!((beta_2(0.001, 100).unwrap() - 12.90).abs() < 0.02);
}

#[test]
fn beta_wk_ignores_the_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let spec = BoundSpec::new(BoundKind::WienerKernel, 2.5, 0.001).unwrap();
    let reference = beta_wk(0.001).unwrap();
    for d in 0..40 {
        let (model, _) = random_model(&mut rng, d);
        assert_eq!(spec.beta(&model).unwrap(), reference);
    }
}

#[test]
fn log_det_matches_nalgebra_and_grows_with_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..100 {
        let amp = rng.random_range(0.5..5.0);
        let ls = rng.random_range(0.5..5.0);
        let s = rng.random_range(0.3..3.0);
        let d = rng.random_range(1..=20);
        let xs: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let kernel = KernelSpec::squared_exponential(amp, ls).unwrap();
        let mut prev = 0.0;
        for n in 1..=d {
            let g = kernel.gram(&Points::from_scalars(&xs[..n])).unwrap();
            let ld = log_det_information(&g, s).unwrap();
            let m = DMatrix::from_fn(n, n, |i, j| {
                se(amp, ls, xs[i], xs[j]) / (s * s) + if i == j { 1.0 } else { 0.0 }
            });
            let oracle = m.determinant().ln();
            assert!((ld - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
            assert!(ld > prev);
            prev = ld;
            let b1 = beta_1(0.01, &g, s).unwrap();
            assert!((b1 * b1 - ld - 2.0 * 100f64.ln()).abs() < 1e-9);
        }
    }
}

#[test]
fn gamma_condition_examples() {
    let kernel = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
    let empty = gamma_condition(&kernel.gram(&Points::new(1)).unwrap(), 1.0).unwrap();
    assert_eq!(empty.gamma, 1.0);
    assert!(!empty.holds);
    // One point with k(x,x) = 1, σ = 1: γ = 2.
    let one = gamma_condition(&kernel.gram(&Points::from_scalars(&[0.0])).unwrap(), 1.0).unwrap();
    assert!((one.gamma - 2.0).abs() < 1e-12);
    assert!(!one.holds);
}

#[test]
fn noise_term_coverage_on_fixed_design() {
    let xs = linspace(-5.0, 5.0, 10);
    let kernel = KernelSpec::squared_exponential(4.21, 3.59).unwrap();
    let model = GpModel::fit(
        kernel,
        Dataset::new(Points::from_scalars(&xs), vec![0.0; 10]).unwrap(),
        1.0,
        0.0,
    )
    .unwrap();
    let grid = linspace(-5.0, 5.0, 21);
    let km = DMatrix::from_fn(10, 10, |i, j| {
        se(4.21, 3.59, xs[i], xs[j]) + if i == j { 1.0 } else { 0.0 }
    });
    let ch = km.cholesky().unwrap();
    let w: Vec<DVector<f64>> = grid
        .iter()
        .map(|&x| ch.solve(&DVector::from_fn(10, |i, _| se(4.21, 3.59, xs[i], x))))
        .collect();
    let sd: Vec<f64> = grid
        .iter()
        .map(|&x| model.wiener_variance(&[x]).unwrap().sqrt())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for delta in [0.05, 0.01] {
        let beta = beta_wk(delta).unwrap();
        let mut covered = vec![0usize; grid.len()];
        for _ in 0..10_000 {
            let m = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
            for (i, wi) in w.iter().enumerate() {
                if wi.dot(&m).abs() <= beta * sd[i] {
                    covered[i] += 1;
                }
            }
        }
        for c in covered {
            assert!(
                c as f64 / 10_000.0 >= 1.0 - delta,
                "coverage {c} at delta {delta}"
            );
        }
    }
}

#[test]
fn full_wiener_bound_coverage() {
    let (amp, ls, s, b, delta) = (4.21, 3.59, 1.0, 2.5, 0.05);
    let kernel = KernelSpec::squared_exponential(amp, ls).unwrap();
    let z = [-3.0, 0.5, 2.0, 4.0];
    let mut c = [0.6, -0.4, 0.8, -0.2];
    let norm = kernel
        .rkhs_norm_of_expansion(&Points::from_scalars(&z), &c)
        .unwrap();
    for ci in &mut c {
        *ci *= b / norm;
    }
    let g = |x: f64| {
        z.iter()
            .zip(&c)
            .map(|(&zi, &ci)| ci * se(amp, ls, zi, x))
            .sum::<f64>()
    };
    let xs = linspace(-4.5, 4.5, 12);
    let grid = linspace(-5.0, 5.0, 101);
    let grid_pts = Points::from_scalars(&grid);
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let trials = 2_000;
    let mut failures = 0;
    for _ in 0..trials {
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x| g(x) + s * Distribution::<f64>::sample(&StandardNormal, &mut rng))
            .collect();
        let model = GpModel::fit(
            kernel.clone(),
            Dataset::new(Points::from_scalars(&xs), ys).unwrap(),
            s,
            0.0,
        )
        .unwrap();
        let wk = params(&model, BoundKind::WienerKernel, b, delta);
        let worst = model
            .query_many(&grid_pts)
            .unwrap()
            .iter()
            .zip(&grid)
            .map(|(q, &x)| (q.mean - g(x)).abs() - wk.evaluate(q).eta)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > 0.0 {
            failures += 1;
        }
    }
    assert!(
        failures as f64 / trials as f64 <= delta,
        "{failures} failures in {trials}"
    );
}
