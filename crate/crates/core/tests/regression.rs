use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wienerbo_core::{feature_space_gap, Dataset, FeatureMap, GpModel, KernelSpec, Points};

fn se(amp: f64, ls: f64, a: f64, b: f64) -> f64 {
    amp * amp * (-(a - b) * (a - b) / (2.0 * ls * ls)).exp()
}

fn fit(amp: f64, ls: f64, xs: &[f64], ys: Vec<f64>, sigma_m: f64, jitter: f64) -> GpModel {
    let kernel = KernelSpec::squared_exponential(amp, ls).unwrap();
    GpModel::fit(
        kernel,
        Dataset::new(Points::from_scalars(xs), ys).unwrap(),
        sigma_m,
        jitter,
    )
    .unwrap()
}

/// Posterior mean and variance through nalgebra.
fn oracle(amp: f64, ls: f64, xs: &[f64], ys: &[f64], s2: f64, x: f64) -> (f64, f64, f64) {
    let d = xs.len();
    let km = DMatrix::from_fn(d, d, |i, j| {
        se(amp, ls, xs[i], xs[j]) + if i == j { s2 } else { 0.0 }
    });
    let k = DVector::from_fn(d, |i, _| se(amp, ls, xs[i], x));
    let y = DVector::from_column_slice(ys);
    let ch = km.cholesky().unwrap();
    let w = ch.solve(&k);
    (w.dot(&y), amp * amp - k.dot(&w), s2 * w.norm_squared())
}

#[test]
fn empty_model_is_the_prior() {
    let m = fit(4.21, 3.59, &[], vec![], 1.0, 0.0);
    assert_eq!(m.factor().dim(), 0);
    for x in [-5.0, 0.0, 2.5] {
        let q = m.query(&[x]).unwrap();
        assert_eq!(q.mean, 0.0);
        assert!((q.var_gp - 17.7241).abs() < 1e-12);
        assert_eq!(q.var_wk, 0.0);
        assert!((q.epistemic_gap() - 4.21).abs() < 1e-12);
    }
}

#[test]
fn single_point_closed_forms() {
    let (y, s2) = (1.7, 1.0);
    let m = fit(4.21, 3.59, &[0.3], vec![y], s2, 0.0);
    let k11 = 4.21f64 * 4.21;
    assert!((m.factor().entry(0, 0) - (k11 + 1.0).sqrt()).abs() < 1e-12);
    let q = m.query(&[0.3]).unwrap();
    assert!((q.mean - k11 * y / (k11 + s2)).abs() < 1e-12);
    assert!((q.var_gp - k11 * s2 / (k11 + s2)).abs() < 1e-12);
    assert!((q.var_wk - s2 * k11 * k11 / ((k11 + s2) * (k11 + s2))).abs() < 1e-12);
}

#[test]
fn matches_nalgebra_and_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for _ in 0..200 {
        let d = rng.random_range(1..=40);
        let amp = rng.random_range(0.5..5.0);
        let ls = rng.random_range(0.5..5.0);
        let s = rng.random_range(0.1..3.0);
        let xs: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ys: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = fit(amp, ls, &xs, ys.clone(), s, 0.0);
        assert!(m.factor_residual() <= 1e-8);
        let x = rng.random_range(-6.0..6.0);
        let (mu, var, wk) = oracle(amp, ls, &xs, &ys, s * s, x);
        let q = m.query(&[x]).unwrap();
        let scale = amp * amp;
        assert!((q.mean - mu).abs() <= 1e-9 * (1.0 + mu.abs()));
        assert!((q.var_gp - var).abs() <= 1e-9 * scale);
        assert!((q.var_wk - wk).abs() <= 1e-9 * scale);
    }
}

#[test]
fn noise_free_interpolation() {
    let xs = [-3.0, -1.0, 0.5, 2.0, 4.0];
    let ys = vec![1.0, -0.5, 2.0, 0.3, -1.2];
    for jitter in [1e-10, 1e-8] {
        let m = fit(2.0, 1.0, &xs, ys.clone(), 0.0, jitter);
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.posterior_mean(&[*x]).unwrap() - y).abs() < 1e-6);
        }
    }
}

#[test]
fn duplicate_points_need_noise() {
    let kernel = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
    let data = Dataset::new(Points::from_scalars(&[1.0, 1.0]), vec![0.0, 0.0]).unwrap();
    assert!(GpModel::fit(kernel.clone(), data.clone(), 0.0, 0.0).is_err());
    assert!(GpModel::fit(kernel, data, 1.0, 0.0).is_ok());
}

#[test]
fn bad_inputs() {
    assert!(Dataset::new(Points::from_scalars(&[1.0]), vec![f64::NAN]).is_err());
    assert!(Dataset::new(Points::from_scalars(&[1.0]), vec![]).is_err());
    let kernel = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
    assert!(GpModel::fit(kernel, Dataset::empty(1), -1.0, 0.0).is_err());
}

#[test]
fn feature_space_backend_agrees_and_gap_is_strict() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..300 {
        let n_phi = rng.random_range(1..=6);
        let w: Vec<f64> = (0..n_phi).map(|_| rng.random_range(0.3..2.0)).collect();
        let map = FeatureMap::new(n_phi, move |x: &[f64]| {
            w.iter()
                .enumerate()
                .map(|(i, a)| a * (x[0] * (i as f64 + 1.0) * 0.5).sin() + 0.1)
                .collect()
        })
        .unwrap();
        let kernel = KernelSpec::finite_feature(map);
        let d = rng.random_range(0..=20);
        let xs: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let s = rng.random_range(0.1..3.0);
        let x = rng.random_range(-3.0..3.0);
        let pts = Points::from_scalars(&xs);
        let m = GpModel::fit(
            kernel.clone(),
            Dataset::new(pts.clone(), vec![0.0; d]).unwrap(),
            s,
            0.0,
        )
        .unwrap();
        let gap_kernel = m.epistemic_gap(&[x]).unwrap().powi(2);
        let gap_feature = feature_space_gap(&kernel, &pts, s, &[x]).unwrap();
        let kxx = kernel.diag(&[x]).unwrap();
        assert!((gap_kernel - gap_feature).abs() <= 1e-8 * kxx);
        // φ(x) ≠ 0 makes the quadratic form strictly positive.
        if kxx > 1e-6 {
            assert!(gap_feature > 0.0);
        }
    }
}

#[test]
fn feature_space_gap_rejects_other_kernels() {
    let k = KernelSpec::squared_exponential(1.0, 1.0).unwrap();
    assert!(feature_space_gap(&k, &Points::from_scalars(&[0.0]), 1.0, &[0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn variances_are_ordered(
        xs in prop::collection::vec(-5.0f64..5.0, 0..30),
        amp in 0.5f64..5.0,
        ls in 1.0f64..5.0,
        s in 0.1f64..3.0,
        x in -6.0f64..6.0,
    ) {
        let ys = xs.iter().map(|v| v.sin()).collect();
        let q = fit(amp, ls, &xs, ys, s, 0.0).query(&[x]).unwrap();
        prop_assert!(q.var_gp >= 0.0 && q.var_wk >= 0.0);
        prop_assert!(q.var_wk <= q.var_gp + 1e-9 * amp * amp);
        prop_assert!(q.var_gp <= amp * amp + 1e-12);
    }

    #[test]
    fn more_data_never_increases_variance(
        xs in prop::collection::vec(-5.0f64..5.0, 1..20),
        extra in -5.0f64..5.0,
        x in -5.0f64..5.0,
    ) {
        let ys = vec![0.0; xs.len()];
        let before = fit(4.21, 3.59, &xs, ys.clone(), 1.0, 0.0).posterior_variance(&[x]).unwrap();
        let mut xs2 = xs.clone();
        xs2.push(extra);
        let mut ys2 = ys;
        ys2.push(0.0);
        let after = fit(4.21, 3.59, &xs2, ys2, 1.0, 0.0).posterior_variance(&[x]).unwrap();
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn batch_queries_match_pointwise(
        xs in prop::collection::vec(-5.0f64..5.0, 0..15),
        qs in prop::collection::vec(-5.0f64..5.0, 1..10),
    ) {
        let ys: Vec<f64> = xs.iter().map(|v| v.cos()).collect();
        let m = fit(4.21, 3.59, &xs, ys, 1.0, 0.0);
        let batch = m.query_many(&Points::from_scalars(&qs)).unwrap();
        for (q, &x) in batch.iter().zip(&qs) {
            let p = m.query(&[x]).unwrap();
            prop_assert!((q.mean - p.mean).abs() <= 1e-10);
            prop_assert!((q.var_gp - p.var_gp).abs() <= 1e-10);
            prop_assert!((q.var_wk - p.var_wk).abs() <= 1e-10);
        }
    }
}
