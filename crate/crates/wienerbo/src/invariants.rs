//! Randomized property suites.
//!
//! Each suite draws its instances from a ChaCha8 stream seeded by the
//! caller and checks one or more properties of the core library. Where a
//! property is an algebraic identity the reference side is computed with
//! `nalgebra` from kernel values evaluated here, not through the core
//! crate.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wienerbo_core::{
    beta_wk, gamma_condition, BoundKind, BoundSpec, Dataset, FeatureMap, GpModel, KernelSpec,
    Points,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    FullBound,
    NoiseFree,
    VarianceOrder,
    Dominance,
    WkIdentity,
    FeatureGap,
    NoiseCoverage,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::FullBound,
        Suite::NoiseFree,
        Suite::VarianceOrder,
        Suite::Dominance,
        Suite::WkIdentity,
        Suite::FeatureGap,
        Suite::NoiseCoverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::FullBound => "full-bound",
            Suite::NoiseFree => "noise-free",
            Suite::VarianceOrder => "variance-order",
            Suite::Dominance => "dominance",
            Suite::WkIdentity => "wk-identity",
            Suite::FeatureGap => "feature-gap",
            Suite::NoiseCoverage => "noise-coverage",
        }
    }

    /// Resolves a suite name; `all` expands to every suite.
    pub fn parse(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .map(|s| vec![s])
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Usage(format!(
                    "unknown suite `{name}` (expected one of {}, all)",
                    names.join(", ")
                ))
            })
    }

    pub fn default_trials(self) -> usize {
        match self {
            Suite::FullBound => 200,
            Suite::NoiseFree => 100,
            Suite::VarianceOrder => 10_000,
            Suite::Dominance => 1_000,
            Suite::WkIdentity => 1_000,
            Suite::FeatureGap => 1_000,
            Suite::NoiseCoverage => 10_000,
        }
    }

    pub fn run(self, trials: Option<usize>, seed: u64) -> Result<Vec<PropertyReport>> {
        let n = trials.unwrap_or(self.default_trials());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = Instant::now();
        let mut reports = match self {
            Suite::FullBound => bound_coverage(&mut rng, n),
            Suite::NoiseFree => noise_free(&mut rng, n),
            Suite::VarianceOrder => variance_order(&mut rng, n),
            Suite::Dominance => dominance(&mut rng, n),
            Suite::WkIdentity => wk_identity(&mut rng, n),
            Suite::FeatureGap => feature_gap(&mut rng, n),
            Suite::NoiseCoverage => noise_coverage(&mut rng, n),
        }?;
        let elapsed = start.elapsed();
        for r in &mut reports {
            r.elapsed = elapsed;
        }
        Ok(reports)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one property.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub suite: Suite,
    pub property: String,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    /// Largest observed error measure (meaning depends on the property).
    pub max_error: f64,
    pub passed: bool,
    pub elapsed: Duration,
}

impl PropertyReport {
    fn new(suite: Suite, property: impl Into<String>, trials: usize) -> Self {
        PropertyReport {
            suite,
            property: property.into(),
            trials,
            checks: 0,
            violations: 0,
            max_error: 0.0,
            passed: false,
            elapsed: Duration::ZERO,
        }
    }

    fn record(&mut self, ok: bool, err: f64) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
        }
        if err > self.max_error || err.is_nan() {
            self.max_error = err;
        }
    }

    fn finish_exact(mut self) -> Self {
        self.passed = self.violations == 0;
        self
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}/{}: trials={} checks={} violations={} max_error={:.3e} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.property,
            self.trials,
            self.checks,
            self.violations,
            self.max_error,
            self.elapsed.as_secs_f64()
        )
    }
}

fn se_value(amp: f64, ls: f64, a: f64, b: f64) -> f64 {
    amp * amp * (-(a - b) * (a - b) / (2.0 * ls * ls)).exp()
}

fn uniform_points<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

struct SeInstance {
    amp: f64,
    ls: f64,
    sigma_m: f64,
    xs: Vec<f64>,
}

impl SeInstance {
    fn random<R: Rng>(rng: &mut R, max_d: usize) -> Self {
        SeInstance {
            amp: rng.random_range(0.5..5.0),
            ls: rng.random_range(1.0..5.0),
            sigma_m: rng.random_range(0.1..3.0),
            xs: {
                let d = rng.random_range(0..=max_d);
                uniform_points(rng, d, -5.0, 5.0)
            },
        }
    }

    fn kernel(&self) -> KernelSpec {
        KernelSpec::squared_exponential(self.amp, self.ls).expect("positive hyperparameters")
    }

    fn model(&self, labels: Vec<f64>) -> Result<GpModel> {
        let data = Dataset::new(Points::from_scalars(&self.xs), labels)?;
        Ok(GpModel::fit(self.kernel(), data, self.sigma_m, 0.0)?)
    }

    /// `(K + σ²I)⁻¹ k(x)` through nalgebra.
    fn oracle_weights(&self, x: f64) -> DVector<f64> {
        let d = self.xs.len();
        let s2 = self.sigma_m * self.sigma_m;
        let km = DMatrix::from_fn(d, d, |i, j| {
            se_value(self.amp, self.ls, self.xs[i], self.xs[j]) + if i == j { s2 } else { 0.0 }
        });
        let k = DVector::from_fn(d, |i, _| se_value(self.amp, self.ls, self.xs[i], x));
        km.cholesky()
            .expect("regularized Gram is positive definite")
            .solve(&k)
    }
}

/// Wiener variance never exceeds the GP variance.
fn variance_order(rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<PropertyReport>> {
    let mut rep = PropertyReport::new(
        Suite::VarianceOrder,
        "var_wk <= var_gp + 1e-9 k(x,x)",
        trials,
    );
    for _ in 0..trials {
        let inst = SeInstance::random(rng, 50);
        let labels = (0..inst.xs.len()).map(|_| 3.0 * normal(rng)).collect();
        let model = inst.model(labels)?;
        let x = rng.random_range(-6.0..6.0);
        let q = model.query(&[x])?;
        let excess = (q.var_wk - q.var_gp) / q.prior_var;
        rep.record(q.var_wk <= q.var_gp + 1e-9 * q.prior_var, excess.max(0.0));
    }
    Ok(vec![rep.finish_exact()])
}

/// `σ_WK(x) = σ_M ‖(K + σ²_M I)⁻¹ k(x)‖`.
fn wk_identity(rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<PropertyReport>> {
    let mut rep = PropertyReport::new(Suite::WkIdentity, "sigma_m |K_M^-1 k| = sigma_wk", trials);
    for _ in 0..trials {
        let inst = SeInstance::random(rng, 50);
        let model = inst.model(vec![0.0; inst.xs.len()])?;
        let x = rng.random_range(-6.0..6.0);
        let sd_wk = model.wiener_variance(&[x])?.sqrt();
        let oracle = inst.sigma_m * inst.oracle_weights(x).norm();
        let diff = (oracle - sd_wk).abs();
        let (ok, err) = if sd_wk < 1e-6 {
            (diff <= 1e-12, diff)
        } else {
            (diff <= 1e-10 * sd_wk, diff / sd_wk)
        };
        rep.record(ok, err);
    }
    Ok(vec![rep.finish_exact()])
}

const BASIS: usize = 6;

fn basis(x: f64) -> [f64; BASIS] {
    [1.0, x, x * x, x.sin(), x.cos(), x.tanh()]
}

/// Gap between GP and Wiener variance equals its feature-space form.
fn feature_gap(rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<PropertyReport>> {
    let mut rep = PropertyReport::new(
        Suite::FeatureGap,
        "gap^2 = s^4 phi'(s^2 I + Phi Phi')^-2 phi",
        trials,
    );
    for _ in 0..trials {
        let n_phi = rng.random_range(1..=BASIS);
        let a: Vec<f64> = (0..n_phi * BASIS).map(|_| normal(rng)).collect();
        let phi = move |x: f64| -> Vec<f64> {
            let b = basis(x);
            (0..n_phi)
                .map(|r| (0..BASIS).map(|c| a[r * BASIS + c] * b[c]).sum())
                .collect()
        };
        let phi_core = phi.clone();
        let map = FeatureMap::new(n_phi, move |x: &[f64]| phi_core(x[0]))?;
        let kernel = KernelSpec::finite_feature(map);
        let d = rng.random_range(0..=20);
        let xs = uniform_points(rng, d, -2.0, 2.0);
        let sigma_m = rng.random_range(0.1..3.0);
        let x = rng.random_range(-2.0..2.0);

        let data = Dataset::new(Points::from_scalars(&xs), vec![0.0; d])?;
        let model = GpModel::fit(kernel, data, sigma_m, 0.0)?;
        let gap = model.epistemic_gap(&[x])?;

        let big_phi = DMatrix::from_fn(n_phi, d, |r, c| phi(xs[c])[r]);
        let s2 = sigma_m * sigma_m;
        let m = DMatrix::identity(n_phi, n_phi) * s2 + &big_phi * big_phi.transpose();
        let f = DVector::from_vec(phi(x));
        let v = m.cholesky().expect("positive definite").solve(&f);
        let oracle = s2 * s2 * v.norm_squared();
        let kxx = f.norm_squared();
        let diff = (gap * gap - oracle).abs();
        rep.record(
            diff <= 1e-8 * kxx,
            if kxx > 0.0 { diff / kxx } else { diff },
        );
    }
    Ok(vec![rep.finish_exact()])
}

/// Random RKHS element `Σ c_i k(·, z_i)` on [-5, 5].
struct RkhsFunction {
    amp: f64,
    ls: f64,
    centers: Vec<f64>,
    coeffs: Vec<f64>,
}

impl RkhsFunction {
    fn random<R: Rng>(rng: &mut R, amp: f64, ls: f64) -> Self {
        let m = rng.random_range(1..=10);
        RkhsFunction {
            amp,
            ls,
            centers: uniform_points(rng, m, -5.0, 5.0),
            coeffs: (0..m).map(|_| normal(rng)).collect(),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(&z, &c)| c * se_value(self.amp, self.ls, z, x))
            .sum()
    }

    fn norm(&self) -> Result<f64> {
        let k = KernelSpec::squared_exponential(self.amp, self.ls)?;
        Ok(k.rkhs_norm_of_expansion(&Points::from_scalars(&self.centers), &self.coeffs)?)
    }

    /// Rescales to the given RKHS norm.
    fn with_norm(mut self, target: f64) -> Result<Self> {
        let n = self.norm()?;
        for c in &mut self.coeffs {
            *c *= target / n;
        }
        Ok(self)
    }
}

/// Noise-free data: `|f − μ| ≤ ‖f‖_H · gap` everywhere.
fn noise_free(rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<PropertyReport>> {
    let mut rep = PropertyReport::new(Suite::NoiseFree, "|f - mu| <= |f|_H gap", trials);
    let grid = linspace(-5.0, 5.0, 1000);
    let grid_points = Points::from_scalars(&grid);
    for _ in 0..trials {
        let inst = SeInstance::random(rng, 30);
        let f = RkhsFunction::random(rng, inst.amp, inst.ls);
        let norm = f.norm()?;
        let labels = inst.xs.iter().map(|&x| f.eval(x)).collect();
        let model = inst.model(labels)?;
        for (q, &x) in model.query_many(&grid_points)?.iter().zip(&grid) {
            let excess = (f.eval(x) - q.mean).abs() - norm * q.epistemic_gap();
            rep.record(excess <= 1e-8, excess.max(0.0));
        }
    }
    Ok(vec![rep.finish_exact()])
}

/// Where the premises hold, the Wiener bound is strictly tighter.
fn dominance(rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<PropertyReport>> {
    let mut a = PropertyReport::new(Suite::Dominance, "gamma > 4 => eta_wk < eta_ay", trials);
    let mut b = PropertyReport::new(Suite::Dominance, "D >= 2 => eta_wk < eta_fiedler", trials);
    let grid = Points::from_scalars(&linspace(-5.0, 5.0, 101));
    for _ in 0..trials {
        let inst = SeInstance::random(rng, 30);
        let labels = (0..inst.xs.len()).map(|_| 3.0 * normal(rng)).collect();
        let model = inst.model(labels)?;
        let rkhs = rng.random_range(0.1..10.0);
        let delta = rng.random_range(1e-4..0.5);
        let params = |kind| -> Result<_> { Ok(BoundSpec::new(kind, rkhs, delta)?.params(&model)?) };
        let (wk, ay, fi) = (
            params(BoundKind::WienerKernel)?,
            params(BoundKind::AbbasiYadkori)?,
            params(BoundKind::Fiedler)?,
        );
        let gamma = gamma_condition(model.gram(), inst.sigma_m)?;
        let qs = model.query_many(&grid)?;
        for q in &qs {
            let e_wk = wk.evaluate(q).eta;
            if gamma.holds {
                let e = ay.evaluate(q).eta;
                a.record(e_wk < e, (e_wk - e).max(0.0));
            }
            if model.len() >= 2 {
                let e = fi.evaluate(q).eta;
                b.record(e_wk < e, (e_wk - e).max(0.0));
            }
        }
    }
    Ok(vec![a.finish_exact(), b.finish_exact()])
}

/// Hoeffding coverage of the noise term on a fixed ten-point design.
fn noise_coverage(rng: &mut ChaCha8Rng, draws: usize) -> Result<Vec<PropertyReport>> {
    let inst = SeInstance {
        amp: 4.21,
        ls: 3.59,
        sigma_m: 1.0,
        xs: linspace(-5.0, 5.0, 10),
    };
    let model = inst.model(vec![0.0; 10])?;
    let grid = linspace(-5.0, 5.0, 101);
    let weights: Vec<Vec<f64>> = grid
        .iter()
        .map(|&x| model.weights(&[x]))
        .collect::<std::result::Result<_, _>>()?;
    let sd_wk: Vec<f64> = grid
        .iter()
        .map(|&x| model.wiener_variance(&[x]).map(f64::sqrt))
        .collect::<std::result::Result<_, _>>()?;
    let deltas = [0.05, 0.01];
    let betas: Vec<f64> = deltas
        .iter()
        .map(|&d| beta_wk(d))
        .collect::<std::result::Result<_, _>>()?;
    let mut covered = vec![vec![0usize; grid.len()]; deltas.len()];
    let mut m = vec![0.0; 10];
    for _ in 0..draws {
        for v in &mut m {
            *v = inst.sigma_m * normal(rng);
        }
        for (i, w) in weights.iter().enumerate() {
            let z: f64 = w.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>().abs();
            for (j, beta) in betas.iter().enumerate() {
                if z <= beta * sd_wk[i] {
                    covered[j][i] += 1;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (j, &delta) in deltas.iter().enumerate() {
        let mut rep = PropertyReport::new(
            Suite::NoiseCoverage,
            format!("coverage >= 1 - {delta}"),
            draws,
        );
        let mut worst = 1.0f64;
        for &c in &covered[j] {
            let cov = c as f64 / draws as f64;
            worst = worst.min(cov);
            rep.record(cov >= 1.0 - delta, 1.0 - cov);
        }
        rep.max_error = 1.0 - worst;
        out.push(rep.finish_exact());
    }
    Ok(out)
}

/// Full-bound coverage `sup_x |f − μ| ≤ η` with noisy data, for every bound.
fn bound_coverage(rng: &mut ChaCha8Rng, trials: usize) -> Result<Vec<PropertyReport>> {
    const RKHS: f64 = 2.5;
    const DELTA: f64 = 0.05;
    let grid = linspace(-5.0, 5.0, 201);
    let grid_points = Points::from_scalars(&grid);
    let mut reports: Vec<PropertyReport> = BoundKind::ALL
        .iter()
        .map(|k| {
            PropertyReport::new(
                Suite::FullBound,
                format!("{k}: P(sup |f - mu| > eta) <= {DELTA}"),
                trials,
            )
        })
        .collect();
    let mut failures = [0usize; 3];
    for _ in 0..trials {
        let inst = SeInstance::random(rng, 30);
        let f = RkhsFunction::random(rng, inst.amp, inst.ls).with_norm(RKHS)?;
        let labels = inst
            .xs
            .iter()
            .map(|&x| f.eval(x) + inst.sigma_m * normal(rng))
            .collect();
        let model = inst.model(labels)?;
        let qs = model.query_many(&grid_points)?;
        for (j, kind) in BoundKind::ALL.into_iter().enumerate() {
            let params = BoundSpec::new(kind, RKHS, DELTA)?.params(&model)?;
            let worst = qs
                .iter()
                .zip(&grid)
                .map(|(q, &x)| (f.eval(x) - q.mean).abs() - params.evaluate(q).eta)
                .fold(f64::NEG_INFINITY, f64::max);
            if worst > 0.0 {
                failures[j] += 1;
            }
        }
    }
    for (rep, &fails) in reports.iter_mut().zip(&failures) {
        rep.checks = trials;
        rep.violations = fails;
        rep.max_error = fails as f64 / trials.max(1) as f64;
        rep.passed = rep.max_error <= DELTA;
    }
    Ok(reports)
}
