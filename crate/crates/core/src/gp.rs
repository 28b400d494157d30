//! Gaussian-process regression: posterior mean and variance, the Wiener
//! kernel variance, and the epistemic part of the posterior variance.
//!
//! With `K_M = K + σ_M² I` and `q(x) = K_M⁻¹ k(x)`:
//!
//! ```text
//! μ(x)     = k(x)ᵀ K_M⁻¹ y
//! σ²_GP(x) = k(x,x) − k(x)ᵀ K_M⁻¹ k(x)
//! σ²_WK(x) = σ_M² ‖q(x)‖²
//! ```
//!
//! `σ²_GP − σ²_WK` is the part of the posterior variance that remains when
//! the data are noise free; its square root multiplies the RKHS norm in the
//! error bounds.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::kernels::{check_dim, GramMatrix, KernelSpec, Points};
use crate::linalg::{dot, norm_sq, Cholesky, Matrix};

static VARIANCE_CLAMPS: AtomicUsize = AtomicUsize::new(0);

/// Number of times a negative posterior variance was clamped to zero,
/// process-wide.
pub fn variance_clamp_count() -> usize {
    VARIANCE_CLAMPS.load(Ordering::Relaxed)
}

fn clamp_variance(raw: f64, prior: f64) -> f64 {
    if raw < 0.0 {
        VARIANCE_CLAMPS.fetch_add(1, Ordering::Relaxed);
        log::debug!("clamped negative posterior variance {raw:e} (prior {prior:e})");
        0.0
    } else {
        raw
    }
}

/// Ordered input/label pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Points,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn empty(dim: usize) -> Self {
        Self {
            inputs: Points::new(dim),
            labels: Vec::new(),
        }
    }

    pub fn new(inputs: Points, labels: Vec<f64>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                found: labels.len(),
            });
        }
        check_labels(&labels)?;
        Ok(Self { inputs, labels })
    }

    /// Returns a new dataset with one more observation.
    pub fn with_observation(&self, x: &[f64], y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(Error::NonFiniteLabel {
                index: self.len(),
                value: y,
            });
        }
        let mut next = self.clone();
        next.inputs.push(x)?;
        next.labels.push(y);
        Ok(next)
    }

    pub fn inputs(&self) -> &Points {
        &self.inputs
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs.dim()
    }
}

fn check_labels(labels: &[f64]) -> Result<()> {
    match labels.iter().position(|y| !y.is_finite()) {
        Some(index) => Err(Error::NonFiniteLabel {
            index,
            value: labels[index],
        }),
        None => Ok(()),
    }
}

/// Posterior summary at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorQuery {
    pub mean: f64,
    /// `σ²_GP(x)`, clamped at zero.
    pub var_gp: f64,
    /// `σ²_WK(x)`.
    pub var_wk: f64,
    /// `k(x, x)`.
    pub prior_var: f64,
}

impl PosteriorQuery {
    pub fn sd_gp(&self) -> f64 {
        libm::sqrt(self.var_gp)
    }

    pub fn sd_wk(&self) -> f64 {
        libm::sqrt(self.var_wk)
    }

    /// `sqrt(max(σ²_GP − σ²_WK, 0))`.
    pub fn epistemic_gap(&self) -> f64 {
        libm::sqrt((self.var_gp - self.var_wk).max(0.0))
    }
}

/// A GP fitted on a dataset with fixed kernel and noise level.
///
/// Immutable once fitted; [`GpModel::relabel`] produces a sibling model that
/// shares the factorization.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    data: Dataset,
    sigma_m: f64,
    jitter: f64,
    gram: Arc<GramMatrix>,
    factor: Arc<Cholesky>,
    // K_M⁻¹ y
    alpha: Vec<f64>,
}

impl GpModel {
    /// Factors `K + (σ_M² + jitter) I` and caches `K_M⁻¹ y`.
    pub fn fit(kernel: KernelSpec, data: Dataset, sigma_m: f64, jitter: f64) -> Result<Self> {
        if !(sigma_m >= 0.0) || !sigma_m.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma_m",
                value: sigma_m,
            });
        }
        if !(jitter >= 0.0) || !jitter.is_finite() {
            return Err(Error::InvalidParameter {
                name: "jitter",
                value: jitter,
            });
        }
        let gram = kernel.gram(data.inputs())?;
        let mut km = gram.matrix().clone();
        km.add_diagonal(sigma_m * sigma_m + jitter);
        let factor = Cholesky::factor(&km)?;
        let alpha = factor.solve(data.labels())?;
        Ok(Self {
            kernel,
            data,
            sigma_m,
            jitter,
            gram: Arc::new(gram),
            factor: Arc::new(factor),
            alpha,
        })
    }

    /// Same inputs, kernel and noise level, new labels; reuses the factor.
    pub fn relabel(&self, labels: Vec<f64>) -> Result<Self> {
        let data = Dataset::new(self.data.inputs().clone(), labels)?;
        let alpha = self.factor.solve(data.labels())?;
        Ok(Self {
            data,
            alpha,
            ..self.clone()
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn sigma_m(&self) -> f64 {
        self.sigma_m
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// Cholesky factor of `K + (σ_M² + jitter) I`.
    pub fn factor(&self) -> &Cholesky {
        &self.factor
    }

    /// Whether `other` shares this model's factorization.
    pub fn shares_factor(&self, other: &GpModel) -> bool {
        Arc::ptr_eq(&self.factor, &other.factor)
    }

    /// Relative Frobenius error of `L Lᵀ` against `K + (σ_M² + jitter) I`.
    pub fn factor_residual(&self) -> f64 {
        let mut target = self.gram.matrix().clone();
        target.add_diagonal(self.sigma_m * self.sigma_m + self.jitter);
        let rec = self.factor.reconstruct();
        let n = target.rows();
        let mut diff = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                diff.set(i, j, rec.get(i, j) - target.get(i, j));
            }
        }
        let denom = target.frobenius_norm();
        if denom == 0.0 {
            0.0
        } else {
            diff.frobenius_norm() / denom
        }
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        check_dim(self.data.dim(), x)
    }

    /// `K_M⁻¹ k(x)`; the weights that map labels to `μ(x)`.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_query(x)?;
        let mut q = self.kernel.vector(self.data.inputs(), x)?;
        self.factor.solve_in_place(&mut q);
        Ok(q)
    }

    pub fn posterior_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        let k = self.kernel.vector(self.data.inputs(), x)?;
        Ok(dot(&k, &self.alpha))
    }

    pub fn posterior_variance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.query(x)?.var_gp)
    }

    pub fn wiener_variance(&self, x: &[f64]) -> Result<f64> {
        Ok(self.query(x)?.var_wk)
    }

    pub fn epistemic_gap(&self, x: &[f64]) -> Result<f64> {
        Ok(self.query(x)?.epistemic_gap())
    }

    /// Mean, both variances and the prior variance at `x`.
    pub fn query(&self, x: &[f64]) -> Result<PosteriorQuery> {
        self.check_query(x)?;
        let prior_var = self.kernel.diag(x)?;
        let k = self.kernel.vector(self.data.inputs(), x)?;
        let mean = dot(&k, &self.alpha);
        let mut v = k;
        self.factor.solve_lower_in_place(&mut v);
        let var_gp = clamp_variance(prior_var - norm_sq(&v), prior_var);
        self.factor.solve_upper_in_place(&mut v);
        let var_wk = self.sigma_m * self.sigma_m * norm_sq(&v);
        Ok(PosteriorQuery {
            mean,
            var_gp,
            var_wk,
            prior_var,
        })
    }

    /// Batched [`GpModel::query`] over many points.
    pub fn query_many(&self, points: &Points) -> Result<Vec<PosteriorQuery>> {
        let mut out = query_shared(&[self], points)?;
        Ok(out.pop().unwrap_or_default())
    }
}

impl Default for PosteriorQuery {
    fn default() -> Self {
        Self {
            mean: 0.0,
            var_gp: 0.0,
            var_wk: 0.0,
            prior_var: 0.0,
        }
    }
}

/// Evaluates several models that share one factorization over a point set.
///
/// The kernel block and both triangular solves are done once; each model
/// only contributes its own mean. Models that do not share the first
/// model's factor are rejected.
pub fn query_shared(models: &[&GpModel], points: &Points) -> Result<Vec<Vec<PosteriorQuery>>> {
    let Some(first) = models.first() else {
        return Ok(Vec::new());
    };
    if let Some(bad) = models.iter().position(|m| !first.shares_factor(m)) {
        return Err(Error::InvalidParameter {
            name: "shared_factor",
            value: bad as f64,
        });
    }
    let d = first.len();
    let g = points.len();
    if g > 0 && d > 0 && points.dim() != first.data.dim() {
        return Err(Error::DimensionMismatch {
            expected: first.data.dim(),
            found: points.dim(),
        });
    }
    let priors = points
        .iter()
        .map(|p| first.kernel.diag(p))
        .collect::<Result<Vec<_>>>()?;
    let kx = first.kernel.cross(first.data.inputs(), points)?;

    let means: Vec<Vec<f64>> = models
        .iter()
        .map(|m| {
            let mut mu = vec![0.0; g];
            for (i, a) in m.alpha.iter().enumerate() {
                for (mu_g, k) in mu.iter_mut().zip(&kx[i * g..(i + 1) * g]) {
                    *mu_g += a * k;
                }
            }
            mu
        })
        .collect();

    let mut block = kx;
    first.factor.solve_lower_columns(&mut block, g);
    let mut v_sq = vec![0.0; g];
    for i in 0..d {
        for (acc, v) in v_sq.iter_mut().zip(&block[i * g..(i + 1) * g]) {
            *acc += v * v;
        }
    }
    first.factor.solve_upper_columns(&mut block, g);
    let mut q_sq = vec![0.0; g];
    for i in 0..d {
        for (acc, q) in q_sq.iter_mut().zip(&block[i * g..(i + 1) * g]) {
            *acc += q * q;
        }
    }
    let s2 = first.sigma_m * first.sigma_m;
    let shared: Vec<(f64, f64, f64)> = (0..g)
        .map(|j| {
            (
                clamp_variance(priors[j] - v_sq[j], priors[j]),
                s2 * q_sq[j],
                priors[j],
            )
        })
        .collect();

    Ok(means
        .into_iter()
        .map(|mu| {
            mu.into_iter()
                .zip(&shared)
                .map(|(mean, &(var_gp, var_wk, prior_var))| PosteriorQuery {
                    mean,
                    var_gp,
                    var_wk,
                    prior_var,
                })
                .collect()
        })
        .collect())
}

/// `σ_M⁴ φ(x)ᵀ (σ_M² I + ΦΦᵀ)⁻² φ(x)`, computed in feature space.
///
/// Equals `σ²_GP(x) − σ²_WK(x)` for the finite-feature kernel; used as an
/// independent check on the kernel-space route. Needs `σ_M > 0`.
pub fn feature_space_gap(kernel: &KernelSpec, xs: &Points, sigma_m: f64, x: &[f64]) -> Result<f64> {
    let map = kernel.feature_map().ok_or(Error::UnsupportedKernel)?;
    if !(sigma_m > 0.0) || !sigma_m.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_m",
            value: sigma_m,
        });
    }
    if !xs.is_empty() {
        check_dim(xs.dim(), x)?;
    }
    let n = map.n_phi();
    let s2 = sigma_m * sigma_m;
    // A = σ² I + Σ_i φ(x_i) φ(x_i)ᵀ
    let mut a = Matrix::identity(n);
    a.scale(s2);
    for xi in xs.iter() {
        let phi = map.features(xi)?;
        for r in 0..n {
            for c in 0..n {
                a.set(r, c, a.get(r, c) + phi[r] * phi[c]);
            }
        }
    }
    let chol = Cholesky::factor(&a)?;
    let phi_x = map.features(x)?;
    let r = chol.solve(&phi_x)?;
    Ok(s2 * s2 * norm_sq(&r))
}
