//! Probabilistic uniform error bounds `η(x)` on `|μ(x) − g(x)|` and the
//! upper confidence bound `α(x) = μ(x) + η(x)`.
//!
//! | kind            | `η(x)`                          | `β(δ)`                                         |
//! |-----------------|---------------------------------|------------------------------------------------|
//! | `WienerKernel`  | `B sqrt(σ²_GP − σ²_WK) + β σ_WK`| `sqrt(2 ln(2/δ))`                              |
//! | `AbbasiYadkori` | `(B + β) σ_GP`                  | `sqrt(ln det(σ_M⁻² K + I) + 2 ln(1/δ))`        |
//! | `Fiedler`       | `B σ_GP + β σ_WK`               | `sqrt(D + 2 sqrt(D) sqrt(ln(1/δ)) + 2 ln(1/δ))`|
//!
//! The `Fiedler` noise term is usually written `β σ_M ‖K_M⁻¹ k(x)‖`, which
//! is exactly `β σ_WK(x)`.

use core::fmt;

use crate::error::{Error, Result};
use crate::gp::{GpModel, PosteriorQuery};
use crate::kernels::GramMatrix;
use crate::linalg::Cholesky;

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
        })
    }
}

/// `sqrt(2 ln(2/δ))`; independent of the data.
pub fn beta_wk(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(libm::sqrt(2.0 * libm::log(2.0 / delta)))
}

/// `ln det(σ_M⁻² K + I)`, via the Cholesky log-diagonal.
pub fn log_det_information(gram: &GramMatrix, sigma_m: f64) -> Result<f64> {
    if !(sigma_m > 0.0) || !sigma_m.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma_m",
            value: sigma_m,
        });
    }
    let mut a = gram.matrix().clone();
    a.scale(1.0 / (sigma_m * sigma_m));
    a.add_diagonal(1.0);
    Ok(Cholesky::factor(&a)?.log_det())
}

/// `sqrt(ln det(σ_M⁻² K + I) + 2 ln(1/δ))`.
pub fn beta_1(delta: f64, gram: &GramMatrix, sigma_m: f64) -> Result<f64> {
    check_delta(delta)?;
    let logdet = log_det_information(gram, sigma_m)?;
    Ok(libm::sqrt(logdet + 2.0 * libm::log(1.0 / delta)))
}

/// `sqrt(D + 2 sqrt(D) sqrt(ln(1/δ)) + 2 ln(1/δ))`.
pub fn beta_2(delta: f64, d: usize) -> Result<f64> {
    check_delta(delta)?;
    let l = libm::log(1.0 / delta);
    let d = d as f64;
    Ok(libm::sqrt(
        d + 2.0 * libm::sqrt(d) * libm::sqrt(l) + 2.0 * l,
    ))
}

/// Which error bound to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    WienerKernel,
    AbbasiYadkori,
    Fiedler,
}

impl BoundKind {
    pub const ALL: [BoundKind; 3] = [
        BoundKind::WienerKernel,
        BoundKind::AbbasiYadkori,
        BoundKind::Fiedler,
    ];

    /// Short identifier used in files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            BoundKind::WienerKernel => "wk",
            BoundKind::AbbasiYadkori => "ay",
            BoundKind::Fiedler => "fiedler",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        BoundKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Bound family plus the RKHS-norm bound `B` and confidence `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSpec {
    kind: BoundKind,
    rkhs_bound: f64,
    delta: f64,
}

impl BoundSpec {
    pub fn new(kind: BoundKind, rkhs_bound: f64, delta: f64) -> Result<Self> {
        if !(rkhs_bound > 0.0) || !rkhs_bound.is_finite() {
            return Err(Error::InvalidParameter {
                name: "B",
                value: rkhs_bound,
            });
        }
        check_delta(delta)?;
        Ok(Self {
            kind,
            rkhs_bound,
            delta,
        })
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn rkhs_bound(&self) -> f64 {
        self.rkhs_bound
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_kind(self, kind: BoundKind) -> Self {
        Self { kind, ..self }
    }

    /// `β(δ)` for this bound given the model's data.
    pub fn beta(&self, model: &GpModel) -> Result<f64> {
        match self.kind {
            BoundKind::WienerKernel => beta_wk(self.delta),
            BoundKind::AbbasiYadkori => beta_1(self.delta, model.gram(), model.sigma_m()),
            BoundKind::Fiedler => beta_2(self.delta, model.len()),
        }
    }

    /// Fixes `β` for one model so that many points can be bounded cheaply.
    pub fn params(&self, model: &GpModel) -> Result<BoundParams> {
        Ok(BoundParams {
            spec: *self,
            beta: self.beta(model)?,
        })
    }
}

/// `η(x)` split into its RKHS and noise parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundValue {
    pub eta: f64,
    pub beta: f64,
    pub rkhs_term: f64,
    pub noise_term: f64,
}

/// A bound specification with `β` already evaluated for a given model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    spec: BoundSpec,
    beta: f64,
}

impl BoundParams {
    pub fn spec(&self) -> &BoundSpec {
        &self.spec
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn evaluate(&self, q: &PosteriorQuery) -> BoundValue {
        let b = self.spec.rkhs_bound;
        let (rkhs_term, noise_term) = match self.spec.kind {
            BoundKind::WienerKernel => (b * q.epistemic_gap(), self.beta * q.sd_wk()),
            BoundKind::AbbasiYadkori => (b * q.sd_gp(), self.beta * q.sd_gp()),
            BoundKind::Fiedler => (b * q.sd_gp(), self.beta * q.sd_wk()),
        };
        BoundValue {
            eta: rkhs_term + noise_term,
            beta: self.beta,
            rkhs_term,
            noise_term,
        }
    }

    /// `μ(x) + η(x)`.
    pub fn ucb(&self, q: &PosteriorQuery) -> f64 {
        q.mean + self.evaluate(q).eta
    }
}

pub fn error_bound(model: &GpModel, spec: &BoundSpec, x: &[f64]) -> Result<BoundValue> {
    let q = model.query(x)?;
    Ok(spec.params(model)?.evaluate(&q))
}

pub fn ucb(model: &GpModel, spec: &BoundSpec, x: &[f64]) -> Result<f64> {
    let q = model.query(x)?;
    Ok(spec.params(model)?.ucb(&q))
}

/// `γ(K) = det(σ_M⁻² K + I)` and whether `γ > 4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCondition {
    pub log_gamma: f64,
    /// `exp(log_gamma)`; may be `+∞` for large data sets.
    pub gamma: f64,
    pub holds: bool,
}

pub fn gamma_condition(gram: &GramMatrix, sigma_m: f64) -> Result<GammaCondition> {
    let log_gamma = log_det_information(gram, sigma_m)?;
    Ok(GammaCondition {
        log_gamma,
        gamma: libm::exp(log_gamma),
        holds: log_gamma > libm::log(4.0),
    })
}
