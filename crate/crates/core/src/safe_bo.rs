//! Safe Bayesian optimization with a log-barrier acquisition.
//!
//! Each step maximizes `α_f(x) + τ ln(−α_g(x))` over a uniform grid, where
//! `α_f` and `α_g` are upper confidence bounds of the objective and the
//! constraint surrogates. Points with `α_g(x) ≥ 0` are not candidates. When
//! no grid point is a candidate the known safe action is applied instead.

use alloc::vec;
use alloc::vec::Vec;

use crate::bounds::{BoundParams, BoundSpec};
use crate::error::{Error, Result};
use crate::gp::{query_shared, Dataset, GpModel, PosteriorQuery};
use crate::kernels::{KernelSpec, Points};

/// Static configuration of the optimization loop.
#[derive(Debug, Clone)]
pub struct SafeBoConfig {
    /// Closed interval `[lo, hi]` per input dimension.
    pub domain: Vec<(f64, f64)>,
    /// Grid points per dimension, at least 2.
    pub grid_points: usize,
    /// Log-barrier weight.
    pub tau: f64,
    pub x_safe: Vec<f64>,
    pub bound_f: BoundSpec,
    pub bound_g: BoundSpec,
    pub sigma_m: f64,
    pub jitter: f64,
    pub kernel: KernelSpec,
}

impl SafeBoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.domain.is_empty() {
            return Err(Error::InvalidParameter {
                name: "domain",
                value: 0.0,
            });
        }
        for &(lo, hi) in &self.domain {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "domain",
                    value: hi - lo,
                });
            }
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grid_points",
                value: self.grid_points as f64,
            });
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: self.tau,
            });
        }
        if !(self.sigma_m > 0.0) || !self.sigma_m.is_finite() {
            return Err(Error::InvalidParameter {
                name: "sigma_m",
                value: self.sigma_m,
            });
        }
        if !(self.jitter >= 0.0) || !self.jitter.is_finite() {
            return Err(Error::InvalidParameter {
                name: "jitter",
                value: self.jitter,
            });
        }
        self.check_in_domain(&self.x_safe)
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    /// Product of the interval lengths.
    pub fn volume(&self) -> f64 {
        self.domain.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn check_in_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        for (dim, (&v, &(lo, hi))) in x.iter().zip(&self.domain).enumerate() {
            if !(v >= lo && v <= hi) {
                return Err(Error::OutOfDomain { dim, value: v });
            }
        }
        Ok(())
    }

    /// Uniform tensor grid, ordered lexicographically (first dimension
    /// varies slowest) so that grid index order equals coordinate order.
    pub fn grid(&self) -> Points {
        let n = self.grid_points;
        let axes: Vec<Vec<f64>> = self
            .domain
            .iter()
            .map(|&(lo, hi)| {
                (0..n)
                    .map(|i| {
                        if i + 1 == n {
                            hi
                        } else {
                            lo + (hi - lo) * i as f64 / (n - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        let d = self.dim();
        let total = n.pow(d as u32);
        let mut coords = Vec::with_capacity(total * d);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            for (axis, &i) in axes.iter().zip(&idx) {
                coords.push(axis[i]);
            }
            for k in (0..d).rev() {
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
            }
        }
        Points::from_flat(d, coords).expect("grid dimension is positive")
    }
}

/// One applied action and its observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub x: Vec<f64>,
    pub y_f: f64,
    pub y_g: f64,
    /// Whether the action came from the barrier problem (as opposed to the
    /// safe fallback).
    pub feasible: bool,
}

/// Surrogates of objective and constraint after `t` observations.
#[derive(Debug, Clone)]
pub struct BoState {
    model_f: GpModel,
    model_g: GpModel,
    params_f: BoundParams,
    params_g: BoundParams,
    history: Vec<Observation>,
}

impl BoState {
    /// Empty surrogates: the prior only.
    pub fn new(cfg: &SafeBoConfig) -> Result<Self> {
        cfg.validate()?;
        let data = Dataset::empty(cfg.dim());
        Self::from_data(cfg, data, Vec::new(), Vec::new())
    }

    fn from_data(
        cfg: &SafeBoConfig,
        data_f: Dataset,
        labels_g: Vec<f64>,
        history: Vec<Observation>,
    ) -> Result<Self> {
        let model_f = GpModel::fit(cfg.kernel.clone(), data_f, cfg.sigma_m, cfg.jitter)?;
        let model_g = model_f.relabel(labels_g)?;
        let params_f = cfg.bound_f.params(&model_f)?;
        let params_g = cfg.bound_g.params(&model_g)?;
        Ok(Self {
            model_f,
            model_g,
            params_f,
            params_g,
            history,
        })
    }

    pub fn t(&self) -> usize {
        self.history.len()
    }

    pub fn model_f(&self) -> &GpModel {
        &self.model_f
    }

    pub fn model_g(&self) -> &GpModel {
        &self.model_g
    }

    pub fn params_f(&self) -> &BoundParams {
        &self.params_f
    }

    pub fn params_g(&self) -> &BoundParams {
        &self.params_g
    }

    pub fn history(&self) -> &[Observation] {
        &self.history
    }

    /// `(α_f(x), α_g(x))`.
    pub fn ucb_pair(&self, x: &[f64]) -> Result<(f64, f64)> {
        let qf = self.model_f.query(x)?;
        let qg = self.model_g.query(x)?;
        Ok((self.params_f.ucb(&qf), self.params_g.ucb(&qg)))
    }

    /// Both upper confidence bounds over a point set.
    pub fn evaluate(&self, points: &Points) -> Result<GridEvaluation> {
        let (qf, qg): (Vec<PosteriorQuery>, Vec<PosteriorQuery>) =
            if self.model_f.shares_factor(&self.model_g) {
                let mut both = query_shared(&[&self.model_f, &self.model_g], points)?;
                let qg = both.pop().unwrap_or_default();
                let qf = both.pop().unwrap_or_default();
                (qf, qg)
            } else {
                (
                    self.model_f.query_many(points)?,
                    self.model_g.query_many(points)?,
                )
            };
        Ok(GridEvaluation {
            ucb_f: qf.iter().map(|q| self.params_f.ucb(q)).collect(),
            ucb_g: qg.iter().map(|q| self.params_g.ucb(q)).collect(),
        })
    }
}

/// Upper confidence bounds of both surrogates at every grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation {
    pub ucb_f: Vec<f64>,
    pub ucb_g: Vec<f64>,
}

impl GridEvaluation {
    pub fn scores(&self, tau: f64) -> Vec<f64> {
        self.ucb_f
            .iter()
            .zip(&self.ucb_g)
            .map(|(&f, &g)| barrier_score(f, g, tau))
            .collect()
    }
}

/// `α_f + τ ln(−α_g)` if `α_g < 0`, else `−∞`.
pub fn barrier_score(ucb_f: f64, ucb_g: f64, tau: f64) -> f64 {
    if ucb_g < 0.0 {
        let s = ucb_f + tau * libm::log(-ucb_g);
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    } else {
        f64::NEG_INFINITY
    }
}

/// Index of the largest finite score; the lowest index wins ties.
pub fn argmax_finite(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn acquisition_score(state: &BoState, cfg: &SafeBoConfig, x: &[f64]) -> Result<f64> {
    let (f, g) = state.ucb_pair(x)?;
    Ok(barrier_score(f, g, cfg.tau))
}

/// Chosen action; `grid_index` is `None` for the safe fallback.
#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub x: Vec<f64>,
    pub feasible: bool,
    pub grid_index: Option<usize>,
}

fn action_from_scores(cfg: &SafeBoConfig, grid: &Points, scores: &[f64]) -> Action {
    match argmax_finite(scores) {
        Some(i) => Action {
            x: grid.get(i).to_vec(),
            feasible: true,
            grid_index: Some(i),
        },
        None => Action {
            x: cfg.x_safe.clone(),
            feasible: false,
            grid_index: None,
        },
    }
}

pub fn select_action(state: &BoState, cfg: &SafeBoConfig) -> Result<Action> {
    let grid = cfg.grid();
    let eval = state.evaluate(&grid)?;
    Ok(action_from_scores(cfg, &grid, &eval.scores(cfg.tau)))
}

/// Refits both surrogates with one more observation.
pub fn observe(
    state: &BoState,
    cfg: &SafeBoConfig,
    x: &[f64],
    y_f: f64,
    y_g: f64,
    feasible: bool,
) -> Result<BoState> {
    cfg.check_in_domain(x)?;
    let t = state.t();
    for y in [y_f, y_g] {
        if !y.is_finite() {
            return Err(Error::NonFiniteLabel { index: t, value: y });
        }
    }
    let data_f = state.model_f.data().with_observation(x, y_f)?;
    let mut labels_g = state.model_g.data().labels().to_vec();
    labels_g.push(y_g);
    let mut history = state.history.clone();
    history.push(Observation {
        x: x.to_vec(),
        y_f,
        y_g,
        feasible,
    });
    BoState::from_data(cfg, data_f, labels_g, history)
}

/// Grid approximation of `{x : α_g(x) ≤ 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SafeRegion {
    pub measure: f64,
    pub mask: Vec<bool>,
}

impl SafeRegion {
    pub fn from_constraint_ucb(ucb_g: &[f64], volume: f64) -> Self {
        let mask: Vec<bool> = ucb_g.iter().map(|&g| g <= 0.0).collect();
        let inside = mask.iter().filter(|&&m| m).count();
        let measure = if mask.is_empty() {
            0.0
        } else {
            volume * inside as f64 / mask.len() as f64
        };
        Self { measure, mask }
    }
}

pub fn safe_region(state: &BoState, cfg: &SafeBoConfig) -> Result<SafeRegion> {
    let grid = cfg.grid();
    let eval = state.evaluate(&grid)?;
    Ok(SafeRegion::from_constraint_ucb(&eval.ucb_g, cfg.volume()))
}

/// One iteration of the loop, recorded after its observation was absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    /// 1-based step index.
    pub t: usize,
    pub x: Vec<f64>,
    pub y_f: f64,
    pub y_g: f64,
    pub feasible: bool,
    /// Noise-free objective and constraint at `x`.
    pub f_value: f64,
    pub g_value: f64,
    /// Safe-region measure of the surrogates fitted on steps `1..=t`.
    pub safe_measure: f64,
    /// `β` of the objective and constraint bounds on steps `1..=t`.
    pub beta_f: f64,
    pub beta_g: f64,
}

/// Runs `steps` iterations from empty surrogates.
///
/// `noise(t)` returns the additive noise `(m_f, m_g)` for step `t`
/// (1-based); observations are `y_f = f(x) + m_f`, `y_g = g(x) + m_g`.
pub fn run<F, G, N>(
    cfg: &SafeBoConfig,
    oracle_f: F,
    oracle_g: G,
    mut noise: N,
    steps: usize,
) -> Result<Vec<TrajectoryStep>>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
    N: FnMut(usize) -> (f64, f64),
{
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
        });
    }
    let grid = cfg.grid();
    let volume = cfg.volume();
    let mut state = BoState::new(cfg)?;
    let mut eval = state.evaluate(&grid)?;
    let mut out = Vec::with_capacity(steps);
    for t in 1..=steps {
        let action = action_from_scores(cfg, &grid, &eval.scores(cfg.tau));
        let f_value = oracle_f(&action.x);
        let g_value = oracle_g(&action.x);
        let (m_f, m_g) = noise(t);
        let y_f = f_value + m_f;
        let y_g = g_value + m_g;
        state = observe(&state, cfg, &action.x, y_f, y_g, action.feasible)?;
        eval = state.evaluate(&grid)?;
        let region = SafeRegion::from_constraint_ucb(&eval.ucb_g, volume);
        out.push(TrajectoryStep {
            t,
            x: action.x,
            y_f,
            y_g,
            feasible: action.feasible,
            f_value,
            g_value,
            safe_measure: region.measure,
            beta_f: state.params_f.beta(),
            beta_g: state.params_g.beta(),
        });
    }
    Ok(out)
}
