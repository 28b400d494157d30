//! Monte Carlo study on the cubic benchmark.

use rayon::prelude::*;
use wienerbo_core::benchmark::{mean, percentile, relative_increase};
use wienerbo_core::BoundKind;

use crate::config::BenchmarkConfig;
use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Lower and upper percentile of the reported bands.
pub const BAND: (f64, f64) = (0.125, 0.875);

/// One step of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based.
    pub step: usize,
    pub x: f64,
    pub y_f: f64,
    pub y_g: f64,
    pub feasible: bool,
    /// `f_opt − f(x)`.
    pub regret: f64,
    pub cum_regret: f64,
    pub safe_measure: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: BoundKind,
    pub run: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
}

impl RunRecord {
    pub fn final_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }
}

/// Records ordered by method (in the order requested) and then by run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentResult {
    pub records: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn methods(&self) -> Vec<BoundKind> {
        let mut out = Vec::new();
        for r in &self.records {
            if !out.contains(&r.method) {
                out.push(r.method);
            }
        }
        out
    }

    pub fn runs_of(&self, method: BoundKind) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(move |r| r.method == method)
    }

    pub fn row_count(&self) -> usize {
        self.records.iter().map(|r| r.steps.len()).sum()
    }
}

/// Seed of run `run`.
pub fn run_seed(base_seed: u64, run: usize) -> u64 {
    base_seed.wrapping_add(run as u64)
}

/// Executes one run of one method.
pub fn run_single(
    cfg: &BenchmarkConfig,
    method: BoundKind,
    run: usize,
    base_seed: u64,
) -> Result<RunRecord> {
    let bo = cfg.safe_bo(method)?;
    let bench = cfg.benchmark();
    let f_opt = cfg.computed_f_opt();
    let seed = run_seed(base_seed, run);
    let noise = NoiseSource::new(seed, cfg.sigma_noise, cfg.g_noise);
    let trajectory = wienerbo_core::run(
        &bo,
        |x| bench.f(x[0]),
        |x| bench.g(x[0]),
        |t| noise.draw(t),
        cfg.steps,
    )?;
    let mut cum = 0.0;
    let steps = trajectory
        .into_iter()
        .map(|s| {
            let regret = f_opt - s.f_value;
            cum += regret;
            StepRecord {
                step: s.t,
                x: s.x[0],
                y_f: s.y_f,
                y_g: s.y_g,
                feasible: s.feasible,
                regret,
                cum_regret: cum,
                safe_measure: s.safe_measure,
                beta: s.beta_f,
            }
        })
        .collect();
    Ok(RunRecord {
        method,
        run,
        seed,
        steps,
    })
}

/// Runs every method on `cfg.runs` noise realizations.
///
/// Run `r` uses seed `base_seed + r` for every method, so methods are
/// compared on identical noise. The result does not depend on
/// `parallelism`.
pub fn run_monte_carlo(
    cfg: &BenchmarkConfig,
    methods: &[BoundKind],
    base_seed: u64,
    parallelism: usize,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    if methods.is_empty() {
        return Err(Error::Usage("no methods selected".into()));
    }
    let jobs: Vec<(BoundKind, usize)> = methods
        .iter()
        .flat_map(|&m| (0..cfg.runs).map(move |r| (m, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        jobs.par_iter()
            .map(|&(m, r)| run_single(cfg, m, r, base_seed))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResult { records })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: BoundKind,
    pub runs: usize,
    /// Per-step mean of the cumulative regret.
    pub mean_regret: Vec<f64>,
    pub lo_band: Vec<f64>,
    pub hi_band: Vec<f64>,
    pub mean_safe_measure: Vec<f64>,
    /// Observations with `g(x) > 0`, summed over runs.
    pub violations: usize,
}

impl MethodSummary {
    pub fn final_mean_regret(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub methods: Vec<MethodSummary>,
    /// `100 (R̄ − R̄_wk) / R̄_wk` at the last step for every other method;
    /// empty if the Wiener-kernel method was not run.
    pub relative_increase: Vec<(BoundKind, f64)>,
}

impl Summary {
    pub fn method(&self, kind: BoundKind) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == kind)
    }

    pub fn increase_of(&self, kind: BoundKind) -> Option<f64> {
        self.relative_increase
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, v)| *v)
    }
}

fn column<F: Fn(&StepRecord) -> f64>(runs: &[&RunRecord], step: usize, f: F) -> Vec<f64> {
    runs.iter().map(|r| f(&r.steps[step])).collect()
}

/// Per-step statistics. `g` is the true constraint used to count
/// violations.
pub fn summarize<G: Fn(f64) -> f64>(result: &ExperimentResult, g: G) -> Result<Summary> {
    if result.records.is_empty() {
        return Err(Error::Usage("no run records to summarize".into()));
    }
    let mut methods = Vec::new();
    for kind in result.methods() {
        let runs: Vec<&RunRecord> = result.runs_of(kind).collect();
        let steps = runs[0].steps.len();
        if runs.iter().any(|r| r.steps.len() != steps) {
            return Err(Error::Usage(format!(
                "runs of `{kind}` have different lengths"
            )));
        }
        let mut s = MethodSummary {
            method: kind,
            runs: runs.len(),
            mean_regret: Vec::with_capacity(steps),
            lo_band: Vec::with_capacity(steps),
            hi_band: Vec::with_capacity(steps),
            mean_safe_measure: Vec::with_capacity(steps),
            violations: 0,
        };
        for t in 0..steps {
            let regret = column(&runs, t, |r| r.cum_regret);
            s.mean_regret.push(mean(&regret).unwrap_or(0.0));
            s.lo_band.push(percentile(&regret, BAND.0).unwrap_or(0.0));
            s.hi_band.push(percentile(&regret, BAND.1).unwrap_or(0.0));
            s.mean_safe_measure
                .push(mean(&column(&runs, t, |r| r.safe_measure)).unwrap_or(0.0));
        }
        s.violations = runs
            .iter()
            .flat_map(|r| &r.steps)
            .filter(|st| g(st.x) > 0.0)
            .count();
        methods.push(s);
    }
    let mut relative = Vec::new();
    if let Some(wk) = methods.iter().find(|m| m.method == BoundKind::WienerKernel) {
        let reference = wk.final_mean_regret();
        for m in &methods {
            if m.method != BoundKind::WienerKernel {
                relative.push((
                    m.method,
                    relative_increase(m.final_mean_regret(), reference),
                ));
            }
        }
    }
    Ok(Summary {
        methods,
        relative_increase: relative,
    })
}
