//! Side-by-side evaluation of the three error bounds on one data set.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wienerbo_core::{gamma_condition, BoundKind, Dataset, GpModel, Points};

use crate::config::BenchmarkConfig;
use crate::error::{Error, Result};
use crate::persist::format_float;

pub const REPORT_HEADER: [&str; 8] = [
    "x",
    "eta_wk",
    "eta_ay",
    "eta_fiedler",
    "gamma",
    "d",
    "gamma_above_4",
    "d_at_least_2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub x: f64,
    pub eta_wk: f64,
    pub eta_ay: f64,
    pub eta_fiedler: f64,
    pub gamma: f64,
    pub d: usize,
    /// `γ(K) > 4`.
    pub gamma_above_4: bool,
    /// `D ≥ 2`.
    pub d_at_least_2: bool,
}

/// `d` observations of the benchmark at uniformly drawn inputs, noise as
/// configured.
pub fn synthetic_dataset(cfg: &BenchmarkConfig, d: usize, seed: u64) -> Result<Dataset> {
    let bench = cfg.benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [lo, hi] = cfg.domain;
    let mut xs = Vec::with_capacity(d);
    let mut ys = Vec::with_capacity(d);
    for _ in 0..d {
        let x = rng.random_range(lo..=hi);
        let m: f64 = StandardNormal.sample(&mut rng);
        xs.push(x);
        ys.push(bench.f(x) + cfg.sigma_noise * m);
    }
    Ok(Dataset::new(Points::from_scalars(&xs), ys)?)
}

/// Reads a two-column `x,y` CSV.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    let header = rdr.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(["x", "y"]) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: "expected header `x,y`".into(),
        });
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let rec = row.map_err(|e| parse_err(e.to_string()))?;
        let num = |j: usize| -> Result<f64> {
            let raw = rec.get(j).unwrap_or("");
            raw.trim()
                .parse()
                .map_err(|_| parse_err(format!("cannot parse `{raw}`")))
        };
        xs.push(num(0)?);
        ys.push(num(1)?);
    }
    Ok(Dataset::new(Points::from_scalars(&xs), ys)?)
}

/// Evaluates every bound on `grid` uniformly spaced points of the domain.
pub fn compare_bounds(cfg: &BenchmarkConfig, data: Dataset, grid: usize) -> Result<Vec<BoundRow>> {
    if grid < 2 {
        return Err(Error::config("grid", "must be at least 2"));
    }
    let [lo, hi] = cfg.domain;
    let model = GpModel::fit(cfg.kernel()?, data, cfg.sigma_noise, cfg.jitter)?;
    let gamma = gamma_condition(model.gram(), cfg.sigma_noise)?;
    let params = |kind| -> Result<_> { Ok(cfg.bound_spec(kind)?.params(&model)?) };
    let (wk, ay, fi) = (
        params(BoundKind::WienerKernel)?,
        params(BoundKind::AbbasiYadkori)?,
        params(BoundKind::Fiedler)?,
    );
    let xs: Vec<f64> = (0..grid)
        .map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64)
        .collect();
    let qs = model.query_many(&Points::from_scalars(&xs))?;
    Ok(xs
        .iter()
        .zip(&qs)
        .map(|(&x, q)| BoundRow {
            x,
            eta_wk: wk.evaluate(q).eta,
            eta_ay: ay.evaluate(q).eta,
            eta_fiedler: fi.evaluate(q).eta,
            gamma: gamma.gamma,
            d: model.len(),
            gamma_above_4: gamma.holds,
            d_at_least_2: model.len() >= 2,
        })
        .collect())
}

pub fn report_csv(rows: &[BoundRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Usage(format!("csv encoding: {e}"));
    w.write_record(REPORT_HEADER).map_err(enc)?;
    for r in rows {
        w.write_record([
            format_float(r.x),
            format_float(r.eta_wk),
            format_float(r.eta_ay),
            format_float(r.eta_fiedler),
            format_float(r.gamma),
            r.d.to_string(),
            r.gamma_above_4.to_string(),
            r.d_at_least_2.to_string(),
        ])
        .map_err(enc)?;
    }
    w.into_inner()
        .map_err(|e| Error::Usage(format!("csv encoding: {e}")))
}
