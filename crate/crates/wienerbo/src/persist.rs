//! Result files.
//!
//! Per-step records and summaries are CSV; every float is written in
//! scientific notation with 17 significant digits so that loading a file
//! reproduces the stored values bit for bit. A JSON manifest describes the
//! run that produced them. All files are written to a temporary file in the
//! target directory and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wienerbo_core::BoundKind;

use crate::config::{BenchmarkConfig, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentResult, RunRecord, StepRecord, Summary};

pub const RUNS_HEADER: [&str; 11] = [
    "method",
    "run",
    "step",
    "x",
    "y_f",
    "y_g",
    "feasible",
    "regret",
    "cum_regret",
    "safe_measure",
    "beta",
];

pub const SUMMARY_HEADER: [&str; 6] = [
    "method",
    "step",
    "mean_regret",
    "lo_band",
    "hi_band",
    "mean_safe_measure",
];

pub const RUNS_FILE: &str = "runs.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Usage(format!("csv encoding: {e}"));
    w.write_record(header).map_err(to_err)?;
    fill(&mut w).map_err(to_err)?;
    w.into_inner()
        .map_err(|e| Error::Usage(format!("csv encoding: {e}")))
}

pub fn runs_csv(result: &ExperimentResult) -> Result<Vec<u8>> {
    csv_bytes(&RUNS_HEADER, |w| {
        for r in &result.records {
            for s in &r.steps {
                w.write_record([
                    r.method.name().to_string(),
                    r.run.to_string(),
                    s.step.to_string(),
                    format_float(s.x),
                    format_float(s.y_f),
                    format_float(s.y_g),
                    s.feasible.to_string(),
                    format_float(s.regret),
                    format_float(s.cum_regret),
                    format_float(s.safe_measure),
                    format_float(s.beta),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn summary_csv(summary: &Summary) -> Result<Vec<u8>> {
    csv_bytes(&SUMMARY_HEADER, |w| {
        for m in &summary.methods {
            for t in 0..m.mean_regret.len() {
                w.write_record([
                    m.method.name().to_string(),
                    (t + 1).to_string(),
                    format_float(m.mean_regret[t]),
                    format_float(m.lo_band[t]),
                    format_float(m.hi_band[t]),
                    format_float(m.mean_safe_measure[t]),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn save_runs(result: &ExperimentResult, path: &Path) -> Result<()> {
    write_atomic(path, &runs_csv(result)?)
}

pub fn save_summary(summary: &Summary, path: &Path) -> Result<()> {
    write_atomic(path, &summary_csv(summary)?)
}

fn check_header(path: &Path, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            message: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(())
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    rec: &csv::StringRecord,
    i: usize,
) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column `{}`: cannot parse `{raw}`", RUNS_HEADER[i]),
    })
}

/// Parses a per-step CSV produced by [`runs_csv`]; `seed` is recovered from
/// `base_seed + run`.
pub fn parse_runs(path: &Path, bytes: &[u8], base_seed: u64) -> Result<ExperimentResult> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let header = rdr.headers().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    check_header(path, header, &RUNS_HEADER)?;
    let mut records: Vec<RunRecord> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = row.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        if rec.len() != RUNS_HEADER.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", RUNS_HEADER.len(), rec.len()),
            });
        }
        let method = BoundKind::from_name(&rec[0]).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("unknown method `{}`", &rec[0]),
        })?;
        let run: usize = field(path, line, &rec, 1)?;
        let step = StepRecord {
            step: field(path, line, &rec, 2)?,
            x: field(path, line, &rec, 3)?,
            y_f: field(path, line, &rec, 4)?,
            y_g: field(path, line, &rec, 5)?,
            feasible: field(path, line, &rec, 6)?,
            regret: field(path, line, &rec, 7)?,
            cum_regret: field(path, line, &rec, 8)?,
            safe_measure: field(path, line, &rec, 9)?,
            beta: field(path, line, &rec, 10)?,
        };
        match records.last_mut() {
            Some(last) if last.method == method && last.run == run => last.steps.push(step),
            _ => records.push(RunRecord {
                method,
                run,
                seed: crate::experiment::run_seed(base_seed, run),
                steps: vec![step],
            }),
        }
    }
    Ok(ExperimentResult { records })
}

pub fn load_runs(path: &Path, base_seed: u64) -> Result<ExperimentResult> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_runs(path, &bytes, base_seed)
}

/// Machine-readable description of a result directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: i64,
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub methods: Vec<String>,
    pub runs: usize,
    pub steps: usize,
    pub grid_points: usize,
    pub f_opt: f64,
    pub rows: usize,
    pub files: Vec<String>,
    pub relative_increase: Vec<(String, f64)>,
    pub violations: Vec<(String, usize)>,
}

impl Manifest {
    pub fn new(
        cfg: &BenchmarkConfig,
        base_seed: u64,
        result: &ExperimentResult,
        summary: &Summary,
    ) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            base_seed,
            methods: result
                .methods()
                .iter()
                .map(|m| m.name().to_string())
                .collect(),
            runs: cfg.runs,
            steps: cfg.steps,
            grid_points: cfg.grid_points,
            f_opt: cfg.computed_f_opt(),
            rows: result.row_count(),
            files: vec![RUNS_FILE.into(), SUMMARY_FILE.into(), "config.toml".into()],
            relative_increase: summary
                .relative_increase
                .iter()
                .map(|(k, v)| (k.name().to_string(), *v))
                .collect(),
            violations: summary
                .methods
                .iter()
                .map(|m| (m.method.name().to_string(), m.violations))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                message: format!(
                    "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                    m.schema_version
                ),
            });
        }
        Ok(m)
    }
}

/// Writes `runs.csv`, `summary.csv`, `config.toml` and `manifest.json`
/// into `dir`.
pub fn save_all(
    dir: &Path,
    cfg: &BenchmarkConfig,
    base_seed: u64,
    result: &ExperimentResult,
    summary: &Summary,
) -> Result<Manifest> {
    save_runs(result, &dir.join(RUNS_FILE))?;
    save_summary(summary, &dir.join(SUMMARY_FILE))?;
    write_atomic(&dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    let manifest = Manifest::new(cfg, base_seed, result, summary);
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(manifest)
}
