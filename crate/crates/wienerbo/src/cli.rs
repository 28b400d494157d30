//! Command-line interface.
//!
//! Exit status: 0 on success, 1 on run-time failure (including failed
//! property checks), 2 on usage or configuration errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use wienerbo_core::BoundKind;

use crate::config::{BenchmarkConfig, DEFAULT_CONFIG};
use crate::error::{Error, Result};
use crate::experiment::{run_monte_carlo, summarize, Summary};
use crate::invariants::Suite;
use crate::persist::{self, Manifest, MANIFEST_FILE, SUMMARY_FILE};
use crate::report;

#[derive(Debug, Parser)]
#[command(
    name = "wienerbo",
    version,
    about = "Safe Bayesian optimization with GP error bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Monte Carlo benchmark and write result files.
    RunExperiment(RunArgs),
    /// Evaluate all error bounds on one data set.
    CompareBounds(CompareArgs),
    /// Run randomized property suites.
    VerifyInvariants(VerifyArgs),
    /// Recompute the summary of a per-step result file.
    Summarize(SummarizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundChoice {
    Wk,
    Ay,
    Fiedler,
    All,
}

impl BoundChoice {
    pub fn kinds(self) -> Vec<BoundKind> {
        match self {
            BoundChoice::Wk => vec![BoundKind::WienerKernel],
            BoundChoice::Ay => vec![BoundKind::AbbasiYadkori],
            BoundChoice::Fiedler => vec![BoundKind::Fiedler],
            BoundChoice::All => BoundKind::ALL.to_vec(),
        }
    }
}

/// Config file plus per-field overrides.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// TOML config; the built-in default when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Number of acquisition grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
}

impl ConfigArgs {
    /// File (or default), then `WIENERBO_*` variables, then flags.
    pub fn load(&self) -> Result<BenchmarkConfig> {
        let mut cfg = match &self.config {
            Some(path) => BenchmarkConfig::load(path)?,
            None => BenchmarkConfig::from_text_with_env(DEFAULT_CONFIG, std::env::vars())?,
        };
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = self.grid {
            cfg.grid_points = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; all available cores when omitted.
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long, value_enum, default_value_t = BoundChoice::All)]
    pub bound: BoundChoice,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// CSV with columns `x,y`.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Number of synthetic benchmark observations.
    #[arg(long)]
    pub synthetic: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Report file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Suite name or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct SummarizeArgs {
    /// Per-step result file (`runs.csv`).
    pub results: PathBuf,
    /// Summary file; `summary.csv` next to the input when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Executes `cli`, writing human-readable output to `out`; returns the
/// exit status.
pub fn execute<W: Write>(cli: Cli, out: &mut W) -> Result<i32> {
    match cli.command {
        Command::RunExperiment(a) => run_experiment(a, out),
        Command::CompareBounds(a) => compare(a, out),
        Command::VerifyInvariants(a) => verify(a, out),
        Command::Summarize(a) => summarize_cmd(a, out),
    }
}

fn io_out<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::io("<stdout>", e))
}

fn print_summary<W: Write>(summary: &Summary, out: &mut W) -> Result<()> {
    for m in &summary.methods {
        io_out(writeln!(
            out,
            "{:<8} runs={:<4} final mean regret={:>10.4} final mean safe measure={:.4} violations={}",
            m.method.name(),
            m.runs,
            m.final_mean_regret(),
            m.mean_safe_measure.last().copied().unwrap_or(0.0),
            m.violations
        ))?;
    }
    for (k, v) in &summary.relative_increase {
        io_out(writeln!(
            out,
            "regret increase of {} over wk: {:.2}%",
            k.name(),
            v
        ))?;
    }
    Ok(())
}

fn run_experiment<W: Write>(a: RunArgs, out: &mut W) -> Result<i32> {
    let cfg = a.cfg.load()?;
    let parallelism = match a.parallelism {
        Some(0) => return Err(Error::Usage("--parallelism must be at least 1".into())),
        Some(p) => p,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    log::info!(
        "config {} seed {} parallelism {parallelism}",
        cfg.hash(),
        a.seed
    );
    let result = run_monte_carlo(&cfg, &a.bound.kinds(), a.seed, parallelism)?;
    let bench = cfg.benchmark();
    let summary = summarize(&result, |x| bench.g(x))?;
    let manifest = persist::save_all(&a.out, &cfg, a.seed, &result, &summary)?;
    print_summary(&summary, out)?;
    io_out(writeln!(
        out,
        "wrote {} rows to {}",
        manifest.rows,
        a.out.display()
    ))?;
    Ok(0)
}

fn compare<W: Write>(a: CompareArgs, out: &mut W) -> Result<i32> {
    let cfg = a.cfg.load()?;
    let data = match (&a.data, a.synthetic) {
        (Some(path), _) => report::load_dataset(path)?,
        (None, Some(d)) => report::synthetic_dataset(&cfg, d, a.seed)?,
        (None, None) => {
            return Err(Error::Usage(
                "one of --data or --synthetic is required".into(),
            ))
        }
    };
    let grid = a.cfg.grid.unwrap_or(101);
    let rows = report::compare_bounds(&cfg, data, grid)?;
    let bytes = report::report_csv(&rows)?;
    match &a.out {
        Some(path) => persist::write_atomic(path, &bytes)?,
        None => io_out(out.write_all(&bytes))?,
    }
    Ok(0)
}

fn verify<W: Write>(a: VerifyArgs, out: &mut W) -> Result<i32> {
    let suites = Suite::parse(&a.suite)?;
    let mut failed = 0;
    for s in suites {
        for r in s.run(a.trials, a.seed)? {
            io_out(writeln!(out, "{r}"))?;
            if !r.passed {
                failed += 1;
            }
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent()
        .map_or_else(|| PathBuf::from(name), |p| p.join(name))
}

fn summarize_cmd<W: Write>(a: SummarizeArgs, out: &mut W) -> Result<i32> {
    let manifest_path = sibling(&a.results, MANIFEST_FILE);
    let base_seed = if manifest_path.exists() {
        Manifest::load(&manifest_path)?.base_seed
    } else {
        0
    };
    let result = persist::load_runs(&a.results, base_seed)?;
    let cfg_path = sibling(&a.results, "config.toml");
    let cfg = if cfg_path.exists() {
        BenchmarkConfig::from_toml_str(
            &std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?,
        )?
    } else {
        BenchmarkConfig::default()
    };
    let bench = cfg.benchmark();
    let summary = summarize(&result, |x| bench.g(x))?;
    let target = a.out.unwrap_or_else(|| sibling(&a.results, SUMMARY_FILE));
    persist::save_summary(&summary, &target)?;
    print_summary(&summary, out)?;
    Ok(0)
}
