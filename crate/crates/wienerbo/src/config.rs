//! Benchmark configuration file.
//!
//! A flat TOML document; every key listed in [`KEYS`] is required and
//! unknown keys are rejected. Environment variables named
//! `WIENERBO_<KEY>` (upper case) override individual keys; their values
//! are parsed as TOML values, so `WIENERBO_DOMAIN="[-4.0, 4.0]"` works.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};
use wienerbo_core::benchmark::CubicBenchmark;
use wienerbo_core::{BoundKind, BoundSpec, KernelSpec, SafeBoConfig};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: i64 = 1;
pub const ENV_PREFIX: &str = "WIENERBO_";
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

/// Tolerance between the configured `f_opt` and the numerically located
/// maximum of the objective.
pub const F_OPT_TOLERANCE: f64 = 1e-3;

pub const KEYS: [&str; 17] = [
    "schema_version",
    "coefficients",
    "f_min",
    "domain",
    "x_safe",
    "f_opt",
    "sigma_noise",
    "g_noise",
    "sigma_se",
    "l_se",
    "jitter",
    "rkhs_bound",
    "delta",
    "tau",
    "grid_points",
    "steps",
    "runs",
];

fn required_keys() -> impl Iterator<Item = &'static str> {
    KEYS.into_iter()
}

/// How the constraint observation is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GNoise {
    /// `y_g = −y_f + f_min`: the objective's noise enters both observations.
    Shared,
    /// `y_g = g(x) + m'` with an independent draw `m'`.
    Independent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkConfig {
    pub schema_version: i64,
    pub coefficients: [f64; 4],
    pub f_min: f64,
    pub domain: [f64; 2],
    pub x_safe: f64,
    pub f_opt: f64,
    pub sigma_noise: f64,
    pub g_noise: GNoise,
    pub sigma_se: f64,
    pub l_se: f64,
    pub jitter: f64,
    pub rkhs_bound: f64,
    pub delta: f64,
    pub tau: f64,
    pub grid_points: usize,
    pub steps: usize,
    pub runs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig::from_toml_str(DEFAULT_CONFIG).expect("shipped default config is valid")
    }
}

fn get<'a>(table: &'a Table, key: &str) -> Result<&'a Value> {
    table.get(key).ok_or_else(|| Error::config(key, "missing"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        other => {
            return Err(Error::config(
                key,
                format!("expected a number, found {}", other.type_str()),
            ))
        }
    };
    if !x.is_finite() {
        return Err(Error::config(key, "must be finite"));
    }
    Ok(x)
}

fn get_f64(table: &Table, key: &str) -> Result<f64> {
    as_f64(key, get(table, key)?)
}

fn get_usize(table: &Table, key: &str) -> Result<usize> {
    match get(table, key)? {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(_) => Err(Error::config(key, "must be non-negative")),
        other => Err(Error::config(
            key,
            format!("expected an integer, found {}", other.type_str()),
        )),
    }
}

fn get_array<const N: usize>(table: &Table, key: &str) -> Result<[f64; N]> {
    let Value::Array(items) = get(table, key)? else {
        return Err(Error::config(
            key,
            format!("expected an array of {N} numbers"),
        ));
    };
    if items.len() != N {
        return Err(Error::config(
            key,
            format!("expected {N} numbers, found {}", items.len()),
        ));
    }
    let mut out = [0.0; N];
    for (slot, v) in out.iter_mut().zip(items) {
        *slot = as_f64(key, v)?;
    }
    Ok(out)
}

impl BenchmarkConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        Self::from_table(&table)
    }

    /// Reads a config file and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text_with_env(&text, std::env::vars())
    }

    /// Parses `text`, applies `WIENERBO_*` overrides from `vars`, validates.
    pub fn from_text_with_env<I>(text: &str, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        apply_env(&mut table, vars)?;
        Self::from_table(&table)
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        if let Some(unknown) = table
            .keys()
            .find(|k| !required_keys().any(|r| r == k.as_str()))
        {
            return Err(Error::config(unknown.as_str(), "unknown key"));
        }
        for key in required_keys() {
            get(table, key)?;
        }
        let schema_version = match get(table, "schema_version")? {
            Value::Integer(v) => *v,
            _ => return Err(Error::config("schema_version", "expected an integer")),
        };
        let g_noise = match get(table, "g_noise")? {
            Value::String(s) if s == "shared" => GNoise::Shared,
            Value::String(s) if s == "independent" => GNoise::Independent,
            _ => {
                return Err(Error::config(
                    "g_noise",
                    "expected \"shared\" or \"independent\"",
                ))
            }
        };
        let cfg = BenchmarkConfig {
            schema_version,
            coefficients: get_array(table, "coefficients")?,
            f_min: get_f64(table, "f_min")?,
            domain: get_array(table, "domain")?,
            x_safe: get_f64(table, "x_safe")?,
            f_opt: get_f64(table, "f_opt")?,
            sigma_noise: get_f64(table, "sigma_noise")?,
            g_noise,
            sigma_se: get_f64(table, "sigma_se")?,
            l_se: get_f64(table, "l_se")?,
            jitter: get_f64(table, "jitter")?,
            rkhs_bound: get_f64(table, "rkhs_bound")?,
            delta: get_f64(table, "delta")?,
            tau: get_f64(table, "tau")?,
            grid_points: get_usize(table, "grid_points")?,
            steps: get_usize(table, "steps")?,
            runs: get_usize(table, "runs")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every field; the first failure names its field.
    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("must be positive, got {v}")))
            }
        };
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        let [lo, hi] = self.domain;
        if !(lo < hi) {
            return Err(Error::config(
                "domain",
                format!("lower bound {lo} must be below {hi}"),
            ));
        }
        if !(lo..=hi).contains(&self.x_safe) {
            return Err(Error::config("x_safe", "must lie inside the domain"));
        }
        let bench = self.benchmark();
        if bench.g(self.x_safe) > 0.0 {
            return Err(Error::config(
                "x_safe",
                format!(
                    "f(x_safe) = {} is below f_min = {}",
                    bench.f(self.x_safe),
                    self.f_min
                ),
            ));
        }
        let (_, found) = bench.maximize(lo, hi);
        if (found - self.f_opt).abs() > F_OPT_TOLERANCE {
            return Err(Error::config(
                "f_opt",
                format!(
                    "objective maximum on the domain is {found:.6}, config says {}",
                    self.f_opt
                ),
            ));
        }
        positive("sigma_noise", self.sigma_noise)?;
        positive("sigma_se", self.sigma_se)?;
        positive("l_se", self.l_se)?;
        if !(self.jitter >= 0.0) {
            return Err(Error::config("jitter", "must be non-negative"));
        }
        positive("rkhs_bound", self.rkhs_bound)?;
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(
                "delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        positive("tau", self.tau)?;
        if self.grid_points < 2 {
            return Err(Error::config("grid_points", "must be at least 2"));
        }
        if self.steps == 0 {
            return Err(Error::config("steps", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn benchmark(&self) -> CubicBenchmark {
        CubicBenchmark {
            coefficients: self.coefficients,
            f_min: self.f_min,
        }
    }

    /// Maximum of the objective on the domain, located numerically.
    pub fn computed_f_opt(&self) -> f64 {
        self.benchmark().maximize(self.domain[0], self.domain[1]).1
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        Ok(KernelSpec::squared_exponential(self.sigma_se, self.l_se)?)
    }

    pub fn bound_spec(&self, kind: BoundKind) -> Result<BoundSpec> {
        Ok(BoundSpec::new(kind, self.rkhs_bound, self.delta)?)
    }

    /// Loop configuration for one bound; objective and constraint share
    /// kernel, noise level, `B` and `δ`.
    pub fn safe_bo(&self, kind: BoundKind) -> Result<SafeBoConfig> {
        let spec = self.bound_spec(kind)?;
        let cfg = SafeBoConfig {
            domain: vec![(self.domain[0], self.domain[1])],
            grid_points: self.grid_points,
            tau: self.tau,
            x_safe: vec![self.x_safe],
            bound_f: spec,
            bound_g: spec,
            sigma_m: self.sigma_noise,
            jitter: self.jitter,
            kernel: self.kernel()?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// Replaces table entries with `WIENERBO_<KEY>` values from `vars`.
pub fn apply_env<I>(table: &mut Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    for (name, raw) in vars {
        let Some(suffix) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        let key = suffix.to_ascii_lowercase();
        if !required_keys().any(|k| k == key) {
            continue;
        }
        let value = parse_env_value(&raw);
        table.insert(key, value);
    }
    Ok(())
}

fn parse_env_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}
