//! Benchmark driver, file formats and command-line interface around
//! `wienerbo-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod invariants;
pub mod noise;
pub mod persist;
pub mod report;

pub use config::{BenchmarkConfig, GNoise};
pub use error::{Error, Result};
pub use experiment::{
    run_monte_carlo, summarize, ExperimentResult, RunRecord, StepRecord, Summary,
};
