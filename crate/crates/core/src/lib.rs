//! Safe Bayesian optimization with Gaussian-process surrogates.
//!
//! The crate provides exact GP regression together with the Wiener-kernel
//! variance, three probabilistic uniform error bounds built on them, and an
//! interior-point safe BO loop that uses those bounds both for the
//! acquisition function and for the constraint surrogate.
//!
//! Everything here is `no_std` (with `alloc`): IO, configuration files,
//! random number generation and the Monte Carlo driver live in the
//! `wienerbo` crate.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod benchmark;
pub mod bounds;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod safe_bo;

pub use bounds::{
    beta_1, beta_2, beta_wk, error_bound, gamma_condition, ucb, BoundKind, BoundParams, BoundSpec,
    BoundValue, GammaCondition,
};
pub use error::{Error, Result};
pub use gp::{feature_space_gap, variance_clamp_count, Dataset, GpModel, PosteriorQuery};
pub use kernels::{FeatureMap, GramMatrix, KernelSpec, Points};
pub use safe_bo::{
    acquisition_score, observe, run, safe_region, select_action, Action, BoState, SafeBoConfig,
    SafeRegion, TrajectoryStep,
};
