//! Simulation-based design of Bayesian posterior analyses.
//!
//! Given a model, an interval hypothesis and data generation processes under
//! the null and the alternative, the crate finds the smallest sample size `n`
//! and a critical value `gamma` such that the estimated power is at least
//! `1 - beta` and the estimated type I error rate at most `alpha`. Sampling
//! distributions of posterior probabilities are simulated at only two sample
//! sizes; their logits are extrapolated linearly in `n` to explore the rest of
//! the sample size space.
//!
//! The main entry points are [`design::optimize`], [`design::bootstrap_cis`]
//! and [`contour::build_grid`]. [`config::DesignConfig`] describes a full design
//! problem and can be read from TOML.

pub mod cli;
pub mod config;
pub mod contour;
pub mod design;
pub mod error;
pub mod models;
pub mod numeric;
pub mod proxy;
pub mod rng;
pub mod sampdist;

pub use error::{Error, Result};
