//! Interpretable classifiers for imbalanced diagnostic data.
//!
//! The crate covers the whole path from raw inputs to compared results:
//! Haralick texture features from grayscale images ([`glcm`]), tabular
//! datasets and stratified splits ([`dataset`]), nine class-balancing
//! strategies ([`augment`]), grammatical evolution of arithmetic
//! classifiers ([`grammar`], [`evolution`]), a baseline classifier zoo
//! ([`baselines`]), and the evaluation statistics used to compare them
//! ([`metrics`], [`bayes`]). [`pipeline`] wires these together behind the
//! command-line front end.

pub mod augment;
pub mod baselines;
pub mod bayes;
pub mod config;
pub mod dataset;
mod error;
pub mod evolution;
pub mod glcm;
pub mod grammar;
pub mod metrics;
mod neighbors;
pub mod pipeline;
pub mod rng;

pub use error::{Error, Result};
