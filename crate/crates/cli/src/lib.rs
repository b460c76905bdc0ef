//! Experiment driver around `pisim-core`: deterministic parallel Monte
//! Carlo, configuration files, and CSV reporting.

// `!(x > 0.0)` validation rejects NaN, which `x <= 0.0` would accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod harness;
pub mod report;

pub use config::{load_config, ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, ExperimentError};
pub use harness::{histogram, run, Histogram, Rebalance, SimulationPlan, SimulationReport};
