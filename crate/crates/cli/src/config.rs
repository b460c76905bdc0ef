//! Experiment configuration: TOML schema, defaults and validation.
//!
//! See `docs/config.md` for the documented schema and `paper.config`
//! for the shipped benchmark parameter set.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use pisim_core::regime::RegimeModel;
use pisim_core::strategy::VbpiBase;

use crate::harness::Rebalance;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Validation(msg.into())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    market: RawMarket,
    model: RawModel,
    #[serde(default)]
    strategy: RawStrategy,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMarket {
    r: f64,
    #[serde(default = "default_s0")]
    s0: f64,
    #[serde(default = "default_b0")]
    b0: f64,
    #[serde(default = "default_horizon")]
    horizon: f64,
    /// Trading days per year; the grid frequency used by the `daily`
    /// rebalance schedule.
    #[serde(default = "default_steps_per_year")]
    steps_per_year: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegime {
    mu: f64,
    sigma: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    regimes: Vec<RawRegime>,
    generator: Vec<Vec<f64>>,
    initial_dist: Option<Vec<f64>>,
    #[serde(default = "default_fft_size")]
    fft_size: usize,
    #[serde(default = "default_fft_width")]
    fft_width_sigmas: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawStrategy {
    v0: f64,
    pi: f64,
    exposure_cap: f64,
    confidence_levels: Vec<f64>,
    vbpi_base: String,
    kappa_orders: Vec<u32>,
    thresholds: Vec<f64>,
}

impl Default for RawStrategy {
    fn default() -> Self {
        Self {
            v0: 100.0,
            pi: 1.0,
            exposure_cap: 1.0,
            confidence_levels: vec![0.90, 0.95, 0.99],
            vbpi_base: "inception".into(),
            kappa_orders: vec![2, 3],
            thresholds: vec![0.01, 0.02, 0.03, 0.04],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSim {
    paths: usize,
    seed: u64,
    rebalance: Vec<String>,
    /// Market-grid steps per rebalance interval (> 1 enables finer
    /// monitoring of the asset between rebalances).
    monitor_substeps: u32,
}

impl Default for RawSim {
    fn default() -> Self {
        Self {
            paths: 10_000,
            seed: 42,
            rebalance: vec!["daily".into(), "weekly".into(), "monthly".into()],
            monitor_substeps: 1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOutput {
    directory: String,
    histogram_bins: usize,
    dump_distributions: bool,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self {
            directory: "out".into(),
            histogram_bins: 50,
            dump_distributions: false,
        }
    }
}

fn default_s0() -> f64 {
    100.0
}
fn default_b0() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    1.0
}
fn default_steps_per_year() -> u32 {
    260
}
fn default_fft_size() -> usize {
    pisim_core::retdist::DEFAULT_N_FFT
}
fn default_fft_width() -> f64 {
    pisim_core::retdist::DEFAULT_WIDTH_SIGMAS
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub r: f64,
    pub s0: f64,
    pub b0: f64,
    pub horizon: f64,
    pub steps_per_year: u32,
    pub model: RegimeModel,
    pub fft_size: usize,
    pub fft_width_sigmas: f64,
    pub v0: f64,
    pub pi: f64,
    pub exposure_cap: f64,
    pub confidence_levels: Vec<f64>,
    pub vbpi_base: VbpiBase,
    pub kappa_orders: Vec<u32>,
    pub thresholds: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub rebalance: Vec<Rebalance>,
    pub monitor_substeps: u32,
    pub out_dir: String,
    pub histogram_bins: usize,
    pub dump_distributions: bool,
}

/// Load and validate a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    validate(raw)
}

fn validate(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let h = raw.model.regimes.len();
    if h == 0 {
        return Err(invalid("model.regimes must be nonempty"));
    }
    if raw.model.generator.len() != h {
        return Err(invalid(format!(
            "model.generator must have {h} rows, got {}",
            raw.model.generator.len()
        )));
    }
    let mut flat = Vec::with_capacity(h * h);
    for (i, row) in raw.model.generator.iter().enumerate() {
        if row.len() != h {
            return Err(invalid(format!(
                "model.generator row {i} has {} entries, expected {h}",
                row.len()
            )));
        }
        let sum: f64 = row.iter().sum();
        if sum.abs() > 1e-12 {
            return Err(invalid(format!(
                "model.generator row {i} sums to {sum}, expected 0"
            )));
        }
        flat.extend_from_slice(row);
    }
    let mu: Vec<f64> = raw.model.regimes.iter().map(|r| r.mu).collect();
    let sigma: Vec<f64> = raw.model.regimes.iter().map(|r| r.sigma).collect();
    let model = RegimeModel::new(flat, mu, sigma, raw.model.initial_dist.clone())
        .map_err(|e| invalid(format!("model: {e}")))?;

    if !(raw.market.s0 > 0.0) {
        return Err(invalid("market.s0 must be > 0"));
    }
    if !(raw.market.b0 > 0.0) {
        return Err(invalid("market.b0 must be > 0"));
    }
    if !(raw.market.horizon > 0.0) {
        return Err(invalid("market.horizon must be > 0"));
    }
    if raw.market.steps_per_year < 1 {
        return Err(invalid("market.steps_per_year must be >= 1"));
    }

    if !(raw.strategy.v0 > 0.0) {
        return Err(invalid("strategy.v0 must be > 0"));
    }
    if !(raw.strategy.pi > 0.0 && raw.strategy.pi <= 1.0) {
        return Err(invalid("strategy.pi must lie in (0, 1]"));
    }
    if !(raw.strategy.exposure_cap > 0.0) {
        return Err(invalid("strategy.exposure_cap must be > 0"));
    }
    if raw.strategy.confidence_levels.is_empty() {
        return Err(invalid("strategy.confidence_levels must be nonempty"));
    }
    for &cl in &raw.strategy.confidence_levels {
        if !(cl > 0.5 && cl < 1.0) {
            return Err(invalid(format!(
                "strategy.confidence_levels entry {cl} must lie in (0.5, 1)"
            )));
        }
    }
    let vbpi_base = match raw.strategy.vbpi_base.as_str() {
        "inception" => VbpiBase::Inception,
        "rolling" => VbpiBase::Rolling,
        other => {
            return Err(invalid(format!(
                "strategy.vbpi_base must be `inception` or `rolling`, got `{other}`"
            )))
        }
    };
    if raw.strategy.kappa_orders.is_empty() || raw.strategy.kappa_orders.iter().any(|&n| n < 1) {
        return Err(invalid("strategy.kappa_orders must be nonempty, entries >= 1"));
    }
    if raw.strategy.thresholds.is_empty() {
        return Err(invalid("strategy.thresholds must be nonempty"));
    }

    if raw.sim.paths < 2 {
        return Err(invalid("sim.paths must be >= 2"));
    }
    if raw.sim.rebalance.is_empty() {
        return Err(invalid("sim.rebalance must be nonempty"));
    }
    let mut rebalance = Vec::with_capacity(raw.sim.rebalance.len());
    for s in &raw.sim.rebalance {
        match Rebalance::parse(s) {
            Some(r) => rebalance.push(r),
            None => {
                return Err(invalid(format!(
                    "sim.rebalance entry `{s}` must be daily, weekly or monthly"
                )))
            }
        }
    }
    if raw.sim.monitor_substeps < 1 {
        return Err(invalid("sim.monitor_substeps must be >= 1"));
    }
    if !raw.model.fft_size.is_power_of_two() || raw.model.fft_size < (1 << 10) {
        return Err(invalid("model.fft_size must be a power of two >= 1024"));
    }
    if !(raw.model.fft_width_sigmas > 0.0) {
        return Err(invalid("model.fft_width_sigmas must be > 0"));
    }
    if raw.output.histogram_bins < 1 {
        return Err(invalid("output.histogram_bins must be >= 1"));
    }

    Ok(ExperimentConfig {
        r: raw.market.r,
        s0: raw.market.s0,
        b0: raw.market.b0,
        horizon: raw.market.horizon,
        steps_per_year: raw.market.steps_per_year,
        model,
        fft_size: raw.model.fft_size,
        fft_width_sigmas: raw.model.fft_width_sigmas,
        v0: raw.strategy.v0,
        pi: raw.strategy.pi,
        exposure_cap: raw.strategy.exposure_cap,
        confidence_levels: raw.strategy.confidence_levels,
        vbpi_base,
        kappa_orders: raw.strategy.kappa_orders,
        thresholds: raw.strategy.thresholds,
        paths: raw.sim.paths,
        seed: raw.sim.seed,
        rebalance,
        monitor_substeps: raw.sim.monitor_substeps,
        out_dir: raw.output.directory,
        histogram_bins: raw.output.histogram_bins,
        dump_distributions: raw.output.dump_distributions,
    })
}
