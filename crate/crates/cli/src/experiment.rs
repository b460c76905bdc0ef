//! Experiment matrix driver: expands (rebalance × confidence level ×
//! strategy), matches the CPPI multiple to the initial VBPI allocation
//! per cell, runs the harness, and emits the CSV reports.

use std::fs;
use std::sync::Arc;
use std::path::{Path, PathBuf};

use pisim_core::market::MarketConfig;
use pisim_core::retdist::DistributionTable;
use pisim_core::strategy::{
    floor_value, match_multiple, vbpi_weight, CppiSpec, FloorSchedule, StrategySpec, VbpiSpec,
};

use crate::config::ExperimentConfig;
use crate::harness::{run, Rebalance, ReportParams, SimError, SimulationPlan};
use crate::report::{
    write_distributions, write_histogram, write_metrics_csv, write_terminal_values, MetricsRow,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    /// Configuration-level failure (exit code 1).
    #[error("{0}")]
    Config(String),
    /// Numeric or runtime failure (exit code 2).
    #[error("{0}")]
    Numeric(String),
}

/// Parameter infeasibilities are configuration problems (exit 1);
/// failures of the numerics themselves are exit 2.
fn classify(prefix: &str, e: &pisim_core::Error) -> ExperimentError {
    use pisim_core::Error::*;
    let msg = if prefix.is_empty() {
        e.to_string()
    } else {
        format!("{prefix}: {e}")
    };
    match e {
        InvalidModel(_) | InvalidParameter(_) | InfeasibleFloor { .. } | NoInitialCushion => {
            ExperimentError::Config(msg)
        }
        NumericFailure(_) | GridTooNarrow { .. } | InsufficientResolution { .. }
        | NoUniqueStationary | MissingDistribution(_) => ExperimentError::Numeric(msg),
    }
}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Plan(msg) => ExperimentError::Config(msg),
            SimError::Strategy {
                label,
                params,
                source,
            } => classify(&format!("strategy `{label}` ({params})"), &source),
            SimError::Core(source) => classify("", &source),
        }
    }
}

impl From<pisim_core::Error> for ExperimentError {
    fn from(e: pisim_core::Error) -> Self {
        classify("", &e)
    }
}

/// One expanded cell of the experiment matrix.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub rebalance: Rebalance,
    pub cl: f64,
    /// Initial VBPI riskless weight at the first rebalance date.
    pub w0: f64,
    /// Matched CPPI multiple.
    pub multiple: f64,
    pub market_steps: usize,
    pub rebalance_steps: usize,
}

/// Initial cushion for multiple matching; fails when the discounted
/// floor leaves none.
fn initial_cushion(cfg: &ExperimentConfig, floor: &FloorSchedule) -> Result<f64, ExperimentError> {
    let c0 = cfg.v0 - floor_value(floor, cfg.r, cfg.horizon, 0.0);
    if c0 <= 0.0 {
        return Err(ExperimentError::Config(format!(
            "no initial cushion for multiple matching: pi={}, r={}, horizon={} leave C0={c0}",
            cfg.pi, cfg.r, cfg.horizon
        )));
    }
    Ok(c0)
}

/// VBPI weight at the first rebalance date and the multiple matching
/// the CPPI initial allocation to it.
fn matched_cell(
    cfg: &ExperimentConfig,
    floor: FloorSchedule,
    c0: f64,
    dist1: &pisim_core::retdist::ReturnDistribution,
    t1: f64,
    cl: f64,
) -> Result<(f64, f64), ExperimentError> {
    let vbpi = VbpiSpec::new(cl, floor, cfg.vbpi_base)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let w0 = vbpi_weight(&vbpi, dist1, cfg.v0, cfg.r, cfg.horizon, t1)
        .map_err(|e| classify(&format!("vbpi cl={cl}"), &e))?;
    let multiple = match_multiple(w0, cfg.v0, c0)
        .map_err(|e| classify(&format!("cl={cl}"), &e))?;
    Ok((w0, multiple))
}

/// Matrix expansion with matched multiples; what `--dry-run` prints.
pub fn expand_matrix(cfg: &ExperimentConfig) -> Result<Vec<CellPlan>, ExperimentError> {
    let floor = FloorSchedule::new(cfg.pi, cfg.v0)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let c0 = initial_cushion(cfg, &floor)?;

    let mut cells = Vec::new();
    for &reb in &cfg.rebalance {
        let market = market_for(cfg, reb)?;
        let every = cfg.monitor_substeps as usize;
        let n_steps = market.n_steps();
        let n_reb = n_steps / every;
        // Distribution at the first rebalance date prices the initial
        // VBPI weight (the weight formula is 0/0 at t = 0).
        let t1 = every as f64 * market.dt();
        let dists = DistributionTable::build(&cfg.model, &[t1], cfg.fft_size, cfg.fft_width_sigmas)?;
        let (_, dist1) = dists.get(0).expect("just built");

        for &cl in &cfg.confidence_levels {
            let (w0, multiple) = matched_cell(cfg, floor, c0, dist1, t1, cl)?;
            cells.push(CellPlan {
                rebalance: reb,
                cl,
                w0,
                multiple,
                market_steps: n_steps,
                rebalance_steps: n_reb,
            });
        }
    }
    Ok(cells)
}

fn market_for(cfg: &ExperimentConfig, reb: Rebalance) -> Result<MarketConfig, ExperimentError> {
    let spy_reb = match reb {
        // `daily` follows the configured trading-day count.
        Rebalance::Daily => cfg.steps_per_year,
        Rebalance::Weekly => 52,
        Rebalance::Monthly => 12,
    };
    let spy_market = spy_reb * cfg.monitor_substeps;
    MarketConfig::new(cfg.r, cfg.s0, cfg.b0, cfg.horizon, spy_market)
        .map_err(|e| ExperimentError::Config(e.to_string()))
}

/// `Rebalance::steps_per_year` honoring the configured trading days.
fn rebalance_frequency(cfg: &ExperimentConfig, reb: Rebalance) -> u32 {
    match reb {
        Rebalance::Daily => cfg.steps_per_year,
        Rebalance::Weekly => 52,
        Rebalance::Monthly => 12,
    }
}

/// Tracks files created by a run so partial output can be removed when
/// the run fails.
struct OutputTracker {
    created: Vec<PathBuf>,
}

impl OutputTracker {
    fn new() -> Self {
        Self { created: Vec::new() }
    }

    fn track(&mut self, path: PathBuf) -> PathBuf {
        self.created.push(path.clone());
        path
    }

    fn cleanup(&self) {
        for p in &self.created {
            let _ = fs::remove_file(p);
        }
    }
}

/// Summary returned on success.
#[derive(Debug)]
pub struct RunSummary {
    pub metric_rows: usize,
    pub files_written: usize,
    pub out_dir: PathBuf,
}

/// Run the full experiment matrix and write all reports under
/// `out_dir`. On failure, every file created by this run is removed.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, ExperimentError> {
    let mut tracker = OutputTracker::new();
    match run_experiment_inner(cfg, out_dir, &mut tracker) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            tracker.cleanup();
            Err(e)
        }
    }
}

fn run_experiment_inner(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    tracker: &mut OutputTracker,
) -> Result<RunSummary, ExperimentError> {
    fs::create_dir_all(out_dir)
        .map_err(|e| ExperimentError::Config(format!("cannot create {}: {e}", out_dir.display())))?;

    let floor = FloorSchedule::new(cfg.pi, cfg.v0)
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let c0 = initial_cushion(cfg, &floor)?;

    let mut rows: Vec<MetricsRow> = Vec::new();

    for &reb in &cfg.rebalance {
        let market = market_for(cfg, reb)?;
        let every = cfg.monitor_substeps as usize;
        let n_reb = market.n_steps() / every;

        // One inversion per rebalance date, shared by every cell and
        // every path at this frequency.
        let times: Vec<f64> = (1..=n_reb)
            .map(|k| (k * every) as f64 * market.dt())
            .collect();
        let table = Arc::new(DistributionTable::build(
            &cfg.model,
            &times,
            cfg.fft_size,
            cfg.fft_width_sigmas,
        )?);
        let (t1, dist1) = table.get(0).expect("at least one rebalance date");
        let (t1, dist1) = (*t1, dist1.clone());

        for &cl in &cfg.confidence_levels {
            let (_, multiple) = matched_cell(cfg, floor, c0, &dist1, t1, cl)?;
            let cppi = CppiSpec::new(multiple.max(f64::MIN_POSITIVE), cfg.exposure_cap, floor)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            let vbpi = VbpiSpec::new(cl, floor, cfg.vbpi_base)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
            let plan = SimulationPlan {
                market,
                model: cfg.model.clone(),
                strategies: vec![StrategySpec::Cppi(cppi), StrategySpec::Vbpi(vbpi)],
                n_paths: cfg.paths,
                master_seed: cfg.seed,
                rebalance: reb,
                report: ReportParams {
                    threshold_fractions: cfg.thresholds.clone(),
                    kappa_orders: cfg.kappa_orders.clone(),
                    histogram_bins: cfg.histogram_bins,
                },
                prepared_dists: Some(Arc::clone(&table)),
            };
            let report = run(&plan)?;

            let cl_tag = format_cl(cl);
            for strat in &report.strategies {
                let stem = format!("{}_{}_{}", strat.label, reb.label(), cl_tag);
                let tv = tracker.track(out_dir.join(format!("terminal_values_{stem}.csv")));
                write_terminal_values(&tv, &strat.terminal_values)
                    .map_err(|e| ExperimentError::Numeric(format!("write {}: {e}", tv.display())))?;
                let hg = tracker.track(out_dir.join(format!("histogram_{stem}.csv")));
                write_histogram(&hg, &strat.histogram)
                    .map_err(|e| ExperimentError::Numeric(format!("write {}: {e}", hg.display())))?;
                rows.push(MetricsRow {
                    strategy: strat.label.to_string(),
                    rebalance: reb.label().to_string(),
                    cl_percent: cl * 100.0,
                    report: strat
                        .metrics
                        .clone()
                        .ok_or_else(|| ExperimentError::Numeric("metrics need >= 2 paths".into()))?,
                });
            }
        }

        if cfg.dump_distributions {
            let path = tracker.track(out_dir.join(format!("distributions_{}.csv", reb.label())));
            let entries = (0..table.len()).map(|i| {
                let (t, d) = table.get(i).expect("index in range");
                (*t, d)
            });
            write_distributions(&path, entries)
                .map_err(|e| ExperimentError::Numeric(format!("write {}: {e}", path.display())))?;
        }
    }

    let metrics_path = tracker.track(out_dir.join("metrics.csv"));
    write_metrics_csv(&metrics_path, &rows, cfg.thresholds.len(), &cfg.kappa_orders)
        .map_err(|e| ExperimentError::Numeric(format!("write {}: {e}", metrics_path.display())))?;

    Ok(RunSummary {
        metric_rows: rows.len(),
        files_written: tracker.created.len(),
        out_dir: out_dir.to_path_buf(),
    })
}

/// Confidence level as a percent tag for file names: 0.95 → "95",
/// 0.975 → "97.5".
pub fn format_cl(cl: f64) -> String {
    let pct = cl * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}", pct.round() as i64)
    } else {
        format!("{pct}")
    }
}

/// Human-readable dry-run listing.
pub fn describe_matrix(cfg: &ExperimentConfig, cells: &[CellPlan]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "experiment matrix: {} cells x 2 strategies, {} paths, seed {}",
        cells.len(),
        cfg.paths,
        cfg.seed
    );
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>10} {:>10} {:>8} {:>8}",
        "rebalance", "cl%", "w0", "m", "steps", "rebals"
    );
    for c in cells {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>10.6} {:>10.4} {:>8} {:>8}",
            c.rebalance.label(),
            format_cl(c.cl),
            c.w0,
            c.multiple,
            c.market_steps,
            c.rebalance_steps,
        );
    }
    let _ = writeln!(
        out,
        "frequencies use {} trading days/year; monitor substeps = {}",
        cfg.steps_per_year, cfg.monitor_substeps
    );
    let _ = write!(
        out,
        "rebalance grids: {}",
        cfg.rebalance
            .iter()
            .map(|r| format!("{}={}per year", r.label(), rebalance_frequency(cfg, *r)))
            .collect::<Vec<_>>()
            .join(", ")
    );
    out
}
