//! Monte Carlo orchestration: per-path RNG substreams, parallel path
//! execution, and fixed-order aggregation.
//!
//! Reproducibility contract: path `j` draws its regime uniforms from
//! ChaCha stream `2j` and its Brownian normals from stream `2j + 1`,
//! both seeded by the master seed alone. Results are collected into an
//! index-ordered vector and reduced single-threaded, so a run is
//! bit-identical for any worker count. Competing strategies are
//! evaluated on the same asset path per index (common random numbers).

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use pisim_core::market::{sample_asset_path, AssetPath, MarketConfig};
use pisim_core::metrics::{thresholds_from_fractions, MetricsReport, TerminalSample};
use pisim_core::regime::{
    sample_regime_path_with, sample_state, transition_matrix, CumulativeTransition, RegimeModel,
};
use pisim_core::retdist::DistributionTable;
use pisim_core::strategy::{evolve_cppi, evolve_vbpi, StrategySpec};

/// Rebalancing frequency of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rebalance {
    Daily,
    Weekly,
    Monthly,
}

impl Rebalance {
    pub fn steps_per_year(&self) -> u32 {
        match self {
            Rebalance::Daily => 260,
            Rebalance::Weekly => 52,
            Rebalance::Monthly => 12,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Rebalance::Daily => "daily",
            Rebalance::Weekly => "weekly",
            Rebalance::Monthly => "monthly",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "daily" => Some(Rebalance::Daily),
            "weekly" => Some(Rebalance::Weekly),
            "monthly" => Some(Rebalance::Monthly),
            _ => None,
        }
    }
}

/// Report-shaping parameters carried alongside the plan.
#[derive(Debug, Clone)]
pub struct ReportParams {
    /// Omega/Kappa thresholds as fractions over the initial value.
    pub threshold_fractions: Vec<f64>,
    pub kappa_orders: Vec<u32>,
    pub histogram_bins: usize,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            threshold_fractions: vec![0.01, 0.02, 0.03, 0.04],
            kappa_orders: vec![2, 3],
            histogram_bins: 50,
        }
    }
}

/// Everything one simulation run needs. The market grid must be the
/// rebalancing grid times an integer monitoring factor.
#[derive(Debug, Clone)]
pub struct SimulationPlan {
    pub market: MarketConfig,
    pub model: RegimeModel,
    pub strategies: Vec<StrategySpec>,
    pub n_paths: usize,
    pub master_seed: u64,
    pub rebalance: Rebalance,
    pub report: ReportParams,
    /// Return distributions for the rebalance dates, shared across runs
    /// on the same (model, grid); built on demand when absent.
    pub prepared_dists: Option<std::sync::Arc<DistributionTable>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("strategy `{label}` ({params}): {source}")]
    Strategy {
        label: String,
        params: String,
        source: pisim_core::Error,
    },
    #[error(transparent)]
    Core(#[from] pisim_core::Error),
}

impl SimulationPlan {
    /// Market-grid steps per rebalancing interval.
    pub fn rebalance_every(&self) -> Result<usize, SimError> {
        let spy = self.market.steps_per_year;
        let freq = self.rebalance.steps_per_year();
        if !spy.is_multiple_of(freq) {
            return Err(SimError::Plan(format!(
                "market grid ({spy}/year) is not a multiple of the rebalance frequency ({freq}/year)"
            )));
        }
        Ok((spy / freq) as usize)
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.strategies.is_empty() {
            return Err(SimError::Plan("no strategies configured".into()));
        }
        if self.n_paths == 0 {
            return Err(SimError::Plan("n_paths must be >= 1".into()));
        }
        let spy = self.market.steps_per_year as f64;
        let cells = self.market.horizon * spy;
        if (cells - cells.round()).abs() > 1e-9 {
            return Err(SimError::Plan(format!(
                "horizon {} does not land on the {}-per-year grid",
                self.market.horizon, spy
            )));
        }
        let every = self.rebalance_every()?;
        if !self.market.n_steps().is_multiple_of(every) {
            return Err(SimError::Plan(
                "rebalance grid does not divide the market grid".into(),
            ));
        }
        Ok(())
    }
}

/// Source of asset paths indexed by path id. `run` uses the ChaCha
/// generator below; tests may inject deterministic paths.
pub trait PathSource: Sync {
    fn path(&self, j: usize) -> AssetPath;
}

/// Deterministic per-path generator: stream `2j` feeds the initial
/// regime and the transition uniforms, stream `2j + 1` the normals.
pub struct PathGenerator<'a> {
    market: &'a MarketConfig,
    model: &'a RegimeModel,
    cumulative: CumulativeTransition,
    master_seed: u64,
}

impl<'a> PathGenerator<'a> {
    pub fn new(
        market: &'a MarketConfig,
        model: &'a RegimeModel,
        master_seed: u64,
    ) -> Result<Self, SimError> {
        let cumulative = transition_matrix(model, market.dt())?.cumulative();
        Ok(Self {
            market,
            model,
            cumulative,
            master_seed,
        })
    }

    fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
        // Strictly inside (0, 1): reject the measure-zero 0.0 draw.
        loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl PathSource for PathGenerator<'_> {
    fn path(&self, j: usize) -> AssetPath {
        let n = self.market.n_steps();

        let mut u_rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        u_rng.set_stream(2 * j as u64);
        let initial_state = sample_state(self.model.initial_dist(), Self::open_unit(&mut u_rng));
        let uniforms: Vec<f64> = (0..n).map(|_| Self::open_unit(&mut u_rng)).collect();

        let mut z_rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        z_rng.set_stream(2 * j as u64 + 1);
        let normals: Vec<f64> = (0..n)
            .map(|_| StandardNormal.sample(&mut z_rng))
            .collect();

        let regimes =
            sample_regime_path_with(&self.cumulative, self.market.dt(), &uniforms, initial_state);
        sample_asset_path(self.market, self.model, regimes, &normals)
            .expect("grid lengths are consistent by construction")
    }
}

/// Uniform-bin frequency counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges spanning \[min, max\].
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Bin `values` into `n_bins` uniform bins over their range. A
/// degenerate sample (min = max) collapses to a single bin.
pub fn histogram(values: &[f64], n_bins: usize) -> Result<Histogram, SimError> {
    if values.is_empty() || n_bins == 0 {
        return Err(SimError::Plan("histogram needs values and bins".into()));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(Histogram {
            edges: vec![min, max],
            counts: vec![values.len() as u64],
        });
    }
    let width = (max - min) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let idx = (((v - min) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let edges = (0..=n_bins)
        .map(|i| {
            if i == n_bins {
                max
            } else {
                min + i as f64 * width
            }
        })
        .collect();
    Ok(Histogram { edges, counts })
}

/// Results for one strategy within a run.
#[derive(Debug, Clone)]
pub struct StrategyResult {
    pub label: &'static str,
    pub spec: StrategySpec,
    pub terminal_values: Vec<f64>,
    /// Present when the sample has at least two paths.
    pub metrics: Option<MetricsReport>,
    pub histogram: Histogram,
}

/// Run-level metadata for reporting.
#[derive(Debug, Clone)]
pub struct RuntimeMeta {
    pub master_seed: u64,
    pub n_paths: usize,
    pub market_steps: usize,
    pub rebalance_steps: usize,
    pub elapsed_secs: f64,
    pub paths_per_sec: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub strategies: Vec<StrategyResult>,
    pub runtime: RuntimeMeta,
}

/// Run the plan with the deterministic ChaCha path source.
pub fn run(plan: &SimulationPlan) -> Result<SimulationReport, SimError> {
    let source = PathGenerator::new(&plan.market, &plan.model, plan.master_seed)?;
    run_with_source(plan, &source)
}

/// Run the plan against an arbitrary path source (test hook).
pub fn run_with_source<S: PathSource>(
    plan: &SimulationPlan,
    source: &S,
) -> Result<SimulationReport, SimError> {
    plan.validate()?;
    let started = Instant::now();

    let every = plan.rebalance_every()?;
    let n_steps = plan.market.n_steps();
    let n_reb = n_steps / every;
    let dt = plan.market.dt();

    // One inversion per rebalance date, shared by every path.
    let needs_dists = plan
        .strategies
        .iter()
        .any(|s| matches!(s, StrategySpec::Vbpi(_)));
    let dists = if needs_dists {
        match &plan.prepared_dists {
            Some(table) => Some(std::sync::Arc::clone(table)),
            None => {
                let times: Vec<f64> = (1..=n_reb).map(|k| (k * every) as f64 * dt).collect();
                Some(std::sync::Arc::new(DistributionTable::build(
                    &plan.model,
                    &times,
                    pisim_core::retdist::DEFAULT_N_FFT,
                    pisim_core::retdist::DEFAULT_WIDTH_SIGMAS,
                )?))
            }
        }
    } else {
        None
    };

    let evolve_one = |path: &AssetPath| -> Result<Vec<f64>, SimError> {
        plan.strategies
            .iter()
            .map(|spec| {
                let evolved = match spec {
                    StrategySpec::Cppi(c) => evolve_cppi(c, &plan.market, path, every),
                    StrategySpec::Vbpi(v) => evolve_vbpi(
                        v,
                        &plan.market,
                        path,
                        every,
                        dists.as_ref().expect("distribution table built above"),
                    ),
                };
                evolved
                    .map(|p| p.terminal_value())
                    .map_err(|source| SimError::Strategy {
                        label: spec.label().to_string(),
                        params: describe(spec),
                        source,
                    })
            })
            .collect()
    };

    // Index-ordered collection keeps the reduction order fixed for any
    // worker count.
    let per_path: Vec<Result<Vec<f64>, SimError>> = (0..plan.n_paths)
        .into_par_iter()
        .map(|j| evolve_one(&source.path(j)))
        .collect();

    let mut columns: Vec<Vec<f64>> =
        vec![Vec::with_capacity(plan.n_paths); plan.strategies.len()];
    for row in per_path {
        let row = row?;
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }

    let mut strategies = Vec::with_capacity(plan.strategies.len());
    for (spec, terminal_values) in plan.strategies.iter().zip(columns) {
        let floor = spec.floor();
        let metrics = if terminal_values.len() >= 2 {
            let sample = TerminalSample::new(
                terminal_values.clone(),
                floor.v0(),
                floor.terminal_floor(),
                plan.market.r,
                plan.market.horizon,
            )
            .map_err(SimError::Core)?;
            let thresholds =
                thresholds_from_fractions(floor.v0(), &plan.report.threshold_fractions);
            Some(MetricsReport::compute(
                &sample,
                &thresholds,
                &plan.report.kappa_orders,
            ))
        } else {
            None
        };
        let hist = histogram(&terminal_values, plan.report.histogram_bins)?;
        strategies.push(StrategyResult {
            label: spec.label(),
            spec: *spec,
            terminal_values,
            metrics,
            histogram: hist,
        });
    }

    let elapsed = started.elapsed().as_secs_f64();
    Ok(SimulationReport {
        strategies,
        runtime: RuntimeMeta {
            master_seed: plan.master_seed,
            n_paths: plan.n_paths,
            market_steps: n_steps,
            rebalance_steps: n_reb,
            elapsed_secs: elapsed,
            paths_per_sec: plan.n_paths as f64 / elapsed.max(1e-9),
        },
    })
}

fn describe(spec: &StrategySpec) -> String {
    match spec {
        StrategySpec::Cppi(c) => format!(
            "m={}, p={}, pi={}",
            c.multiple,
            c.exposure_cap,
            c.floor.pi()
        ),
        StrategySpec::Vbpi(v) => format!("cl={}, pi={}", v.confidence_level, v.floor.pi()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pisim_core::strategy::{CppiSpec, FloorSchedule, VbpiBase, VbpiSpec};

    fn single_regime_model(mu: f64, sigma: f64) -> RegimeModel {
        RegimeModel::new(vec![0.0], vec![mu], vec![sigma], Some(vec![1.0])).unwrap()
    }

    struct ZeroNoise {
        market: MarketConfig,
        model: RegimeModel,
    }

    impl PathSource for ZeroNoise {
        fn path(&self, _j: usize) -> AssetPath {
            let n = self.market.n_steps();
            let regimes = pisim_core::regime::RegimePath {
                states: vec![0; n + 1],
                dt: self.market.dt(),
            };
            sample_asset_path(&self.market, &self.model, regimes, &vec![0.0; n]).unwrap()
        }
    }

    fn plan(market: MarketConfig, model: RegimeModel, strategies: Vec<StrategySpec>) -> SimulationPlan {
        SimulationPlan {
            market,
            model,
            strategies,
            n_paths: 2,
            master_seed: 7,
            rebalance: Rebalance::Monthly,
            report: ReportParams::default(),
            prepared_dists: None,
        }
    }

    #[test]
    fn deterministic_zero_noise_run_matches_closed_form() {
        let market = MarketConfig::new(0.04, 100.0, 1.0, 1.0, 12).unwrap();
        let model = single_regime_model(0.04, 0.16);
        let floor = FloorSchedule::new(1.0, 100.0).unwrap();
        let strategies = vec![
            StrategySpec::Cppi(CppiSpec::new(5.0, 1.0, floor).unwrap()),
            StrategySpec::Vbpi(VbpiSpec::new(0.95, floor, VbpiBase::Inception).unwrap()),
        ];
        let p = plan(market, model.clone(), strategies);
        let source = ZeroNoise { market, model };
        let report = run_with_source(&p, &source).unwrap();

        // With all normals at zero, S grows at e^{(mu - sigma^2/2) dt} per
        // step; replicate both recursions directly.
        let path = source.path(0);
        let every = 1usize;
        let mut v_cppi = 100.0;
        let mut locked = false;
        for k in 0..12 {
            let t = path.times[k];
            let f = (-(0.04) * (1.0 - t)).exp() * 100.0;
            if v_cppi <= f {
                locked = true;
            }
            let e = if locked {
                0.0
            } else {
                (5.0 * (v_cppi - f).max(0.0)).min(v_cppi)
            };
            let sr = path.s[k + every] / path.s[k];
            let br = path.b[k + every] / path.b[k];
            v_cppi = if e == 0.0 {
                v_cppi * br
            } else {
                v_cppi + e * (sr - 1.0) + (v_cppi - e) * (br - 1.0)
            };
        }
        let got = report.strategies[0].terminal_values[0];
        assert!((got - v_cppi).abs() < 1e-10, "{got} vs {v_cppi}");

        // Common random numbers: both paths identical under this source,
        // and per-strategy sample sizes match the path count.
        for s in &report.strategies {
            assert_eq!(s.terminal_values.len(), 2);
            assert_eq!(s.terminal_values[0], s.terminal_values[1]);
        }
    }

    #[test]
    fn identical_plans_reproduce_bitwise() {
        let market = MarketConfig::new(0.04, 100.0, 1.0, 1.0, 12).unwrap();
        let model = RegimeModel::new(
            vec![-0.25, 0.25, 0.25, -0.25],
            vec![0.14, -0.01],
            vec![0.16, 0.20],
            None,
        )
        .unwrap();
        let floor = FloorSchedule::new(1.0, 100.0).unwrap();
        let strategies = vec![StrategySpec::Cppi(CppiSpec::new(6.0, 1.0, floor).unwrap())];
        let mut p = plan(market, model, strategies);
        p.n_paths = 64;
        let a = run(&p).unwrap();
        let b = run(&p).unwrap();
        assert_eq!(a.strategies[0].terminal_values, b.strategies[0].terminal_values);
    }

    #[test]
    fn histogram_examples() {
        let h = histogram(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(h.edges, vec![1.0, 2.5, 4.0]);
        assert_eq!(h.counts, vec![2, 2]);

        let h = histogram(&[5.0; 9], 4).unwrap();
        assert_eq!(h.edges, vec![5.0, 5.0]);
        assert_eq!(h.counts, vec![9]);

        let values: Vec<f64> = (0..137).map(|i| (i as f64 * 0.77).sin() * 10.0).collect();
        let h = histogram(&values, 7).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 137);
    }

    #[test]
    fn plan_grid_mismatch_is_rejected() {
        let market = MarketConfig::new(0.04, 100.0, 1.0, 1.0, 52).unwrap();
        let model = single_regime_model(0.04, 0.16);
        let floor = FloorSchedule::new(1.0, 100.0).unwrap();
        let strategies = vec![StrategySpec::Cppi(CppiSpec::new(5.0, 1.0, floor).unwrap())];
        // Monthly rebalancing over a weekly market grid: 52 % 12 != 0.
        let p = plan(market, model, strategies);
        assert!(matches!(run(&p), Err(SimError::Plan(_))));
    }
}
