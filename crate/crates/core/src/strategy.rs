//! The two insured-portfolio strategies.
//!
//! **Constrained CPPI** invests `E_t = min(m·C_t, p·V_t)` in the risky
//! asset, where the cushion is `C_t = (V_t − F_t)⁺` above the discounted
//! floor `F_t = e^{−r(T−t)}·π·V₀`. Once the cushion is exhausted the
//! portfolio is locked into the riskless asset for good.
//!
//! **VBPI** picks the riskless fraction `w_t` at every rebalancing date
//! so that the floor is breached with probability α under the log-return
//! law of the risky asset:
//!
//! ```text
//! w_t = (F_t − V₀·e^{q_t}) / (V₀·(e^{rt} − e^{q_t})),   q_t = F⁻¹_{R_t}(α)
//! ```
//!
//! clamped into [0, 1]. The default (`inception`) mode anchors the
//! formula at `V₀` and the from-inception return distribution, exactly
//! as derived; `rolling` re-anchors at the current value over the
//! remaining horizon.
//!
//! Both strategies evolve self-financingly between rebalancing nodes:
//! each sleeve accrues its own gross return,
//! `V_{k+1} = E_k·(S_{k+1}/S_k) + (V_k − E_k)·(B_{k+1}/B_k)`.

use alloc::format;
use alloc::vec::Vec;


#[allow(unused_imports)] // resolves f64 math in no_std builds; std test builds shadow it
use num_traits::Float;

use crate::market::{AssetPath, MarketConfig};
use crate::retdist::{DistributionTable, ReturnDistribution};
use crate::{Error, Result};

/// Guaranteed-floor schedule: fraction `π` of the initial investment due
/// at maturity, discounted at `r` before then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloorSchedule {
    pi: f64,
    v0: f64,
}

impl FloorSchedule {
    pub fn new(pi: f64, v0: f64) -> Result<Self> {
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "floor fraction pi = {pi} must lie in (0, 1]"
            )));
        }
        if !(v0 > 0.0) || !v0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "initial value v0 = {v0} must be positive"
            )));
        }
        Ok(Self { pi, v0 })
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// `F_T = π·V₀`.
    pub fn terminal_floor(&self) -> f64 {
        self.pi * self.v0
    }
}

/// `F_t = e^{−r(T−t)}·F_T`.
pub fn floor_value(floor: &FloorSchedule, r: f64, horizon: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0 && t <= horizon + 1e-12);
    (-r * (horizon - t)).exp() * floor.terminal_floor()
}

/// Constrained-CPPI parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CppiSpec {
    pub multiple: f64,
    pub exposure_cap: f64,
    pub floor: FloorSchedule,
}

impl CppiSpec {
    pub fn new(multiple: f64, exposure_cap: f64, floor: FloorSchedule) -> Result<Self> {
        if !(multiple > 0.0) || !multiple.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "multiple m = {multiple} must be > 0"
            )));
        }
        if !(exposure_cap > 0.0) || !exposure_cap.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exposure cap p = {exposure_cap} must be > 0"
            )));
        }
        Ok(Self {
            multiple,
            exposure_cap,
            floor,
        })
    }
}

/// Anchoring mode for the VBPI weight formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VbpiBase {
    /// Anchor at `V₀` and the from-inception distribution of `R_t`.
    #[default]
    Inception,
    /// Re-anchor at the current value over the remaining horizon.
    Rolling,
}

/// VaR-based insurance parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VbpiSpec {
    pub confidence_level: f64,
    pub alpha: f64,
    pub floor: FloorSchedule,
    pub base: VbpiBase,
}

impl VbpiSpec {
    pub fn new(confidence_level: f64, floor: FloorSchedule, base: VbpiBase) -> Result<Self> {
        if !(confidence_level > 0.5 && confidence_level < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "confidence level {confidence_level} must lie in (0.5, 1)"
            )));
        }
        Ok(Self {
            confidence_level,
            alpha: 1.0 - confidence_level,
            floor,
            base,
        })
    }
}

/// Either strategy, as configured for one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategySpec {
    Cppi(CppiSpec),
    Vbpi(VbpiSpec),
}

impl StrategySpec {
    pub fn label(&self) -> &'static str {
        match self {
            StrategySpec::Cppi(_) => "cppi",
            StrategySpec::Vbpi(_) => "vbpi",
        }
    }

    pub fn floor(&self) -> &FloorSchedule {
        match self {
            StrategySpec::Cppi(s) => &s.floor,
            StrategySpec::Vbpi(s) => &s.floor,
        }
    }
}

/// Portfolio trajectory on the rebalancing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPath {
    pub times: Vec<f64>,
    pub value: Vec<f64>,
    /// Fraction of value held in the risky asset at each node.
    pub risky_weight: Vec<f64>,
    /// Cushion exhausted (CPPI) or weight clamped to a bound (VBPI).
    pub locked: Vec<bool>,
}

impl PortfolioPath {
    pub fn terminal_value(&self) -> f64 {
        *self.value.last().unwrap()
    }
}

/// Currency exposure to the risky asset: `min(m·(v − f)⁺, p·v)`.
pub fn cppi_exposure(spec: &CppiSpec, v: f64, f: f64) -> f64 {
    debug_assert!(v >= 0.0);
    let cushion = (v - f).max(0.0);
    (spec.multiple * cushion).min(spec.exposure_cap * v)
}

fn check_schedule(path: &AssetPath, every: usize) -> Result<usize> {
    let n_steps = path.s.len() - 1;
    if every == 0 {
        return Err(Error::InvalidParameter("rebalance stride must be >= 1".into()));
    }
    if !n_steps.is_multiple_of(every) {
        return Err(Error::InvalidParameter(format!(
            "rebalance stride {every} does not divide the {n_steps}-step grid"
        )));
    }
    Ok(n_steps / every)
}

/// Evolve constrained CPPI along `path`, rebalancing every `every`
/// market-grid steps. Portfolio values are recorded on the rebalancing
/// grid.
pub fn evolve_cppi(
    spec: &CppiSpec,
    cfg: &MarketConfig,
    path: &AssetPath,
    every: usize,
) -> Result<PortfolioPath> {
    let n_reb = check_schedule(path, every)?;
    let horizon = cfg.horizon;

    let mut times = Vec::with_capacity(n_reb + 1);
    let mut value = Vec::with_capacity(n_reb + 1);
    let mut weight = Vec::with_capacity(n_reb + 1);
    let mut locked_path = Vec::with_capacity(n_reb + 1);

    let mut v = spec.floor.v0();
    let mut locked = false;
    for k in 0..=n_reb {
        let node = k * every;
        let t = path.times[node];
        let f = floor_value(&spec.floor, cfg.r, horizon, t);
        if v <= f {
            locked = true;
        }
        let exposure = if locked { 0.0 } else { cppi_exposure(spec, v, f) };

        times.push(t);
        value.push(v);
        weight.push(if v != 0.0 { exposure / v } else { 0.0 });
        locked_path.push(locked);

        if k < n_reb {
            let next = node + every;
            let risky_gross = path.s[next] / path.s[node];
            let riskless_gross = path.b[next] / path.b[node];
            // Delta form keeps zero-return steps exactly value-preserving
            // and locked steps exactly riskless.
            v = if exposure == 0.0 {
                v * riskless_gross
            } else {
                v + exposure * (risky_gross - 1.0) + (v - exposure) * (riskless_gross - 1.0)
            };
        }
    }

    Ok(PortfolioPath {
        times,
        value,
        risky_weight: weight,
        locked: locked_path,
    })
}

/// Clamped weight plus whether the clamp was active.
fn weight_from_quantile(
    floor_amount: f64,
    base_value: f64,
    riskless_gross: f64,
    quantile: f64,
) -> Result<(f64, bool)> {
    let attainable = base_value * riskless_gross;
    if floor_amount > attainable {
        return Err(Error::InfeasibleFloor {
            floor: floor_amount,
            riskless: attainable,
        });
    }
    let eq = quantile.exp();
    let denom = base_value * (riskless_gross - eq);
    if denom == 0.0 {
        // Degenerate e^{rt} = e^{q}: the formula has no finite solution;
        // full riskless is the only safe reading.
        return Ok((1.0, true));
    }
    let raw = (floor_amount - base_value * eq) / denom;
    if raw < 0.0 {
        Ok((0.0, true))
    } else if raw > 1.0 {
        Ok((1.0, true))
    } else {
        Ok((raw, false))
    }
}

/// Riskless fraction prescribed by the VaR constraint at time `t`,
/// inception-anchored, clamped into [0, 1].
pub fn vbpi_weight(
    spec: &VbpiSpec,
    dist: &ReturnDistribution,
    v0: f64,
    r: f64,
    horizon: f64,
    t: f64,
) -> Result<f64> {
    let q = dist.quantile(spec.alpha)?;
    let f_t = floor_value(&spec.floor, r, horizon, t);
    let (w, _) = weight_from_quantile(f_t, v0, (r * t).exp(), q)?;
    Ok(w)
}

/// Evolve VBPI along `path`, rebalancing every `every` market-grid
/// steps.
///
/// `dists` must hold one distribution per rebalancing date `t_k > 0`,
/// in order (entry `k-1` for node `k`); in rolling mode the same table
/// is read by remaining horizon, which lands on the same grid.
pub fn evolve_vbpi(
    spec: &VbpiSpec,
    cfg: &MarketConfig,
    path: &AssetPath,
    every: usize,
    dists: &DistributionTable,
) -> Result<PortfolioPath> {
    let n_reb = check_schedule(path, every)?;
    if dists.len() < n_reb {
        return Err(Error::MissingDistribution(
            (dists.len() + 1) as f64 * path.times[every],
        ));
    }
    let horizon = cfg.horizon;
    let v0 = spec.floor.v0();
    let f_terminal = spec.floor.terminal_floor();

    // Distribution + formula time for rebalancing node k: the node's own
    // date, except node 0 which is 0/0 there and uses the first
    // rebalancing date instead.
    let entry_for_node = |k: usize| -> Result<(f64, &ReturnDistribution)> {
        let idx = if k == 0 { 0 } else { k - 1 };
        let (t, d) = dists
            .get(idx)
            .ok_or(Error::MissingDistribution((idx + 1) as f64))?;
        let expect = path.times[(idx + 1) * every];
        if (t - expect).abs() > 1e-9 * expect.max(1.0) {
            return Err(Error::MissingDistribution(expect));
        }
        Ok((*t, d))
    };

    let mut times = Vec::with_capacity(n_reb + 1);
    let mut value = Vec::with_capacity(n_reb + 1);
    let mut weight = Vec::with_capacity(n_reb + 1);
    let mut locked_path = Vec::with_capacity(n_reb + 1);

    let mut v = v0;
    let mut last_risky = 0.0;
    for k in 0..=n_reb {
        let node = k * every;
        let t = path.times[node];

        if k == n_reb {
            // Terminal node: record the drifted weight, no rebalance.
            times.push(t);
            value.push(v);
            weight.push(last_risky);
            locked_path.push(*locked_path.last().unwrap_or(&false));
            break;
        }

        let (w, pinned) = match spec.base {
            VbpiBase::Inception => {
                let (tw, dist) = entry_for_node(k)?;
                let q = dist.quantile(spec.alpha)?;
                let f_t = floor_value(&spec.floor, cfg.r, horizon, tw);
                weight_from_quantile(f_t, v0, (cfg.r * tw).exp(), q)?
            }
            VbpiBase::Rolling => {
                let tau = horizon - t;
                // Remaining horizons live on the same grid: τ = t_{K−k}.
                let idx = n_reb - k - 1;
                let (ttab, dist) = dists
                    .get(idx)
                    .ok_or(Error::MissingDistribution(tau))?;
                if (ttab - tau).abs() > 1e-9 * tau.max(1.0) {
                    return Err(Error::MissingDistribution(tau));
                }
                let q = dist.quantile(spec.alpha)?;
                // A path that gapped below the discounted floor can no
                // longer reach the guarantee risklessly; pin to bonds
                // instead of aborting the run.
                match weight_from_quantile(f_terminal, v, (cfg.r * tau).exp(), q) {
                    Ok(wp) => wp,
                    Err(Error::InfeasibleFloor { .. }) => (1.0, true),
                    Err(e) => return Err(e),
                }
            }
        };

        times.push(t);
        value.push(v);
        weight.push(1.0 - w);
        locked_path.push(pinned);

        let next = node + every;
        let risky_gross = path.s[next] / path.s[node];
        let riskless_gross = path.b[next] / path.b[node];
        // Sleeves partition v exactly; the delta form keeps zero-return
        // steps value-preserving and one-sided allocations exact.
        let risky = (1.0 - w) * v;
        let bond = v - risky;
        v = if risky == 0.0 {
            v * riskless_gross
        } else if bond == 0.0 {
            v * risky_gross
        } else {
            v + risky * (risky_gross - 1.0) + bond * (riskless_gross - 1.0)
        };
        last_risky = if v != 0.0 { risky * risky_gross / v } else { 0.0 };
    }

    Ok(PortfolioPath {
        times,
        value,
        risky_weight: weight,
        locked: locked_path,
    })
}

/// Multiple that gives CPPI the same initial risky allocation as a VBPI
/// strategy with initial riskless weight `w0`: `m·C₀ = (1 − w₀)·V₀`.
pub fn match_multiple(w0: f64, v0: f64, c0: f64) -> Result<f64> {
    if c0 <= 0.0 {
        return Err(Error::NoInitialCushion);
    }
    Ok((1.0 - w0) * v0 / c0)
}
