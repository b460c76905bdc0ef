//! Asset dynamics: deterministic riskless growth and exact log-Euler
//! risky paths under the regime-switching GBM.
//!
//! Within a grid step the regime is frozen at its left endpoint, so the
//! log-return increment is Gaussian with the frozen regime's parameters:
//!
//! ```text
//! ln S(t_{k+1}) − ln S(t_k) = (μ_α − σ_α²/2)·Δt + σ_α·√Δt·z_k
//! ```
//!
//! which is exact in distribution conditional on the regime path. Prices
//! are built multiplicatively and therefore stay strictly positive.

use alloc::format;
use alloc::vec::Vec;


#[allow(unused_imports)] // resolves f64 math in no_std builds; std test builds shadow it
use num_traits::Float;

use crate::regime::{RegimeModel, RegimePath};
use crate::{Error, Result};

/// Static market description: rates, initial prices and the time grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketConfig {
    /// Continuously compounded risk-free rate (1/year).
    pub r: f64,
    /// Initial risky price.
    pub s0: f64,
    /// Initial riskless price.
    pub b0: f64,
    /// Horizon T in years.
    pub horizon: f64,
    /// Grid frequency (260 daily, 52 weekly, 12 monthly).
    pub steps_per_year: u32,
}

impl MarketConfig {
    pub fn new(r: f64, s0: f64, b0: f64, horizon: f64, steps_per_year: u32) -> Result<Self> {
        if !(s0 > 0.0) || !(b0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial prices must be positive (s0={s0}, b0={b0})"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} must be positive"
            )));
        }
        if steps_per_year < 1 {
            return Err(Error::InvalidParameter("steps_per_year must be >= 1".into()));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParameter(format!("rate {r} must be finite")));
        }
        Ok(Self {
            r,
            s0,
            b0,
            horizon,
            steps_per_year,
        })
    }

    /// Number of grid steps over the horizon.
    pub fn n_steps(&self) -> usize {
        let n = (self.horizon * self.steps_per_year as f64).round();
        (n as usize).max(1)
    }

    /// Grid spacing in years.
    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }
}

/// One simulated market trajectory on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AssetPath {
    /// Grid times `t_k = k·dt`.
    pub times: Vec<f64>,
    /// Risky prices `S(t_k)`.
    pub s: Vec<f64>,
    /// Riskless prices `B(t_k) = B₀·e^{r·t_k}`.
    pub b: Vec<f64>,
    /// The regime path that generated the risky prices.
    pub regimes: RegimePath,
}

/// Riskless account value `B₀·e^{r·t}`.
pub fn riskless_value(cfg: &MarketConfig, t: f64) -> f64 {
    debug_assert!(t >= 0.0 && t <= cfg.horizon + 1e-12);
    cfg.b0 * (cfg.r * t).exp()
}

/// Evolve one risky path from a regime path and standard normal draws,
/// left-point regime convention.
pub fn sample_asset_path(
    cfg: &MarketConfig,
    model: &RegimeModel,
    regimes: RegimePath,
    normals: &[f64],
) -> Result<AssetPath> {
    let n = cfg.n_steps();
    if normals.len() != n {
        return Err(Error::InvalidParameter(format!(
            "need {n} normal draws, got {}",
            normals.len()
        )));
    }
    if regimes.states.len() != n + 1 {
        return Err(Error::InvalidParameter(format!(
            "regime path has {} nodes, grid needs {}",
            regimes.states.len(),
            n + 1
        )));
    }
    if regimes.states.iter().any(|&s| s >= model.num_states()) {
        return Err(Error::InvalidParameter("regime index out of range".into()));
    }

    let dt = cfg.dt();
    let sqrt_dt = dt.sqrt();
    let mut times = Vec::with_capacity(n + 1);
    let mut s = Vec::with_capacity(n + 1);
    let mut b = Vec::with_capacity(n + 1);

    times.push(0.0);
    s.push(cfg.s0);
    b.push(cfg.b0);
    let mut price = cfg.s0;
    for (k, (&state, &z)) in regimes.states.iter().zip(normals.iter()).enumerate() {
        let mu = model.mu()[state];
        let sig = model.sigma()[state];
        let step = (mu - sig * sig / 2.0) * dt + sig * sqrt_dt * z;
        price *= step.exp();
        let t = (k + 1) as f64 * dt;
        times.push(t);
        s.push(price);
        b.push(cfg.b0 * (cfg.r * t).exp());
    }
    Ok(AssetPath {
        times,
        s,
        b,
        regimes,
    })
}
