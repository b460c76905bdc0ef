//! Risk-adjusted performance and downside-risk measures over terminal
//! portfolio values.
//!
//! Conventions: Omega and Kappa are the sample versions of
//!
//! ```text
//! Ω(L)   = E(V_T − L)⁺ / E(L − V_T)⁺
//! κ_n(L) = (E V_T − L) / (E[((L − V_T)⁺)ⁿ])^{1/n}
//! ```
//!
//! with `κ₂` the Sortino ratio and the sample identity
//! `κ₁(L) = Ω(L) − 1`. Sharpe uses simple terminal returns on `V₀` in
//! excess of `e^{rT} − 1`, with the unbiased standard deviation.
//! Undefined ratios surface as `NAN`, empty loss sides as `INFINITY`;
//! both serialize as literal `nan`/`inf` tokens downstream.

use alloc::format;
use alloc::vec::Vec;


#[allow(unused_imports)] // resolves f64 math in no_std builds; std test builds shadow it
use num_traits::Float;

use crate::{Error, Result};

/// Monte Carlo sample of terminal portfolio values plus the constants
/// needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSample {
    values: Vec<f64>,
    v0: f64,
    floor: f64,
    r: f64,
    horizon: f64,
}

impl TerminalSample {
    pub fn new(values: Vec<f64>, v0: f64, floor: f64, r: f64, horizon: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "terminal sample needs at least two values".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "terminal sample contains non-finite values".into(),
            ));
        }
        if !(v0 > 0.0) {
            return Err(Error::InvalidParameter(format!("v0 = {v0} must be positive")));
        }
        Ok(Self {
            values,
            v0,
            floor,
            r,
            horizon,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample standard deviation.
    pub fn std(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self.values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (self.len() - 1) as f64).sqrt()
    }
}

/// `Ω(L)`: ratio of mean gains over `L` to mean losses under `L`.
/// `INFINITY` when there are no losses, `NAN` when both sides vanish.
pub fn omega(sample: &TerminalSample, threshold: f64) -> f64 {
    let mut gains = 0.0;
    let mut losses = 0.0;
    for &v in sample.values() {
        gains += (v - threshold).max(0.0);
        losses += (threshold - v).max(0.0);
    }
    if losses == 0.0 {
        if gains == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        gains / losses
    }
}

/// `κ_n(L)`, the n-th order lower-partial-moment ratio.
pub fn kappa(sample: &TerminalSample, order: u32, threshold: f64) -> f64 {
    debug_assert!(order >= 1);
    let m = sample.len() as f64;
    let excess = sample.mean() - threshold;
    let lpm: f64 = sample
        .values()
        .iter()
        .map(|&v| (threshold - v).max(0.0).powi(order as i32))
        .sum::<f64>()
        / m;
    if lpm == 0.0 {
        if excess > 0.0 {
            f64::INFINITY
        } else if excess == 0.0 {
            f64::NAN
        } else {
            f64::NEG_INFINITY
        }
    } else {
        excess / lpm.powf(1.0 / order as f64)
    }
}

/// Sharpe ratio of simple terminal returns over the riskless gross
/// return; `NAN` for a degenerate (zero-variance) sample.
pub fn sharpe(sample: &TerminalSample) -> f64 {
    let m = sample.len() as f64;
    let returns: Vec<f64> = sample.values().iter().map(|v| v / sample.v0() - 1.0).collect();
    let mean = returns.iter().sum::<f64>() / m;
    let ss: f64 = returns.iter().map(|x| (x - mean) * (x - mean)).sum();
    let std = (ss / (m - 1.0)).sqrt();
    if std == 0.0 {
        return f64::NAN;
    }
    let benchmark = (sample.r * sample.horizon).exp() - 1.0;
    (mean - benchmark) / std
}

/// Shortfall probability `P(V_T < F_T)` and the conditional expected
/// shortfall `E[F_T − V_T | V_T < F_T]` (`NAN` when no path falls
/// short).
pub fn shortfall_stats(sample: &TerminalSample) -> (f64, f64) {
    let floor = sample.floor();
    let mut count = 0usize;
    let mut total = 0.0;
    for &v in sample.values() {
        if v < floor {
            count += 1;
            total += floor - v;
        }
    }
    let prob = count as f64 / sample.len() as f64;
    let es = if count == 0 {
        f64::NAN
    } else {
        total / count as f64
    };
    (prob, es)
}

/// Aggregate report over one terminal sample.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub mean: f64,
    pub std: f64,
    pub sharpe: f64,
    /// `(L, Ω(L))` per configured threshold.
    pub omega: Vec<(f64, f64)>,
    /// `((n, L), κ_n(L))` per configured order and threshold.
    pub kappa: Vec<((u32, f64), f64)>,
    pub shortfall_prob: f64,
    pub expected_shortfall: f64,
}

impl MetricsReport {
    /// Compute every configured measure in one fixed-order pass.
    pub fn compute(sample: &TerminalSample, thresholds: &[f64], kappa_orders: &[u32]) -> Self {
        let omega_v = thresholds.iter().map(|&l| (l, omega(sample, l))).collect();
        let mut kappa_v = Vec::with_capacity(thresholds.len() * kappa_orders.len());
        for &n in kappa_orders {
            for &l in thresholds {
                kappa_v.push(((n, l), kappa(sample, n, l)));
            }
        }
        let (sp, es) = shortfall_stats(sample);
        Self {
            mean: sample.mean(),
            std: sample.std(),
            sharpe: sharpe(sample),
            omega: omega_v,
            kappa: kappa_v,
            shortfall_prob: sp,
            expected_shortfall: es,
        }
    }
}

/// Threshold levels `L = V₀·(1 + x)` from fractional offsets `x`.
pub fn thresholds_from_fractions(v0: f64, fractions: &[f64]) -> Vec<f64> {
    fractions.iter().map(|&x| v0 * (1.0 + x)).collect()
}
