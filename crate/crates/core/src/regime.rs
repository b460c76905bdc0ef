//! Continuous-time Markov chain driving the market regime.
//!
//! A regime model is a generator matrix `Q` (off-diagonal rates ≥ 0,
//! rows summing to zero) together with per-regime drift/volatility pairs
//! and an initial occupation distribution. Transition probabilities over
//! a step follow from `P(dt) = exp(Q·dt)`; the stationary distribution
//! solves `πQ = 0`, `Σπ = 1`; and discrete regime paths are drawn by the
//! cumulative-row inversion of `P(dt)`, one uniform per grid step.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::linalg::{solve, CMatrix};
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-12;

/// Markov-modulated market model: generator plus per-regime GBM
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeModel {
    num_states: usize,
    /// Row-major H×H generator (1/year).
    generator: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    initial_dist: Vec<f64>,
}

impl RegimeModel {
    /// Validate and build a model. `initial_dist = None` defaults to the
    /// stationary distribution of `Q` (which then must be irreducible).
    pub fn new(
        generator: Vec<f64>,
        mu: Vec<f64>,
        sigma: Vec<f64>,
        initial_dist: Option<Vec<f64>>,
    ) -> Result<Self> {
        let h = mu.len();
        if h == 0 {
            return Err(Error::InvalidModel("at least one regime required".into()));
        }
        if sigma.len() != h {
            return Err(Error::InvalidModel(format!(
                "mu has {h} entries but sigma has {}",
                sigma.len()
            )));
        }
        if generator.len() != h * h {
            return Err(Error::InvalidModel(format!(
                "generator must be {h}x{h}, got {} entries",
                generator.len()
            )));
        }
        if generator.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidModel("non-finite generator entry".into()));
        }
        for i in 0..h {
            let row = &generator[i * h..(i + 1) * h];
            for (j, &q) in row.iter().enumerate() {
                if i != j && q < 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "generator[{i}][{j}] = {q} is negative off-diagonal"
                    )));
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "generator row {i} sums to {sum}, expected 0"
                )));
            }
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidModel("non-finite drift".into()));
        }
        for (i, &s) in sigma.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidModel(format!("sigma[{i}] = {s} must be > 0")));
            }
        }

        let mut model = Self {
            num_states: h,
            generator,
            mu,
            sigma,
            initial_dist: Vec::new(),
        };
        let dist = match initial_dist {
            Some(d) => {
                if d.len() != h {
                    return Err(Error::InvalidModel(format!(
                        "initial_dist must have {h} entries, got {}",
                        d.len()
                    )));
                }
                if d.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(Error::InvalidModel(
                        "initial_dist entries must be nonnegative".to_string(),
                    ));
                }
                let sum: f64 = d.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidModel(format!(
                        "initial_dist sums to {sum}, expected 1"
                    )));
                }
                d
            }
            None => stationary_distribution(&model)?,
        };
        model.initial_dist = dist;
        Ok(model)
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn generator_entry(&self, i: usize, j: usize) -> f64 {
        self.generator[i * self.num_states + j]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    /// `Σ_i p_i(0)·(μ_i − σ_i²/2)`: the initial-distribution-weighted
    /// log-drift, used to center the inversion grid.
    pub fn mean_log_drift(&self) -> f64 {
        self.initial_dist
            .iter()
            .zip(self.mu.iter().zip(self.sigma.iter()))
            .map(|(&p, (&m, &s))| p * (m - s * s / 2.0))
            .sum()
    }
}

/// Row-stochastic one-step transition matrix `exp(Q·dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    probs: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.n..(i + 1) * self.n]
    }

    /// Per-row cumulative sums, precomputed for path sampling.
    pub fn cumulative(&self) -> CumulativeTransition {
        let n = self.n;
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.get(i, j);
                rows.push(acc);
            }
        }
        CumulativeTransition { n, rows }
    }
}

/// Cumulative transition rows for the inverse-cdf regime step.
#[derive(Debug, Clone)]
pub struct CumulativeTransition {
    n: usize,
    rows: Vec<f64>,
}

impl CumulativeTransition {
    /// Smallest state `j` whose cumulative row entry strictly exceeds
    /// `u`; clamps to the last state when rounding leaves the row sum
    /// marginally below `u`.
    #[inline]
    pub fn step(&self, from: usize, u: f64) -> usize {
        let row = &self.rows[from * self.n..(from + 1) * self.n];
        for (j, &c) in row.iter().enumerate() {
            if c > u {
                return j;
            }
        }
        self.n - 1
    }
}

/// Transition matrix over a step of `dt` years: `exp(Q·dt)`, rows
/// renormalized only by clamping negatives below 1e-12 in magnitude.
pub fn transition_matrix(model: &RegimeModel, dt: f64) -> Result<TransitionMatrix> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
    }
    let h = model.num_states();
    let q = CMatrix::from_real(h, &model.generator);
    let e = q.scale(num_complex::Complex64::new(dt, 0.0)).expm()?;

    let mut probs = Vec::with_capacity(h * h);
    for i in 0..h {
        for j in 0..h {
            let v = e.get(i, j);
            let mut p = v.re;
            if p < 0.0 {
                if p > -1e-12 {
                    p = 0.0;
                } else {
                    return Err(Error::NumericFailure(format!(
                        "transition probability ({i},{j}) = {p} is negative"
                    )));
                }
            }
            probs.push(p);
        }
    }
    for i in 0..h {
        let sum: f64 = probs[i * h..(i + 1) * h].iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::NumericFailure(format!(
                "transition row {i} sums to {sum}"
            )));
        }
    }
    Ok(TransitionMatrix { n: h, probs })
}

/// Stationary distribution `π` with `πQ = 0`, `Σπ = 1`, `π ≥ 0`.
///
/// Requires an irreducible generator (one communicating class over the
/// positive off-diagonal rates).
pub fn stationary_distribution(model: &RegimeModel) -> Result<Vec<f64>> {
    let h = model.num_states();
    if !is_irreducible(model) {
        return Err(Error::NoUniqueStationary);
    }

    // Solve Q'π = 0 with the last equation replaced by Σπ = 1.
    let mut a = CMatrix::zeros(h);
    for i in 0..h {
        for j in 0..h {
            a.set(i, j, num_complex::Complex64::new(model.generator_entry(j, i), 0.0));
        }
    }
    for j in 0..h {
        a.set(h - 1, j, num_complex::Complex64::ONE);
    }
    let mut b = CMatrix::zeros(h);
    b.set(h - 1, 0, num_complex::Complex64::ONE);

    let x = solve(&a, &b).map_err(|_| Error::NoUniqueStationary)?;
    let mut pi = Vec::with_capacity(h);
    for i in 0..h {
        let v = x.get(i, 0).re;
        if v < -1e-12 {
            return Err(Error::NoUniqueStationary);
        }
        pi.push(v.max(0.0));
    }
    let total: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= total;
    }

    // Residual check ‖πQ‖∞.
    let mut residual = 0.0f64;
    for j in 0..h {
        let r: f64 = (0..h).map(|i| pi[i] * model.generator_entry(i, j)).sum();
        residual = residual.max(r.abs());
    }
    if residual > 1e-10 {
        return Err(Error::NoUniqueStationary);
    }
    Ok(pi)
}

/// Strong connectivity of the directed graph with edges `q_ij > 0`.
fn is_irreducible(model: &RegimeModel) -> bool {
    let h = model.num_states();
    if h == 1 {
        return true;
    }
    // Boolean transitive closure; H is small.
    let mut reach = alloc::vec![false; h * h];
    for i in 0..h {
        reach[i * h + i] = true;
        for j in 0..h {
            if i != j && model.generator_entry(i, j) > 0.0 {
                reach[i * h + j] = true;
            }
        }
    }
    for k in 0..h {
        for i in 0..h {
            if reach[i * h + k] {
                for j in 0..h {
                    if reach[k * h + j] {
                        reach[i * h + j] = true;
                    }
                }
            }
        }
    }
    reach.iter().all(|&r| r)
}

/// Regime indices on the simulation grid, one per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePath {
    pub states: Vec<usize>,
    pub dt: f64,
}

/// Inverse-cdf draw from a probability vector: smallest index whose
/// cumulative sum strictly exceeds `u`.
pub fn sample_state(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        acc += p;
        if acc > u {
            return j;
        }
    }
    probs.len() - 1
}

/// Draw a regime path on the grid `t_k = k·dt`, `k = 0..=n_steps`, using
/// one uniform per step and the cumulative-row rule.
pub fn sample_regime_path(
    model: &RegimeModel,
    n_steps: usize,
    dt: f64,
    uniforms: &[f64],
    initial_state: usize,
) -> Result<RegimePath> {
    if uniforms.len() != n_steps {
        return Err(Error::InvalidParameter(format!(
            "need {n_steps} uniforms, got {}",
            uniforms.len()
        )));
    }
    if uniforms.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
        return Err(Error::InvalidParameter(
            "uniforms must lie strictly in (0, 1)".into(),
        ));
    }
    if initial_state >= model.num_states() {
        return Err(Error::InvalidParameter(format!(
            "initial state {initial_state} out of range"
        )));
    }
    let cum = transition_matrix(model, dt)?.cumulative();
    Ok(sample_regime_path_with(&cum, dt, uniforms, initial_state))
}

/// Same as [`sample_regime_path`] but with a precomputed cumulative
/// transition matrix; the hot path for Monte Carlo drivers.
pub fn sample_regime_path_with(
    cum: &CumulativeTransition,
    dt: f64,
    uniforms: &[f64],
    initial_state: usize,
) -> RegimePath {
    let mut states = Vec::with_capacity(uniforms.len() + 1);
    states.push(initial_state);
    let mut current = initial_state;
    for &u in uniforms {
        current = cum.step(current, u);
        states.push(current);
    }
    RegimePath { states, dt }
}
