//! Simulation core for floor-protected portfolio strategies in a
//! Markov-modulated market.
//!
//! The risky asset follows a geometric Brownian motion whose drift and
//! volatility switch with an unobservable continuous-time Markov chain.
//! On top of that market this crate provides:
//!
//! - [`regime`]: the chain itself — generator validation, transition
//!   matrices via a complex-capable matrix exponential, stationary
//!   distributions, and grid-based path sampling;
//! - [`market`]: riskless growth and exact log-Euler risky paths;
//! - [`retdist`]: the distribution of the log-return `R_t = ln(S_t/S_0)`
//!   obtained by Fourier inversion of its characteristic function, with
//!   quantile (VaR) extraction;
//! - [`strategy`]: constrained CPPI and VaR-based insurance (VBPI)
//!   evolved self-financingly along a simulated path;
//! - [`metrics`]: Omega, Kappa, Sharpe and shortfall statistics over
//!   terminal-value samples.
//!
//! The crate is `no_std` (with `alloc`). Everything touching IO, RNG or
//! threads lives in the companion `pisim` crate.

#![no_std]
// `!(x > 0.0)` validation rejects NaN, which `x <= 0.0` would accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fft;
pub mod linalg;
pub mod market;
pub mod metrics;
pub mod regime;
pub mod retdist;
pub mod strategy;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
