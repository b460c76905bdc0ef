//! Error type shared by all core modules.

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Model construction or validation failed (shape, finiteness, sign
    /// or normalization constraints).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The generator is reducible or degenerate: no unique stationary
    /// distribution exists.
    #[error("generator has no unique stationary distribution")]
    NoUniqueStationary,

    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical routine produced non-finite or inconsistent output.
    #[error("numeric failure: {0}")]
    NumericFailure(String),

    /// The Fourier grid captured too little probability mass; raise
    /// `width_sigmas` or `n_fft`.
    #[error("pre-normalization density mass {mass} outside [0.999, 1.001]; grid too narrow")]
    GridTooNarrow { mass: f64 },

    /// The requested quantile level falls outside the resolved range of
    /// the discretized cdf.
    #[error("quantile level {alpha} outside the resolved cdf range")]
    InsufficientResolution { alpha: f64 },

    /// The guarantee cannot be met even with a fully riskless portfolio.
    #[error("infeasible floor: floor value {floor} exceeds attainable riskless value {riskless}")]
    InfeasibleFloor { floor: f64, riskless: f64 },

    /// Multiple-matching is impossible because there is no cushion at
    /// inception (floor fraction too large).
    #[error("no initial cushion: the discounted floor leaves no cushion at inception")]
    NoInitialCushion,

    /// A rebalance date has no prepared return distribution.
    #[error("missing return distribution for rebalance date t={0}")]
    MissingDistribution(f64),
}
