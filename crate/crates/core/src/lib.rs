//! Empirical sanity checking for real-vector differential-privacy mechanisms.
//!
//! The crate bundles four pieces:
//!
//! - [`samplers`]: deterministic, seedable uniform streams and the inverse-CDF
//!   transforms that turn them into Laplace noise — including a deliberately
//!   broken transform that mixes up the two uniform parametrizations and can
//!   only produce positive or invalid draws.
//! - [`mechanisms`]: release mechanisms built on those samplers: the correct
//!   Laplace mechanism, the broken-sampler variant, a wrong-sensitivity
//!   variant, and the two extreme baselines (copy input, random output).
//! - [`audit`]: the sanity check itself. It runs a mechanism many times over
//!   the worst-case neighboring pair 0ⁿ / 1ⁿ, mounts a rounding +
//!   majority-vote reconstruction attack, estimates the empirical privacy
//!   loss by MLE, and flags mechanisms whose loss exceeds the budget.
//! - [`stats`]: the analytic Laplace CDF, one-sample and two-sample
//!   Kolmogorov–Smirnov statistics, and histogram building for sampler
//!   comparisons.
//!
//! [`cli`] wires everything into the `dp-audit` command-line tool.

pub mod audit;
pub mod cli;
pub mod mechanisms;
pub mod samplers;
pub mod stats;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("sensitivity must be positive, got {0}")]
    NonPositiveSensitivity(f64),
    #[error("quantile argument must lie in {interval}, got {value}")]
    QuantileDomain {
        value: f64,
        interval: &'static str,
    },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("repeat count must be at least 1")]
    ZeroRepeats,
    #[error("a NaN policy is required for the broken sampler and invalid elsewhere")]
    PolicyMismatch,
    #[error("broken-sampler resampling exceeded {0} retries; uniform source is misconfigured")]
    RetriesExhausted(u32),
    #[error("sample set is empty")]
    EmptySamples,
    #[error("samples must be finite, found {0}")]
    NonFiniteSample(f64),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("unsupported significance level {0}; use 0.10, 0.05 or 0.01")]
    UnsupportedAlpha(f64),
    #[error("histogram needs at least one bin")]
    ZeroBins,
    #[error("histogram range must satisfy lo < hi, got [{lo}, {hi})")]
    BadRange { lo: f64, hi: f64 },
    #[error("margin must be non-negative, got {0}")]
    NegativeMargin(f64),
    #[error("unknown mechanism name {0:?}")]
    UnknownMechanism(String),
    #[error("unknown sampler kind {0:?}")]
    UnknownSampler(String),
    #[error("unknown NaN policy {0:?}")]
    UnknownPolicy(String),
    #[error("unknown tie-break rule {0:?}")]
    UnknownTieBreak(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
