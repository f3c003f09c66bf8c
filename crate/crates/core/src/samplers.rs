//! Seedable uniform streams and inverse-CDF Laplace samplers.
//!
//! # Uniform source
//!
//! [`UniformStream`] is counter-based: every draw is a pure function of
//! `(master_seed, stream_id, counter)`, so any number of streams derived from
//! one master seed can run concurrently and still reproduce bit-identically
//! regardless of scheduling. The generator is fixed per release:
//!
//! ```text
//! key        = mix13(mix13(master_seed ^ SEED_SALT) ^ stream_id)
//! raw(c)     = mix13(mix13(key + c * GAMMA) ^ key)
//! uniform(c) = (raw(c) >> 11) * 2^-53          // 53-bit value in [0, 1)
//! ```
//!
//! where `mix13` is Stafford's variant 13 of the SplitMix64 finalizer and
//! `GAMMA = 0x9e3779b97f4a7c15`. The inner stage is a SplitMix64 stream at
//! phase `key`; the outer keyed stage makes distinct streams distinct
//! functions rather than offsets of a shared orbit.
//!
//! # Transforms
//!
//! Three correct inverse-CDF formulations of Lap(μ; b) are provided — they
//! agree exactly (centered vs. shifted) or to a few ulp (piecewise) — plus
//! the broken transform that feeds a standard-uniform draw into the
//! zero-centered formula. The broken transform returns a value only for
//! inputs below one half and [`BrokenDraw::Invalid`] otherwise, so it can
//! never produce a negative number; [`NanPolicy`] decides what a caller gets
//! in place of the invalid half.

use crate::Error;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const SEED_SALT: u64 = 0x6a09_e667_f3bc_c908;

/// Stafford mix13 finalizer. Bijective on u64.
#[inline]
fn mix13(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a label.
///
/// Used wherever a sub-experiment needs its own seed (audit repeats, sweep
/// cells) so that sibling experiments never share streams.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    mix13(mix13(master_seed ^ SEED_SALT) ^ label)
}

/// Location and scale of a Laplace distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceParams {
    mu: f64,
    b: f64,
}

impl LaplaceParams {
    /// Build parameters; the scale must be strictly positive and finite.
    pub fn new(mu: f64, b: f64) -> Result<Self, Error> {
        if !b.is_finite() || b <= 0.0 || !mu.is_finite() {
            return Err(Error::NonPositiveScale(b));
        }
        Ok(Self { mu, b })
    }

    /// Standard Lap(0, 1).
    pub fn standard() -> Self {
        Self { mu: 0.0, b: 1.0 }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Deterministic stream of uniform variates in `[0, 1)`.
///
/// Single-owner: a stream is advanced by `&mut` draws and must not be shared
/// across concurrent tasks. Derive one stream per task instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformStream {
    master_seed: u64,
    stream_id: u64,
    counter: u64,
    key: u64,
}

impl UniformStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
            counter: 0,
            key: mix13(mix13(master_seed ^ SEED_SALT) ^ stream_id),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of draws consumed so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    fn raw(&self, counter: u64) -> u64 {
        let z = self.key.wrapping_add(counter.wrapping_mul(GAMMA));
        mix13(mix13(z) ^ self.key)
    }

    /// Next uniform variate in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        let bits = self.raw(self.counter);
        self.counter = self.counter.wrapping_add(1);
        (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Next uniform variate in the open interval `(0, 1)`.
    ///
    /// Exact zeros (probability 2⁻⁵³ per draw) are rejected and redrawn; the
    /// bias is negligible and the quantile transforms need the open interval.
    #[inline]
    pub fn next_open(&mut self) -> f64 {
        loop {
            let u = self.next_uniform();
            if u > 0.0 {
                return u;
            }
        }
    }
}

/// Which inverse-CDF formulation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// μ − b·sgn(u−½)·ln(1 − 2|u−½|) with u ~ Uni(0, 1).
    InverseCdfCentered,
    /// Branch form b·ln(2u) + μ / μ − b·ln(2(1−u)) with u ~ Uni(0, 1).
    InverseCdfPiecewise,
    /// μ − b·sgn(v)·ln(1 − 2|v|) with v ~ Uni(−½, +½).
    InverseCdfShifted,
    /// The shifted formula driven by a standard uniform: positive or invalid.
    DptextBroken,
}

/// What to substitute for the broken sampler's invalid draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NanPolicy {
    /// Invalid draws become exactly 0.0, consuming one uniform.
    ReplaceZero,
    /// Draw again until valid; expected two uniforms per output.
    Resample,
}

/// Outcome of the broken transform.
///
/// Invalid draws are tagged explicitly here; they only become IEEE NaN at
/// module boundaries (see [`BrokenDraw::to_f64`]) so nothing inside the
/// crate depends on NaN propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BrokenDraw {
    Value(f64),
    Invalid,
}

impl BrokenDraw {
    pub fn is_invalid(&self) -> bool {
        matches!(self, BrokenDraw::Invalid)
    }

    /// Boundary representation: invalid maps to quiet NaN.
    pub fn to_f64(self) -> f64 {
        match self {
            BrokenDraw::Value(x) => x,
            BrokenDraw::Invalid => f64::NAN,
        }
    }
}

/// Shared core of the centered and shifted formulations: the quantile at
/// offset `t = u − ½` (equivalently at `v`), for `t` in (−½, +½).
#[inline]
fn quantile_at_offset(t: f64, p: &LaplaceParams) -> f64 {
    // signum(±0.0) is ±1, but the log term is 0 there, so the median is exact.
    p.mu - p.b * t.signum() * (1.0 - 2.0 * t.abs()).ln()
}

/// Laplace quantile at `u ∈ (0, 1)`: μ − b·sgn(u−½)·ln(1 − 2|u−½|).
pub fn inverse_cdf_centered(u: f64, p: &LaplaceParams) -> Result<f64, Error> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::QuantileDomain {
            value: u,
            interval: "(0, 1)",
        });
    }
    Ok(quantile_at_offset(u - 0.5, p))
}

/// Laplace quantile at `u ∈ (0, 1)` via the branch form without sgn/abs.
pub fn inverse_cdf_piecewise(u: f64, p: &LaplaceParams) -> Result<f64, Error> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::QuantileDomain {
            value: u,
            interval: "(0, 1)",
        });
    }
    Ok(if u < 0.5 {
        p.b * (2.0 * u).ln() + p.mu
    } else {
        p.mu - p.b * (2.0 * (1.0 - u)).ln()
    })
}

/// Laplace quantile at `v ∈ (−½, +½)` from the zero-centered uniform.
pub fn inverse_cdf_shifted(v: f64, p: &LaplaceParams) -> Result<f64, Error> {
    if !(v > -0.5 && v < 0.5) {
        return Err(Error::QuantileDomain {
            value: v,
            interval: "(-0.5, 0.5)",
        });
    }
    Ok(quantile_at_offset(v, p))
}

/// The broken transform: the zero-centered formula fed with `v ~ Uni(0, 1)`.
///
/// For `v < ½` this returns μ − b·ln(1 − 2v), strictly positive for μ = 0.
/// For `v ≥ ½` the log argument is non-positive and the draw is invalid;
/// `v = ½` exactly (ln 0) is treated the same way.
pub fn dptext_transform(v: f64, p: &LaplaceParams) -> BrokenDraw {
    debug_assert!(v > 0.0 && v < 1.0, "broken transform expects v in (0, 1)");
    if v >= 0.5 {
        return BrokenDraw::Invalid;
    }
    // sgn(v) = 1 on this branch.
    BrokenDraw::Value(p.mu - p.b * (1.0 - 2.0 * v).ln())
}

/// Retry cap for [`NanPolicy::Resample`]; expected retries per output is one,
/// so hitting the cap means the uniform source is broken.
pub const RESAMPLE_RETRY_CAP: u32 = 1024;

/// Draw one noise value with the chosen formulation.
///
/// `policy` must be present exactly when `kind` is [`SamplerKind::DptextBroken`].
pub fn draw_noise(
    kind: SamplerKind,
    p: &LaplaceParams,
    stream: &mut UniformStream,
    policy: Option<NanPolicy>,
) -> Result<f64, Error> {
    match (kind, policy) {
        (SamplerKind::InverseCdfCentered, None) => inverse_cdf_centered(stream.next_open(), p),
        (SamplerKind::InverseCdfPiecewise, None) => inverse_cdf_piecewise(stream.next_open(), p),
        (SamplerKind::InverseCdfShifted, None) => inverse_cdf_shifted(stream.next_open() - 0.5, p),
        (SamplerKind::DptextBroken, Some(NanPolicy::ReplaceZero)) => {
            Ok(match dptext_transform(stream.next_open(), p) {
                BrokenDraw::Value(x) => x,
                BrokenDraw::Invalid => 0.0,
            })
        }
        (SamplerKind::DptextBroken, Some(NanPolicy::Resample)) => {
            for _ in 0..RESAMPLE_RETRY_CAP {
                if let BrokenDraw::Value(x) = dptext_transform(stream.next_open(), p) {
                    return Ok(x);
                }
            }
            Err(Error::RetriesExhausted(RESAMPLE_RETRY_CAP))
        }
        _ => Err(Error::PolicyMismatch),
    }
}
