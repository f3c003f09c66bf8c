//! Real-vector release mechanisms under audit.
//!
//! Calibrated mechanisms add per-coordinate noise of scale b = Δ/ε. The
//! correct one draws that noise from Lap(0, b); the broken one runs the
//! mixed-up transform and therefore never subtracts anything from its input;
//! the wrong-sensitivity one samples correctly but calibrates with a claimed,
//! dimension-independent sensitivity instead of the true one. Copy-input and
//! random-output bracket the privacy/utility extremes.

use crate::samplers::{
    draw_noise, LaplaceParams, NanPolicy, SamplerKind, UniformStream,
};
use crate::Error;

/// Which mechanism to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismKind {
    /// x + Lap(0, Δ/ε) per coordinate; satisfies the ε budget.
    Laplace,
    /// x + broken-sampler noise (never negative) with the given NaN policy.
    DptextBroken(NanPolicy),
    /// x + Lap(0, Δ_claimed/ε): correct sampler, wrong calibration.
    WrongSensitivity { delta_claimed: f64 },
    /// Returns the input untouched: maximal utility, no privacy.
    CopyInput,
    /// Per-coordinate Uni(0, 1) regardless of input: absolute privacy.
    RandomOutput,
}

impl MechanismKind {
    pub fn validate(&self) -> Result<(), Error> {
        if let MechanismKind::WrongSensitivity { delta_claimed } = self {
            if !delta_claimed.is_finite() || *delta_claimed <= 0.0 {
                return Err(Error::NonPositiveSensitivity(*delta_claimed));
            }
        }
        Ok(())
    }

    pub fn nan_policy(&self) -> Option<NanPolicy> {
        match self {
            MechanismKind::DptextBroken(policy) => Some(*policy),
            _ => None,
        }
    }

    pub fn delta_claimed(&self) -> Option<f64> {
        match self {
            MechanismKind::WrongSensitivity { delta_claimed } => Some(*delta_claimed),
            _ => None,
        }
    }
}

/// Output of a mechanism; same length and units as the query vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedVector {
    values: Vec<f64>,
}

impl PrivatizedVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn noise_scale(epsilon: f64, delta_sensitivity: f64) -> Result<LaplaceParams, Error> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    if !delta_sensitivity.is_finite() || delta_sensitivity <= 0.0 {
        return Err(Error::NonPositiveSensitivity(delta_sensitivity));
    }
    LaplaceParams::new(0.0, delta_sensitivity / epsilon)
}

/// The Laplace mechanism: zᵢ = xᵢ + Lap(0, Δ/ε), drawn via the centered
/// inverse CDF.
pub fn laplace_mechanism(
    x: &[f64],
    epsilon: f64,
    delta_sensitivity: f64,
    stream: &mut UniformStream,
) -> Result<PrivatizedVector, Error> {
    let mut out = Vec::with_capacity(x.len());
    laplace_into(x, epsilon, delta_sensitivity, stream, &mut out)?;
    Ok(PrivatizedVector { values: out })
}

fn laplace_into(
    x: &[f64],
    epsilon: f64,
    delta_sensitivity: f64,
    stream: &mut UniformStream,
    out: &mut Vec<f64>,
) -> Result<(), Error> {
    let p = noise_scale(epsilon, delta_sensitivity)?;
    out.clear();
    for &xi in x {
        out.push(xi + draw_noise(SamplerKind::InverseCdfCentered, &p, stream, None)?);
    }
    Ok(())
}

/// The broken mechanism: zᵢ = xᵢ + broken noise, so zᵢ ≥ xᵢ always.
pub fn dptext_mechanism(
    x: &[f64],
    epsilon: f64,
    delta_sensitivity: f64,
    policy: NanPolicy,
    stream: &mut UniformStream,
) -> Result<PrivatizedVector, Error> {
    let mut out = Vec::with_capacity(x.len());
    dptext_into(x, epsilon, delta_sensitivity, policy, stream, &mut out)?;
    Ok(PrivatizedVector { values: out })
}

fn dptext_into(
    x: &[f64],
    epsilon: f64,
    delta_sensitivity: f64,
    policy: NanPolicy,
    stream: &mut UniformStream,
    out: &mut Vec<f64>,
) -> Result<(), Error> {
    let p = noise_scale(epsilon, delta_sensitivity)?;
    out.clear();
    for &xi in x {
        out.push(xi + draw_noise(SamplerKind::DptextBroken, &p, stream, Some(policy))?);
    }
    Ok(())
}

/// Correctly sampled Laplace noise calibrated with a claimed sensitivity that
/// ignores the dimension; the flaw is the calibration, not the sampler.
pub fn wrong_sensitivity_mechanism(
    x: &[f64],
    epsilon: f64,
    delta_claimed: f64,
    stream: &mut UniformStream,
) -> Result<PrivatizedVector, Error> {
    laplace_mechanism(x, epsilon, delta_claimed, stream)
}

/// Identity release.
pub fn copy_mechanism(x: &[f64]) -> PrivatizedVector {
    PrivatizedVector {
        values: x.to_vec(),
    }
}

/// Input-independent release: n i.i.d. Uni(0, 1) coordinates.
pub fn random_mechanism(n: usize, stream: &mut UniformStream) -> Result<PrivatizedVector, Error> {
    if n == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut out = Vec::with_capacity(n);
    random_into(n, stream, &mut out);
    Ok(PrivatizedVector { values: out })
}

fn random_into(n: usize, stream: &mut UniformStream, out: &mut Vec<f64>) {
    out.clear();
    for _ in 0..n {
        out.push(stream.next_uniform());
    }
}

/// Dispatch to the mechanism selected by `kind`.
///
/// `delta_sensitivity` is the true sensitivity of the audited query; the
/// wrong-sensitivity mechanism substitutes its claimed value, and the two
/// baselines ignore ε and Δ entirely.
pub fn apply(
    kind: &MechanismKind,
    x: &[f64],
    epsilon: f64,
    delta_sensitivity: f64,
    stream: &mut UniformStream,
) -> Result<PrivatizedVector, Error> {
    let mut out = Vec::with_capacity(x.len());
    apply_into(kind, x, epsilon, delta_sensitivity, stream, &mut out)?;
    Ok(PrivatizedVector { values: out })
}

/// Allocation-free variant of [`apply`] for hot trial loops.
pub fn apply_into(
    kind: &MechanismKind,
    x: &[f64],
    epsilon: f64,
    delta_sensitivity: f64,
    stream: &mut UniformStream,
    out: &mut Vec<f64>,
) -> Result<(), Error> {
    kind.validate()?;
    match kind {
        MechanismKind::Laplace => laplace_into(x, epsilon, delta_sensitivity, stream, out),
        MechanismKind::DptextBroken(policy) => {
            dptext_into(x, epsilon, delta_sensitivity, *policy, stream, out)
        }
        MechanismKind::WrongSensitivity { delta_claimed } => {
            laplace_into(x, epsilon, *delta_claimed, stream, out)
        }
        MechanismKind::CopyInput => {
            out.clear();
            out.extend_from_slice(x);
            Ok(())
        }
        MechanismKind::RandomOutput => {
            if x.is_empty() {
                return Err(Error::ZeroDimension);
            }
            random_into(x.len(), stream, out);
            Ok(())
        }
    }
}
