//! Sweep orchestration and serialization behind the `dp-audit` binary.
//!
//! A sweep runs [`run_audit`](crate::audit::run_audit) over the grid
//! mechanisms × dims × epsilons, one record per cell, in row-major order.
//! Each cell gets its own seed derived from the sweep master seed and the
//! cell index, so adding a cell never perturbs the others. Records serialize
//! to CSV with the fixed header below or to a JSON array mirroring the same
//! fields plus the per-repeat losses; non-finite losses appear as `inf`,
//! `-inf` and `nan` in both formats.

use std::io::{self, Write};

use crate::audit::{run_audit, AuditConfig, AuditResult, TieBreak};
use crate::mechanisms::MechanismKind;
use crate::samplers::{
    derive_seed, dptext_transform, draw_noise, LaplaceParams, NanPolicy, SamplerKind,
    UniformStream,
};
use crate::stats::{ks_test, Histogram, KsReport};
use crate::Error;

/// Fixed CSV schema of audit sweeps.
pub const CSV_HEADER: &str = "mechanism,nan_policy,delta_claimed,n,epsilon,trials,repeats,seed,\
p_x,p_xprime,eps_forward,eps_backward,eps_emp_mean,eps_emp_std,violated";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Full description of one audit sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub mechanisms: Vec<MechanismKind>,
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub trials: u64,
    pub repeats: u32,
    pub master_seed: u64,
    pub tie_break: TieBreak,
    /// Violation margin override; `None` selects the audit default.
    pub margin: Option<f64>,
}

impl SweepSpec {
    pub fn grid_size(&self) -> usize {
        self.mechanisms.len() * self.dims.len() * self.epsilons.len()
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.mechanisms.is_empty() || self.dims.is_empty() || self.epsilons.is_empty() {
            return Err(Error::EmptySamples);
        }
        for cell in self.cells() {
            cell.validate()?;
        }
        Ok(())
    }

    /// Audit configs in record order (mechanism-major, then n, then ε).
    fn cells(&self) -> impl Iterator<Item = AuditConfig> + '_ {
        self.mechanisms.iter().flat_map(move |mech| {
            self.dims.iter().flat_map(move |&n| {
                self.epsilons.iter().map(move |&epsilon| AuditConfig {
                    n,
                    epsilon,
                    trials: self.trials,
                    repeats: self.repeats,
                    master_seed: 0, // patched per cell in run_sweep
                    mechanism: *mech,
                    tie_break: self.tie_break,
                    margin: self.margin,
                })
            })
        })
    }
}

/// One audited grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub mechanism: MechanismKind,
    pub n: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub repeats: u32,
    /// The sweep master seed (cell seeds derive from it by cell index).
    pub seed: u64,
    pub result: AuditResult,
}

/// Run every cell of the sweep, in order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CellRecord>, Error> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.grid_size());
    for (index, mut config) in spec.cells().enumerate() {
        config.master_seed = derive_seed(spec.master_seed, index as u64);
        let result = run_audit(&config)?;
        records.push(CellRecord {
            mechanism: config.mechanism,
            n: config.n,
            epsilon: config.epsilon,
            trials: config.trials,
            repeats: config.repeats,
            seed: spec.master_seed,
            result,
        });
    }
    Ok(records)
}

/// Mechanism names on the flag surface.
pub fn mechanism_flag_name(kind: &MechanismKind) -> &'static str {
    match kind {
        MechanismKind::Laplace => "laplace",
        MechanismKind::DptextBroken(NanPolicy::ReplaceZero) => "dptext-replace-zero",
        MechanismKind::DptextBroken(NanPolicy::Resample) => "dptext-resample",
        MechanismKind::WrongSensitivity { .. } => "wrong-sensitivity",
        MechanismKind::CopyInput => "copy-input",
        MechanismKind::RandomOutput => "random-output",
    }
}

/// Parse a flag-surface mechanism name; `delta_claimed` only feeds
/// `wrong-sensitivity`.
pub fn parse_mechanism(name: &str, delta_claimed: f64) -> Result<MechanismKind, Error> {
    let kind = match name {
        "laplace" => MechanismKind::Laplace,
        "dptext-replace-zero" => MechanismKind::DptextBroken(NanPolicy::ReplaceZero),
        "dptext-resample" => MechanismKind::DptextBroken(NanPolicy::Resample),
        "wrong-sensitivity" => MechanismKind::WrongSensitivity { delta_claimed },
        "copy-input" => MechanismKind::CopyInput,
        "random-output" => MechanismKind::RandomOutput,
        other => return Err(Error::UnknownMechanism(other.to_string())),
    };
    kind.validate()?;
    Ok(kind)
}

pub fn sampler_flag_name(kind: SamplerKind) -> &'static str {
    match kind {
        SamplerKind::InverseCdfCentered => "inverse-cdf-centered",
        SamplerKind::InverseCdfPiecewise => "inverse-cdf-piecewise",
        SamplerKind::InverseCdfShifted => "inverse-cdf-shifted",
        SamplerKind::DptextBroken => "dptext-broken",
    }
}

pub fn parse_sampler(name: &str) -> Result<SamplerKind, Error> {
    match name {
        "inverse-cdf-centered" => Ok(SamplerKind::InverseCdfCentered),
        "inverse-cdf-piecewise" => Ok(SamplerKind::InverseCdfPiecewise),
        "inverse-cdf-shifted" => Ok(SamplerKind::InverseCdfShifted),
        "dptext-broken" => Ok(SamplerKind::DptextBroken),
        other => Err(Error::UnknownSampler(other.to_string())),
    }
}

pub fn policy_flag_name(policy: NanPolicy) -> &'static str {
    match policy {
        NanPolicy::ReplaceZero => "replace-zero",
        NanPolicy::Resample => "resample",
    }
}

pub fn parse_policy(name: &str) -> Result<NanPolicy, Error> {
    match name {
        "replace-zero" => Ok(NanPolicy::ReplaceZero),
        "resample" => Ok(NanPolicy::Resample),
        other => Err(Error::UnknownPolicy(other.to_string())),
    }
}

pub fn parse_tie_break(name: &str) -> Result<TieBreak, Error> {
    match name {
        "ones" => Ok(TieBreak::Ones),
        "zeros" => Ok(TieBreak::Zeros),
        "coin" => Ok(TieBreak::Coin),
        other => Err(Error::UnknownTieBreak(other.to_string())),
    }
}

/// Extended-real token used in both output formats.
fn fmt_loss(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x}")
    }
}

fn loss_json(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::json!(x)
    } else {
        serde_json::Value::String(fmt_loss(x))
    }
}

/// Write records as CSV with the fixed schema.
pub fn write_csv<W: Write>(records: &[CellRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let policy = r
            .mechanism
            .nan_policy()
            .map(policy_flag_name)
            .unwrap_or("");
        let delta_claimed = r
            .mechanism
            .delta_claimed()
            .map(|d| format!("{d}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            mechanism_flag_name(&r.mechanism),
            policy,
            delta_claimed,
            r.n,
            r.epsilon,
            r.trials,
            r.repeats,
            r.seed,
            r.result.p_x,
            r.result.p_xprime,
            fmt_loss(r.result.eps_forward),
            fmt_loss(r.result.eps_backward),
            fmt_loss(r.result.eps_emp_mean),
            fmt_loss(r.result.eps_emp_std),
            r.result.violated,
        )?;
    }
    Ok(())
}

/// Write records as a JSON array mirroring the CSV fields plus
/// `per_repeat_eps`.
pub fn write_json<W: Write>(records: &[CellRecord], out: &mut W) -> io::Result<()> {
    let cells: Vec<serde_json::Value> = records
        .iter()
        .map(|r| {
            serde_json::json!({
                "mechanism": mechanism_flag_name(&r.mechanism),
                "nan_policy": r.mechanism.nan_policy().map(policy_flag_name),
                "delta_claimed": r.mechanism.delta_claimed(),
                "n": r.n,
                "epsilon": r.epsilon,
                "trials": r.trials,
                "repeats": r.repeats,
                "seed": r.seed,
                "p_x": r.result.p_x,
                "p_xprime": r.result.p_xprime,
                "eps_forward": loss_json(r.result.eps_forward),
                "eps_backward": loss_json(r.result.eps_backward),
                "eps_emp_mean": loss_json(r.result.eps_emp_mean),
                "eps_emp_std": loss_json(r.result.eps_emp_std),
                "violated": r.result.violated,
                "per_repeat_eps": r.result.per_repeat_eps.iter().map(|&e| loss_json(e)).collect::<Vec<_>>(),
            })
        })
        .collect();
    serde_json::to_writer_pretty(&mut *out, &cells)?;
    writeln!(out)
}

/// What the `sample` subcommand draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    pub kind: SamplerKind,
    /// Policy for the broken sampler; `None` leaves its invalid draws raw.
    pub policy: Option<NanPolicy>,
    pub params: LaplaceParams,
    pub count: u64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.count == 0 {
            return Err(Error::ZeroTrials);
        }
        if self.kind != SamplerKind::DptextBroken && self.policy.is_some() {
            return Err(Error::PolicyMismatch);
        }
        Ok(())
    }

    /// Default histogram range: eight scales around the location for correct
    /// samplers, the positive-leaning [μ − b, μ + 12b) for the broken one.
    pub fn default_range(&self) -> (f64, f64) {
        let (mu, b) = (self.params.mu(), self.params.b());
        match self.kind {
            SamplerKind::DptextBroken => (mu - b, mu + 12.0 * b),
            _ => (mu - 8.0 * b, mu + 8.0 * b),
        }
    }
}

/// Draw one sample; invalid raw draws of the broken sampler come out as NaN.
fn draw_sample(spec: &SampleSpec, stream: &mut UniformStream) -> Result<f64, Error> {
    match (spec.kind, spec.policy) {
        (SamplerKind::DptextBroken, None) => {
            Ok(dptext_transform(stream.next_open(), &spec.params).to_f64())
        }
        (SamplerKind::DptextBroken, Some(policy)) => {
            draw_noise(spec.kind, &spec.params, stream, Some(policy))
        }
        (kind, None) => draw_noise(kind, &spec.params, stream, None),
        _ => Err(Error::PolicyMismatch),
    }
}

const SAMPLE_STREAM_ID: u64 = 2 << 62;

fn write_sample_metadata<W: Write>(
    spec: &SampleSpec,
    invalid_count: u64,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "# kind={}", sampler_flag_name(spec.kind))?;
    if let Some(policy) = spec.policy {
        writeln!(out, "# policy={}", policy_flag_name(policy))?;
    }
    writeln!(out, "# mu={}", spec.params.mu())?;
    writeln!(out, "# b={}", spec.params.b())?;
    writeln!(out, "# count={}", spec.count)?;
    writeln!(out, "# invalid_count={invalid_count}")?;
    writeln!(out, "# seed={}", spec.seed)
}

/// Stream raw samples to `out`, one per line, invalids as `nan`.
///
/// Two passes over the same stream: the first only counts invalid draws so
/// the metadata header can precede the data without buffering the sample set.
pub fn run_sample_raw<W: Write>(spec: &SampleSpec, out: &mut W) -> Result<(), Error> {
    spec.validate()?;
    let mut stream = UniformStream::new(spec.seed, SAMPLE_STREAM_ID);
    let mut invalid_count = 0u64;
    for _ in 0..spec.count {
        if draw_sample(spec, &mut stream)?.is_nan() {
            invalid_count += 1;
        }
    }
    write_sample_metadata(spec, invalid_count, out)?;
    let mut stream = UniformStream::new(spec.seed, SAMPLE_STREAM_ID);
    for _ in 0..spec.count {
        let x = draw_sample(spec, &mut stream)?;
        if x.is_nan() {
            writeln!(out, "nan")?;
        } else {
            writeln!(out, "{x}")?;
        }
    }
    Ok(())
}

/// Bin `count` draws and emit the histogram TSV.
pub fn run_sample_histogram(
    spec: &SampleSpec,
    bins: usize,
    lo: f64,
    hi: f64,
) -> Result<Histogram, Error> {
    spec.validate()?;
    let mut hist = Histogram::new(bins, lo, hi)?;
    let mut stream = UniformStream::new(spec.seed, SAMPLE_STREAM_ID);
    for _ in 0..spec.count {
        hist.add(draw_sample(spec, &mut stream)?);
    }
    Ok(hist)
}

/// Histogram TSV: `#` metadata lines, then `bin_left<TAB>bin_right<TAB>count`.
pub fn write_histogram_tsv<W: Write>(
    spec: &SampleSpec,
    hist: &Histogram,
    out: &mut W,
) -> io::Result<()> {
    write_sample_metadata(spec, hist.invalid_count, out)?;
    writeln!(out, "# underflow={}", hist.underflow)?;
    writeln!(out, "# overflow={}", hist.overflow)?;
    for (i, count) in hist.counts.iter().enumerate() {
        writeln!(
            out,
            "{}\t{}\t{}",
            hist.bin_edges[i],
            hist.bin_edges[i + 1],
            count
        )?;
    }
    Ok(())
}

/// Draw samples and run the one-sample KS test against Lap(μ; b).
///
/// The broken sampler defaults to the resample policy here so the sample set
/// is finite; replace-zero may be requested explicitly.
pub fn run_kstest(
    kind: SamplerKind,
    policy: Option<NanPolicy>,
    params: LaplaceParams,
    count: u64,
    alpha: f64,
    seed: u64,
) -> Result<KsReport, Error> {
    let policy = match (kind, policy) {
        (SamplerKind::DptextBroken, None) => Some(NanPolicy::Resample),
        (SamplerKind::DptextBroken, p) => p,
        (_, Some(_)) => return Err(Error::PolicyMismatch),
        (_, None) => None,
    };
    let mut stream = UniformStream::new(seed, SAMPLE_STREAM_ID);
    let samples: Result<Vec<f64>, Error> = (0..count)
        .map(|_| draw_noise(kind, &params, &mut stream, policy))
        .collect();
    ks_test(&samples?, &params, alpha)
}
