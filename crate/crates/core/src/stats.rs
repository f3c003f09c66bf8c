//! Analytic Laplace CDF, Kolmogorov–Smirnov goodness of fit, histograms.

use crate::samplers::LaplaceParams;
use crate::Error;

/// Laplace CDF: ½·exp((x−μ)/b) below the location, 1 − ½·exp(−(x−μ)/b) above.
pub fn laplace_cdf(x: f64, p: &LaplaceParams) -> f64 {
    let t = (x - p.mu()) / p.b();
    if t < 0.0 {
        0.5 * t.exp()
    } else {
        1.0 - 0.5 * (-t).exp()
    }
}

/// One-sample KS statistic against Lap(μ; b).
///
/// D = max over the sorted sample of max(i/N − F(x₍ᵢ₎), F(x₍ᵢ₎) − (i−1)/N).
/// Samples must be finite; callers count invalid draws separately.
pub fn ks_statistic(samples: &[f64], p: &LaplaceParams) -> Result<f64, Error> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(&bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample(bad));
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = laplace_cdf(x, p);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    Ok(d)
}

/// Two-sample KS statistic: sup distance between the two empirical CDFs.
pub fn ks_statistic_two_sample(a: &[f64], b: &[f64]) -> Result<f64, Error> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySamples);
    }
    for &x in a.iter().chain(b) {
        if !x.is_finite() {
            return Err(Error::NonFiniteSample(x));
        }
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Result of a one-sample KS test.
#[derive(Debug, Clone, PartialEq)]
pub struct KsReport {
    pub n_samples: usize,
    pub d_statistic: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub passed: bool,
}

/// Asymptotic critical coefficient c(α) with c(α)/√N the rejection threshold.
fn ks_coefficient(alpha: f64) -> Result<f64, Error> {
    const TABLE: [(f64, f64); 3] = [(0.10, 1.224), (0.05, 1.358), (0.01, 1.628)];
    TABLE
        .iter()
        .find(|(a, _)| (alpha - a).abs() < 1e-12)
        .map(|&(_, c)| c)
        .ok_or(Error::UnsupportedAlpha(alpha))
}

/// One-sample KS test against Lap(μ; b) at significance `alpha`.
///
/// Uses the asymptotic critical value c(α)/√N, accurate for the N ≥ 100
/// sample sizes this tool works with.
pub fn ks_test(samples: &[f64], p: &LaplaceParams, alpha: f64) -> Result<KsReport, Error> {
    let c = ks_coefficient(alpha)?;
    if samples.len() < 100 {
        return Err(Error::TooFewSamples {
            min: 100,
            got: samples.len(),
        });
    }
    let d = ks_statistic(samples, p)?;
    let critical = c / (samples.len() as f64).sqrt();
    Ok(KsReport {
        n_samples: samples.len(),
        d_statistic: d,
        critical_value: critical,
        alpha,
        passed: d < critical,
    })
}

/// Equal-width histogram with explicit out-of-range and invalid accounting.
///
/// `sum(counts) + underflow + overflow + invalid_count` equals the number of
/// samples fed in; invalid samples arrive as NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    pub invalid_count: u64,
}

impl Histogram {
    pub fn new(k: usize, lo: f64, hi: f64) -> Result<Self, Error> {
        if k == 0 {
            return Err(Error::ZeroBins);
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::BadRange { lo, hi });
        }
        let edges = (0..=k)
            .map(|i| lo + (hi - lo) * i as f64 / k as f64)
            .collect();
        Ok(Self {
            bin_edges: edges,
            counts: vec![0; k],
            underflow: 0,
            overflow: 0,
            invalid_count: 0,
        })
    }

    /// Add one sample; NaN counts as invalid.
    pub fn add(&mut self, x: f64) {
        if x.is_nan() {
            self.invalid_count += 1;
            return;
        }
        let k = self.counts.len();
        let lo = self.bin_edges[0];
        let hi = self.bin_edges[k];
        if x < lo {
            self.underflow += 1;
        } else if x >= hi {
            self.overflow += 1;
        } else {
            let idx = (((x - lo) / (hi - lo)) * k as f64) as usize;
            self.counts[idx.min(k - 1)] += 1;
        }
    }

    pub fn total_samples(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow + self.invalid_count
    }
}

/// Bin a sample set over `[lo, hi)` with `k` equal-width bins.
pub fn histogram(samples: &[f64], k: usize, lo: f64, hi: f64) -> Result<Histogram, Error> {
    let mut h = Histogram::new(k, lo, hi)?;
    for &x in samples {
        h.add(x);
    }
    Ok(h)
}
