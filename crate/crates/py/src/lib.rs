//! Python bindings for the dp-audit library.
//!
//! Build `libdpaudit.so` with cargo, expose it as `dpaudit.so` on the Python
//! path, and the module offers the samplers, mechanisms, KS test and the
//! full audit. Invalid draws of the broken sampler surface as `float("nan")`
//! on the Python side; infinite and undetermined privacy losses come back as
//! `inf` and `nan` floats.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dp_audit::audit::{self, AuditConfig};
use dp_audit::cli::{parse_mechanism, parse_policy, parse_sampler, parse_tie_break};
use dp_audit::mechanisms;
use dp_audit::samplers::{
    dptext_transform, draw_noise, LaplaceParams, SamplerKind, UniformStream,
};
use dp_audit::stats;

fn to_py_err(e: dp_audit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn params(mu: f64, b: f64) -> PyResult<LaplaceParams> {
    LaplaceParams::new(mu, b).map_err(to_py_err)
}

/// Result of a one-sample Kolmogorov-Smirnov test.
#[pyclass(get_all, frozen)]
struct KsReport {
    n_samples: usize,
    d_statistic: f64,
    critical_value: f64,
    alpha: f64,
    passed: bool,
}

#[pymethods]
impl KsReport {
    fn __repr__(&self) -> String {
        format!(
            "KsReport(n_samples={}, d_statistic={}, critical_value={}, alpha={}, passed={})",
            self.n_samples, self.d_statistic, self.critical_value, self.alpha, self.passed
        )
    }
}

/// Equal-width histogram with out-of-range and invalid accounting.
#[pyclass(get_all, frozen)]
struct Histogram {
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
    invalid_count: u64,
}

/// Outcome of one audit: pooled precisions, directional losses, spread and
/// verdict.
#[pyclass(get_all, frozen)]
struct AuditResult {
    p_x: f64,
    p_xprime: f64,
    eps_forward: f64,
    eps_backward: f64,
    eps_emp: f64,
    eps_emp_mean: f64,
    eps_emp_std: f64,
    per_repeat_eps: Vec<f64>,
    violated: bool,
}

#[pymethods]
impl AuditResult {
    fn __repr__(&self) -> String {
        format!(
            "AuditResult(eps_emp_mean={}, eps_emp_std={}, violated={})",
            self.eps_emp_mean, self.eps_emp_std, self.violated
        )
    }
}

/// Draw noise samples from one of the inverse-CDF samplers.
///
/// `kind` is one of "inverse-cdf-centered", "inverse-cdf-piecewise",
/// "inverse-cdf-shifted", "dptext-broken". For the broken sampler, `policy`
/// may be "replace-zero" or "resample"; omitted, raw draws are returned with
/// invalid ones as NaN.
#[pyfunction]
#[pyo3(signature = (kind, count, mu=0.0, b=1.0, seed=0, stream_id=0, policy=None))]
#[allow(clippy::too_many_arguments)]
fn sample_noise(
    py: Python<'_>,
    kind: &str,
    count: u64,
    mu: f64,
    b: f64,
    seed: u64,
    stream_id: u64,
    policy: Option<&str>,
) -> PyResult<Vec<f64>> {
    let kind = parse_sampler(kind).map_err(to_py_err)?;
    let policy = policy.map(parse_policy).transpose().map_err(to_py_err)?;
    let p = params(mu, b)?;
    py.detach(|| {
        let mut stream = UniformStream::new(seed, stream_id);
        (0..count)
            .map(|_| match (kind, policy) {
                (SamplerKind::DptextBroken, None) => {
                    Ok(dptext_transform(stream.next_open(), &p).to_f64())
                }
                _ => draw_noise(kind, &p, &mut stream, policy),
            })
            .collect::<Result<Vec<f64>, _>>()
            .map_err(to_py_err)
    })
}

/// Laplace CDF at `x` for Lap(mu; b).
#[pyfunction]
#[pyo3(signature = (x, mu=0.0, b=1.0))]
fn laplace_cdf(x: f64, mu: f64, b: f64) -> PyResult<f64> {
    Ok(stats::laplace_cdf(x, &params(mu, b)?))
}

/// One-sample KS test of `samples` against Lap(mu; b) at significance
/// `alpha` (0.10, 0.05 or 0.01).
#[pyfunction]
#[pyo3(signature = (samples, mu=0.0, b=1.0, alpha=0.01))]
fn ks_test(py: Python<'_>, samples: Vec<f64>, mu: f64, b: f64, alpha: f64) -> PyResult<KsReport> {
    let p = params(mu, b)?;
    let report = py
        .detach(|| stats::ks_test(&samples, &p, alpha))
        .map_err(to_py_err)?;
    Ok(KsReport {
        n_samples: report.n_samples,
        d_statistic: report.d_statistic,
        critical_value: report.critical_value,
        alpha: report.alpha,
        passed: report.passed,
    })
}

/// Bin samples into `bins` equal-width bins over `[lo, hi)`; NaN samples are
/// counted as invalid.
#[pyfunction]
fn histogram(samples: Vec<f64>, bins: usize, lo: f64, hi: f64) -> PyResult<Histogram> {
    let h = stats::histogram(&samples, bins, lo, hi).map_err(to_py_err)?;
    Ok(Histogram {
        bin_edges: h.bin_edges,
        counts: h.counts,
        underflow: h.underflow,
        overflow: h.overflow,
        invalid_count: h.invalid_count,
    })
}

/// Run one release mechanism over `x`.
///
/// `mechanism` is one of "laplace", "dptext-replace-zero", "dptext-resample",
/// "wrong-sensitivity", "copy-input", "random-output".
#[pyfunction]
#[pyo3(signature = (mechanism, x, epsilon, delta_sensitivity, seed=0, stream_id=0, delta_claimed=1.0))]
#[allow(clippy::too_many_arguments)]
fn apply_mechanism(
    mechanism: &str,
    x: Vec<f64>,
    epsilon: f64,
    delta_sensitivity: f64,
    seed: u64,
    stream_id: u64,
    delta_claimed: f64,
) -> PyResult<Vec<f64>> {
    let kind = parse_mechanism(mechanism, delta_claimed).map_err(to_py_err)?;
    let mut stream = UniformStream::new(seed, stream_id);
    mechanisms::apply(&kind, &x, epsilon, delta_sensitivity, &mut stream)
        .map(|z| z.into_values())
        .map_err(to_py_err)
}

/// Majority-vote reconstruction attack on a privatized vector; returns
/// "zeros" or "ones". `tie_break` is "ones", "zeros" or "coin".
#[pyfunction]
#[pyo3(signature = (z, tie_break="ones", seed=0))]
fn reconstruction_attack(z: Vec<f64>, tie_break: &str, seed: u64) -> PyResult<&'static str> {
    if z.is_empty() {
        return Err(PyValueError::new_err("vector must be nonempty"));
    }
    let tie = parse_tie_break(tie_break).map_err(to_py_err)?;
    let mut coin = UniformStream::new(seed, 1 << 62);
    Ok(match audit::reconstruction_attack(&z, tie, &mut coin) {
        audit::Guess::Zeros => "zeros",
        audit::Guess::Ones => "ones",
    })
}

/// Audit a mechanism on the worst-case pair 0^n / 1^n.
///
/// Runs `trials` mechanism invocations per side and repeat, mounts the
/// rounding + majority-vote attack, and estimates the empirical privacy
/// loss. Trials run in parallel; the result is deterministic in the seed.
#[pyfunction]
#[pyo3(signature = (mechanism, n, epsilon, trials, repeats=1, seed=0, delta_claimed=1.0, tie_break="ones", margin=None))]
#[allow(clippy::too_many_arguments)]
fn run_audit(
    py: Python<'_>,
    mechanism: &str,
    n: usize,
    epsilon: f64,
    trials: u64,
    repeats: u32,
    seed: u64,
    delta_claimed: f64,
    tie_break: &str,
    margin: Option<f64>,
) -> PyResult<AuditResult> {
    let config = AuditConfig {
        n,
        epsilon,
        trials,
        repeats,
        master_seed: seed,
        mechanism: parse_mechanism(mechanism, delta_claimed).map_err(to_py_err)?,
        tie_break: parse_tie_break(tie_break).map_err(to_py_err)?,
        margin,
    };
    let result = py.detach(|| audit::run_audit(&config)).map_err(to_py_err)?;
    Ok(AuditResult {
        p_x: result.p_x,
        p_xprime: result.p_xprime,
        eps_forward: result.eps_forward,
        eps_backward: result.eps_backward,
        eps_emp: result.eps_emp,
        eps_emp_mean: result.eps_emp_mean,
        eps_emp_std: result.eps_emp_std,
        per_repeat_eps: result.per_repeat_eps,
        violated: result.violated,
    })
}

/// The worst-case neighboring pair (0^n, 1^n).
#[pyfunction]
fn make_neighboring_pair(n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    audit::make_neighboring_pair(n).map_err(to_py_err)
}

#[pymodule]
fn dpaudit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<KsReport>()?;
    m.add_class::<Histogram>()?;
    m.add_class::<AuditResult>()?;
    m.add_function(wrap_pyfunction!(sample_noise, m)?)?;
    m.add_function(wrap_pyfunction!(laplace_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(histogram, m)?)?;
    m.add_function(wrap_pyfunction!(apply_mechanism, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruction_attack, m)?)?;
    m.add_function(wrap_pyfunction!(run_audit, m)?)?;
    m.add_function(wrap_pyfunction!(make_neighboring_pair, m)?)?;
    Ok(())
}
