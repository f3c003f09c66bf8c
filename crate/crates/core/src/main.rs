//! `dp-audit`: sanity-check differential-privacy mechanisms from the shell.
//!
//! Exit codes: 0 success / no violation among expected-DP mechanisms,
//! 2 usage or configuration error, 3 violation detected under `--expect-dp`,
//! 4 KS test failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dp_audit::cli::{
    parse_mechanism, parse_policy, parse_sampler, parse_tie_break, run_kstest, run_sample_histogram,
    run_sample_raw, run_sweep, write_csv, write_histogram_tsv, write_json, OutputFormat,
    SampleSpec, SweepSpec,
};
use dp_audit::samplers::LaplaceParams;
use dp_audit::Error;

#[derive(Parser)]
#[command(name = "dp-audit", version, about = "Empirical sanity checks for DP mechanisms")]
struct Cli {
    /// Worker threads for trial execution; falls back to DP_AUDIT_THREADS,
    /// then to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit mechanisms over a grid of dimensions and privacy budgets
    Audit(AuditArgs),
    /// Draw noise samples, raw or binned into a histogram
    Sample(SampleArgs),
    /// Goodness-of-fit of a sampler against the Laplace distribution
    Kstest(KstestArgs),
}

#[derive(Args)]
struct AuditArgs {
    /// Mechanisms to audit: laplace, dptext-replace-zero, dptext-resample,
    /// wrong-sensitivity, copy-input, random-output (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    mechanism: Vec<String>,
    /// Dimensions of the neighboring pair (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 4, 8, 16, 32, 64, 128])]
    n: Vec<usize>,
    /// Privacy budgets (comma separated)
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 1.0, 10.0])]
    epsilon: Vec<f64>,
    /// Mechanism runs per dataset side and cell
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    /// Full-experiment repetitions per cell
    #[arg(long, default_value_t = 1)]
    repeats: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Claimed sensitivity used by wrong-sensitivity
    #[arg(long, default_value_t = 1.0)]
    delta_claimed: f64,
    /// Violation margin; default is 3x the spread across repeats, or 0.01
    /// with a single repeat
    #[arg(long)]
    margin: Option<f64>,
    /// Majority-vote tie rule: ones, zeros or coin
    #[arg(long, default_value = "ones")]
    tie_break: String,
    /// Exit 3 if any audited mechanism violates its budget
    #[arg(long)]
    expect_dp: bool,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct SampleArgs {
    /// Sampler: inverse-cdf-centered, inverse-cdf-piecewise,
    /// inverse-cdf-shifted or dptext-broken
    #[arg(long)]
    kind: String,
    /// NaN policy for dptext-broken: replace-zero or resample; omitted means
    /// raw draws with invalids kept
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 100_000)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit a histogram with this many bins instead of raw samples
    #[arg(long)]
    hist: Option<usize>,
    /// Histogram lower edge; defaults to a range suited to the sampler
    #[arg(long)]
    lo: Option<f64>,
    /// Histogram upper edge
    #[arg(long)]
    hi: Option<f64>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KstestArgs {
    /// Sampler under test (same names as `sample`)
    #[arg(long)]
    kind: String,
    /// NaN policy for dptext-broken; defaults to resample
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 100_000)]
    count: u64,
    /// Significance level: 0.10, 0.05 or 0.01
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dp-audit: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("DP_AUDIT_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Audit(args) => cmd_audit(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Kstest(args) => cmd_kstest(args),
    })
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn cmd_audit(args: AuditArgs) -> Result<ExitCode, Error> {
    let format = match args.format.as_str() {
        "csv" => OutputFormat::Csv,
        "json" => OutputFormat::Json,
        other => return Err(Error::Io(format!("unknown format {other:?}"))),
    };
    let mechanisms = args
        .mechanism
        .iter()
        .map(|name| parse_mechanism(name, args.delta_claimed))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = SweepSpec {
        mechanisms,
        dims: args.n,
        epsilons: args.epsilon,
        trials: args.trials,
        repeats: args.repeats,
        master_seed: args.seed,
        tie_break: parse_tie_break(&args.tie_break)?,
        margin: args.margin,
    };
    let records = run_sweep(&spec)?;
    let mut out = open_output(&args.out)?;
    match format {
        OutputFormat::Csv => write_csv(&records, &mut out)?,
        OutputFormat::Json => write_json(&records, &mut out)?,
    }
    out.flush()?;
    if args.expect_dp && records.iter().any(|r| r.result.violated) {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sample(args: SampleArgs) -> Result<ExitCode, Error> {
    let spec = SampleSpec {
        kind: parse_sampler(&args.kind)?,
        policy: args.policy.as_deref().map(parse_policy).transpose()?,
        params: LaplaceParams::new(args.mu, args.b)?,
        count: args.count,
        seed: args.seed,
    };
    let mut out = open_output(&args.out)?;
    match args.hist {
        Some(bins) => {
            let (default_lo, default_hi) = spec.default_range();
            let lo = args.lo.unwrap_or(default_lo);
            let hi = args.hi.unwrap_or(default_hi);
            let hist = run_sample_histogram(&spec, bins, lo, hi)?;
            write_histogram_tsv(&spec, &hist, &mut out)?;
        }
        None => run_sample_raw(&spec, &mut out)?,
    }
    out.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_kstest(args: KstestArgs) -> Result<ExitCode, Error> {
    let report = run_kstest(
        parse_sampler(&args.kind)?,
        args.policy.as_deref().map(parse_policy).transpose()?,
        LaplaceParams::new(args.mu, args.b)?,
        args.count,
        args.alpha,
        args.seed,
    )?;
    let json = serde_json::json!({
        "n_samples": report.n_samples,
        "d_statistic": report.d_statistic,
        "critical_value": report.critical_value,
        "alpha": report.alpha,
        "passed": report.passed,
    });
    println!("{}", serde_json::to_string_pretty(&json).expect("report serializes"));
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}
