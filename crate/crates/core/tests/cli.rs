//! End-to-end checks of the `dp-audit` binary: flags, exit codes, file
//! formats, reproducibility.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn dp_audit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dp-audit"))
        .args(args)
        .env_remove("DP_AUDIT_THREADS")
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn audit_expected_dp_mechanism_exits_zero() {
    let dir = tempdir().unwrap();
    let out_path = dir.path().join("audit.csv");
    let out = dp_audit(&[
        "audit",
        "--mechanism",
        "laplace",
        "--n",
        "1,2",
        "--epsilon",
        "0.1,1",
        "--trials",
        "20000",
        "--seed",
        "1",
        "--expect-dp",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mechanism,nan_policy,delta_claimed,n,epsilon,trials,repeats,seed,p_x,p_xprime,\
eps_forward,eps_backward,eps_emp_mean,eps_emp_std,violated"
    );
    assert_eq!(lines.count(), 4, "one record per grid cell");
    assert!(text.lines().skip(1).all(|l| l.ends_with(",false")));
}

#[test]
fn audit_violating_mechanism_exits_three_with_infinite_loss() {
    let out = dp_audit(&[
        "audit",
        "--mechanism",
        "dptext-resample",
        "--n",
        "1",
        "--epsilon",
        "0.1",
        "--trials",
        "100000",
        "--expect-dp",
    ]);
    assert_eq!(exit_code(&out), 3);
    let text = String::from_utf8(out.stdout).unwrap();
    let record = text.lines().nth(1).unwrap();
    assert!(record.starts_with("dptext-resample,resample,,1,0.1,100000,"));
    assert!(record.contains(",inf,"), "record: {record}");
    assert!(record.ends_with(",true"));
}

#[test]
fn audit_without_expect_dp_always_exits_zero() {
    let out = dp_audit(&[
        "audit",
        "--mechanism",
        "copy-input",
        "--n",
        "1",
        "--epsilon",
        "0.1",
        "--trials",
        "100",
    ]);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn audit_json_mirrors_fields_and_per_repeat_losses() {
    let out = dp_audit(&[
        "audit",
        "--mechanism",
        "wrong-sensitivity",
        "--delta-claimed",
        "1",
        "--n",
        "2",
        "--epsilon",
        "0.1",
        "--trials",
        "50000",
        "--repeats",
        "3",
        "--format",
        "json",
    ]);
    assert_eq!(exit_code(&out), 0);
    let cells: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cell = &cells.as_array().unwrap()[0];
    assert_eq!(cell["mechanism"], "wrong-sensitivity");
    assert_eq!(cell["delta_claimed"], 1.0);
    assert_eq!(cell["per_repeat_eps"].as_array().unwrap().len(), 3);
    assert_eq!(cell["violated"], true);
    let mean = cell["eps_emp_mean"].as_f64().unwrap();
    assert!((mean - 0.195).abs() < 0.03, "mean {mean}");
}

#[test]
fn audit_usage_errors_exit_two() {
    for args in [
        vec!["audit", "--mechanism", "gaussian", "--n", "1", "--epsilon", "1", "--trials", "10"],
        vec!["audit", "--mechanism", "laplace", "--n", "0", "--epsilon", "1", "--trials", "10"],
        vec!["audit", "--mechanism", "laplace", "--n", "1", "--epsilon", "-1", "--trials", "10"],
        vec!["audit", "--mechanism", "laplace", "--n", "1", "--epsilon", "1", "--trials", "0"],
        vec!["audit", "--mechanism", "laplace", "--n", "1", "--epsilon", "1", "--trials", "10", "--repeats", "0"],
        vec!["audit", "--mechanism", "laplace", "--n", "1", "--epsilon", "1", "--trials", "10", "--tie-break", "median"],
        vec!["audit", "--mechanism", "laplace", "--n", "1", "--epsilon", "1", "--trials", "10", "--margin", "-0.5"],
        vec!["audit", "--mechanism", "wrong-sensitivity", "--delta-claimed", "0", "--n", "1", "--epsilon", "1", "--trials", "10"],
        vec!["audit", "--mechanism", "laplace", "--n", "1", "--epsilon", "1", "--trials", "10", "--format", "yaml"],
        vec!["audit"],
    ] {
        let out = dp_audit(&args);
        assert_eq!(exit_code(&out), 2, "args: {args:?}");
    }
}

#[test]
fn audit_csv_is_reproducible_across_thread_counts() {
    let run = |threads: &str| {
        let out = dp_audit(&[
            "audit",
            "--mechanism",
            "laplace,dptext-replace-zero",
            "--n",
            "1,2",
            "--epsilon",
            "0.5",
            "--trials",
            "20000",
            "--repeats",
            "2",
            "--seed",
            "99",
            "--threads",
            threads,
        ]);
        assert_eq!(exit_code(&out), 0);
        out.stdout
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn threads_env_var_is_a_fallback() {
    let out = Command::new(env!("CARGO_BIN_EXE_dp-audit"))
        .args([
            "audit",
            "--mechanism",
            "laplace",
            "--n",
            "1",
            "--epsilon",
            "1",
            "--trials",
            "20000",
            "--seed",
            "99",
        ])
        .env("DP_AUDIT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 0);
    let via_flag = dp_audit(&[
        "audit",
        "--mechanism",
        "laplace",
        "--n",
        "1",
        "--epsilon",
        "1",
        "--trials",
        "20000",
        "--seed",
        "99",
        "--threads",
        "2",
    ]);
    assert_eq!(out.stdout, via_flag.stdout);
}

#[test]
fn sample_histogram_file_schema() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("hist.tsv");
    let out = dp_audit(&[
        "sample",
        "--kind",
        "inverse-cdf-centered",
        "--b",
        "1",
        "--count",
        "100000",
        "--hist",
        "100",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = std::fs::read_to_string(&path).unwrap();
    for key in ["# kind=inverse-cdf-centered", "# mu=0", "# b=1", "# count=100000", "# invalid_count=0", "# seed=7"] {
        assert!(text.lines().any(|l| l == key), "missing {key}");
    }
    let data_rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_rows.len(), 100);
    let total: u64 = data_rows
        .iter()
        .map(|row| row.split('\t').nth(2).unwrap().parse::<u64>().unwrap())
        .sum();
    assert!(total <= 100_000);
    let first: Vec<&str> = data_rows[0].split('\t').collect();
    assert_eq!(first.len(), 3);
    assert_eq!(first[0], "-8");
}

#[test]
fn sample_replace_zero_histogram_has_spike_at_zero() {
    let out = dp_audit(&[
        "sample",
        "--kind",
        "dptext-broken",
        "--policy",
        "replace-zero",
        "--count",
        "100000",
        "--hist",
        "100",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let spike: u64 = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|row| {
            let mut cols = row.split('\t');
            let left: f64 = cols.next().unwrap().parse().unwrap();
            let right: f64 = cols.next().unwrap().parse().unwrap();
            let count: u64 = cols.next().unwrap().parse().unwrap();
            if left <= 0.0 && 0.0 < right {
                count
            } else {
                0
            }
        })
        .sum();
    let mass = spike as f64 / 100_000.0;
    assert!((0.48..=0.57).contains(&mass), "spike mass {mass}");
}

#[test]
fn sample_raw_broken_reports_invalids() {
    let out = dp_audit(&[
        "sample",
        "--kind",
        "dptext-broken",
        "--count",
        "1000",
        "--seed",
        "3",
    ]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let invalid: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# invalid_count="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(invalid > 400 && invalid < 600, "invalid {invalid}");
    assert_eq!(text.lines().filter(|l| *l == "nan").count() as u64, invalid);
}

#[test]
fn sample_usage_errors_exit_two() {
    for args in [
        vec!["sample", "--kind", "inverse-cdf-centered", "--count", "0"],
        vec!["sample", "--kind", "ziggurat", "--count", "10"],
        vec!["sample", "--kind", "inverse-cdf-centered", "--policy", "resample", "--count", "10"],
        vec!["sample", "--kind", "inverse-cdf-centered", "--b", "-1", "--count", "10"],
        vec!["sample", "--kind", "inverse-cdf-centered", "--count", "10", "--hist", "0"],
    ] {
        let out = dp_audit(&args);
        assert_eq!(exit_code(&out), 2, "args: {args:?}");
    }
}

#[test]
fn kstest_verdict_exit_codes() {
    let out = dp_audit(&[
        "kstest",
        "--kind",
        "inverse-cdf-piecewise",
        "--count",
        "100000",
        "--alpha",
        "0.01",
    ]);
    assert_eq!(exit_code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["n_samples"], 100_000);
    assert!(report["d_statistic"].as_f64().unwrap() < report["critical_value"].as_f64().unwrap());

    let out = dp_audit(&["kstest", "--kind", "dptext-broken", "--count", "100000"]);
    assert_eq!(exit_code(&out), 4);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["d_statistic"].as_f64().unwrap() >= 0.49);

    let out = dp_audit(&["kstest", "--kind", "inverse-cdf-centered", "--alpha", "0.5"]);
    assert_eq!(exit_code(&out), 2);
    let out = dp_audit(&["kstest", "--kind", "inverse-cdf-centered", "--alpha", "0.03"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn identical_command_lines_are_byte_identical() {
    let dir = tempdir().unwrap();
    let run = |name: &str| -> Vec<u8> {
        let path = dir.path().join(name);
        let out = dp_audit(&[
            "audit",
            "--mechanism",
            "random-output",
            "--n",
            "2",
            "--epsilon",
            "1",
            "--trials",
            "50000",
            "--seed",
            "42",
            "--format",
            "json",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
        std::fs::read(Path::new(&path)).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}
