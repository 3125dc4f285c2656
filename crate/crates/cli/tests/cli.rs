//! End-to-end runs of the `ulse` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ulse"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn ulse")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn generate(dir: &Path, t: usize) -> PathBuf {
    let path = dir.join("data.csv");
    let t = t.to_string();
    let out = ulse(&[
        "--seed",
        "3",
        "--out",
        path.to_str().unwrap(),
        "generate",
        "--design",
        "grouped",
        "-T",
        &t,
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

#[test]
fn help_snapshots() {
    let update = std::env::var_os("UPDATE_SNAPSHOTS").is_some();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots");
    for sub in ["", "generate", "fit", "gexp", "bench", "sp500"] {
        let args: Vec<&str> = if sub.is_empty() {
            vec!["--help"]
        } else {
            vec![sub, "--help"]
        };
        let out = ulse(&args);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let file = dir.join(format!(
            "{}help.txt",
            if sub.is_empty() {
                String::new()
            } else {
                format!("{sub}_")
            }
        ));
        if update {
            fs::write(&file, &text).unwrap();
        } else {
            let want = fs::read_to_string(&file)
                .unwrap_or_else(|_| panic!("missing {file:?}; run with UPDATE_SNAPSHOTS=1"));
            assert_eq!(
                text, want,
                "help for `{sub}` changed; run with UPDATE_SNAPSHOTS=1 to accept"
            );
        }
    }
}

#[test]
fn fit_reports_estimator_fields() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = generate(tmp.path(), 1000);
    let rep = stdout_json(&ulse(&[
        "fit",
        "--csv",
        csv.to_str().unwrap(),
        "--n",
        "150",
        "--n1",
        "20",
    ]));
    assert_eq!(rep["tool"], "ulse");
    assert_eq!(rep["command"], "fit");
    assert!(rep["input_digest"].as_str().unwrap().len() == 64);
    let r = &rep["results"]["robust_lse"];
    let beta = r["beta_hat"][0].as_f64().unwrap();
    assert!((beta - 1.0).abs() < 1.0, "beta {beta}");
    let env = &r["envelope"];
    assert!(env["mu_lo"].as_f64().unwrap() <= env["mu_hi"].as_f64().unwrap());
    let k = r["k_hat"].as_u64().unwrap();
    assert!((1..=851).contains(&k));
}

#[test]
fn fit_is_reproducible_and_writes_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = generate(tmp.path(), 800);
    let traces = tmp.path().join("tr");
    let args = [
        "fit",
        "--csv",
        csv.to_str().unwrap(),
        "--n",
        "150",
        "--trace-dir",
        traces.to_str().unwrap(),
    ];
    let a = ulse(&args);
    let b = ulse(&args);
    assert_eq!(a.stdout, b.stdout);
    let means = fs::read_to_string(traces.join("block_means.csv")).unwrap();
    assert_eq!(means.lines().count(), 1 + 651);
}

#[test]
fn gexp_quadratic_equals_upper_variance() {
    let rep = stdout_json(&ulse(&[
        "gexp",
        "--payoff",
        "quadratic",
        "--sigma-lo",
        "0.5",
        "--sigma-hi",
        "1.0",
    ]));
    let v = rep["results"]["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() <= 1e-2, "value {v}");
    let dp = rep["results"]["dp_value"].as_f64().unwrap();
    assert!((dp - v).abs() <= 0.02 * v);
}

#[test]
fn oversized_block_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = generate(tmp.path(), 1000);
    let out = ulse(&["fit", "--csv", csv.to_str().unwrap(), "--n", "5000"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("n <= T"), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
}

#[test]
fn runtime_errors_are_one_line_and_leave_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "x1,y\n1,2\n2,oops\n3,4\n").unwrap();
    let target = tmp.path().join("report.json");
    let out = ulse(&[
        "--out",
        target.to_str().unwrap(),
        "fit",
        "--csv",
        bad.to_str().unwrap(),
        "--n",
        "3",
    ]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.starts_with("error: "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert!(!target.exists());
    let leftovers: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(leftovers.len(), 1, "{leftovers:?}");
}

#[test]
fn missing_file_exits_one() {
    let out = ulse(&["fit", "--csv", "/definitely/not/here.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn unknown_flag_exits_two() {
    assert_eq!(ulse(&["fit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn bench_small_grid_is_thread_count_invariant() {
    let run = |threads: &str| {
        let out = ulse(&[
            "--threads",
            threads,
            "--seed",
            "5",
            "bench",
            "--design",
            "scenarios",
            "--reps",
            "20",
            "--scenarios",
            "1,6",
        ]);
        stdout_json(&out)["results"].clone()
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn sp500_on_synthetic_series() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("px.csv");
    let mut body = String::from("Date,Close\n");
    let mut p = 100.0f64;
    for day in 0..730 {
        let (y, d) = (2001 + day / 365, day % 365);
        let (m, dd) = (1 + d / 31 % 12, 1 + d % 28);
        p *= 1.0 + 0.01 * ((day as f64 * 0.7).sin());
        body.push_str(&format!("{y}-{m:02}-{dd:02},{p:.4}\n"));
    }
    fs::write(&csv, body).unwrap();
    let rep = stdout_json(&ulse(&[
        "sp500",
        "--csv",
        csv.to_str().unwrap(),
        "--windows",
        "2001-01:2002-01,2002-01:2003-01",
    ]));
    let windows = rep["results"]["windows"].as_array().unwrap();
    assert_eq!(windows.len(), 2);
    assert!(windows.iter().all(|w| w["lse"]["r2"].is_number()));
    let notes = rep["notes"].as_array().unwrap();
    assert!(notes
        .iter()
        .any(|n| n.as_str().unwrap().contains("preprocessing")));
}
