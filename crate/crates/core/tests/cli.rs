//! End-to-end runs of the `fps-lfa` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fps-lfa")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a synthetic CSV through the `generate` subcommand.
fn generate(dir: &TempDir, name: &str, dims: [&str; 4], noise: &str) -> PathBuf {
    let path = dir.path().join(name);
    let out = bin(&[
        "generate", "--rows", dims[0], "--cols", dims[1], "--rank", dims[2], "--density", dims[3], "--noise", noise,
        "--seed", "3", "--output", s(&path),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn generate_writes_headed_csv() {
    let dir = TempDir::new().unwrap();
    let path = generate(&dir, "g.csv", ["20", "10", "2", "0.5"], "0");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().next(), Some("user,item,rating"));
    assert_eq!(text.lines().count(), 1 + 100);
}

#[test]
fn train_writes_report_and_snapshot() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["60", "40", "3", "0.3"], "0.05");
    let report = dir.path().join("run.jsonl");
    let out = bin(&[
        "train", "--data", s(&data), "--format", "csv", "--header", "--optimizer", "fps", "--f", "3", "--max-epochs", "30",
        "--output", s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("best validation RMSE"));

    let recs = records(&report);
    assert_eq!(recs.first().unwrap()["record"], "config");
    assert_eq!(recs.first().unwrap()["optimizer"], "fps");
    let summary = recs.last().unwrap();
    assert_eq!(summary["record"], "summary");
    let epochs = recs.iter().filter(|r| r["record"] == "epoch").count();
    assert!(epochs >= 1 && epochs <= 30);
    for ext in ["model", "rows", "cols"] {
        assert!(report.with_extension(ext).exists(), "missing .{ext}");
    }
}

#[test]
fn missing_data_file_exits_3_naming_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.csv");
    let out = bin(&["train", "--data", s(&missing), "--format", "csv", "--output", s(&dir.path().join("r.jsonl"))]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
}

#[test]
fn malformed_line_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "1,2,3.0\n1,3,oops\n").unwrap();
    let out = bin(&["train", "--data", s(&data), "--format", "csv", "--output", s(&dir.path().join("r.jsonl"))]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2"));
}

#[test]
fn pid_unit_gain_matches_sgd_final_rmse() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["50", "40", "3", "0.3"], "0.1");
    let run = |opt: &str, extra: &[&str]| {
        let report = dir.path().join(format!("{opt}.jsonl"));
        let mut args = vec![
            "train", "--data", s(&data), "--format", "csv", "--header", "--f", "3", "--eta", "0.02", "--max-epochs", "40",
            "--optimizer", opt, "--output", s(&report),
        ];
        args.extend_from_slice(extra);
        let out = bin(&args);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let recs = records(&report);
        recs.iter().filter(|r| r["record"] == "epoch").map(|r| r["val_rmse"].as_f64().unwrap()).collect::<Vec<_>>()
    };
    let sgd = run("sgd", &[]);
    let pid = run("pid", &["--kp", "1", "--ki", "0", "--kd", "0"]);
    assert_eq!(sgd, pid);
}

#[test]
fn evaluate_after_exact_fit() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["30", "20", "2", "1.0"], "0");
    let report = dir.path().join("fit.jsonl");
    let common = ["--data", s(&data), "--format", "csv", "--header", "--split-seed", "4"];
    let mut args = vec!["train", "--optimizer", "sgd", "--f", "2", "--eta", "0.03", "--lambda", "0", "--min-delta", "0"];
    args.extend_from_slice(&["--patience", "3000", "--max-epochs", "3000", "--output", s(&report)]);
    args.extend_from_slice(&common);
    let out = bin(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let model = report.with_extension("model");
    let mut args = vec!["evaluate", "--model", s(&model), "--set", "train"];
    args.extend_from_slice(&common);
    let out = bin(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let result: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["set"], "train");
    assert!(result["rmse"].as_f64().unwrap() < 1e-2, "{result}");
}

#[test]
fn evaluate_rejects_mismatched_dimensions() {
    let dir = TempDir::new().unwrap();
    let small = generate(&dir, "small.csv", ["20", "15", "2", "0.5"], "0");
    let large = generate(&dir, "large.csv", ["40", "30", "2", "0.5"], "0");
    let report = dir.path().join("r.jsonl");
    let out = bin(&[
        "train", "--data", s(&small), "--format", "csv", "--header", "--optimizer", "sgd", "--f", "2", "--max-epochs", "3",
        "--output", s(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin(&["evaluate", "--model", s(&report.with_extension("model")), "--data", s(&large), "--format", "csv", "--header"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn degenerate_split_exits_2() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("tiny.csv");
    std::fs::write(&data, "1,1,3\n1,2,4\n2,1,5\n").unwrap();
    let out = bin(&["train", "--data", s(&data), "--format", "csv", "--output", s(&dir.path().join("r.jsonl"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn divergence_exits_4_with_partial_report() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["40", "30", "3", "0.5"], "0.1");
    let report = dir.path().join("r.jsonl");
    let out = bin(&[
        "train", "--data", s(&data), "--format", "csv", "--header", "--optimizer", "sgd", "--eta", "50", "--output",
        s(&report),
    ]);
    assert_eq!(code(&out), 4);
    let recs = records(&report);
    assert_eq!(recs.last().unwrap()["status"], "diverged");
}

#[test]
fn gains_with_sgd_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["20", "15", "2", "0.5"], "0");
    let out = bin(&[
        "train", "--data", s(&data), "--format", "csv", "--header", "--optimizer", "sgd", "--kp", "2", "--output",
        s(&dir.path().join("r.jsonl")),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["40", "30", "2", "0.4"], "0");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "data = {:?}\nformat = \"csv\"\nheader = true\noptimizer = \"pid\"\nf = 2\nmax_epochs = 7\n\n[pid]\nkp = 0.5\n",
            s(&data)
        ),
    )
    .unwrap();
    let report = dir.path().join("r.jsonl");
    let out = bin(&["train", "--config", s(&cfg), "--max-epochs", "4", "--output", s(&report)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&report);
    let config = &recs[0];
    assert_eq!(config["optimizer"], "pid");
    assert_eq!(config["max_epochs"], 4);
    assert_eq!(config["pid"]["kp"], 0.5);
    assert!(recs.iter().filter(|r| r["record"] == "epoch").count() <= 4);
}

#[test]
fn benchmark_single_repeat_has_zero_spread() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["50", "40", "3", "0.3"], "0.1");
    let json = dir.path().join("bench.jsonl");
    let out = bin(&[
        "benchmark", "--data", s(&data), "--format", "csv", "--header", "--f", "3", "--max-epochs", "20", "--repeats", "1",
        "--output", s(&json),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert_eq!(table.lines().count(), 4, "{table}");
    let rows: Vec<Value> = records(&json).into_iter().filter(|r| r["record"] == "benchmark").collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        assert_eq!(row["summary"]["best_rmse"]["std"], 0.0);
        assert_eq!(row["runs"].as_array().unwrap().len(), 1);
    }
}

#[test]
fn benchmark_needs_two_cases() {
    let dir = TempDir::new().unwrap();
    let data = generate(&dir, "d.csv", ["20", "15", "2", "0.5"], "0");
    let out = bin(&["benchmark", "--data", s(&data), "--format", "csv", "--header", "--optimizers", "fps"]);
    assert_eq!(code(&out), 2);
}
