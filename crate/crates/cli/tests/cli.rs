use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const HYPERBOLIC: &str = r#"{"A": [[2, 0], [0, -2]], "m": 2, "c": ["0", "1"],
    "C": [["0", "1"], ["1", "2"]], "U": [["3", "1"]], "T": [["3"]]}"#;

const HALF_SHIFT: &str = r#"{"A": [[2, 0], [0, -2]], "m": 2, "C": [["0", "1"], ["1", "2"]],
    "H": [["1/2", "0"]], "K": [["1/3", "1/7"]], "Z": {"X": [[0.1]], "Y": [[0.9]]}, "S": [[1]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_siegel-theta"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn inspect_reports_signature_and_frame() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "h.json", HYPERBOLIC);
    let out = run(&["inspect", "--problem", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_stdout(&out);
    assert_eq!(v["signature"], serde_json::json!([1, 1]));
    assert_eq!(v["abs_det"], "4");
    assert_eq!(v["genus"], 1);
    assert_eq!(v["frame"]["valid"], true);
    assert!(v["frame"]["lambda_star"].as_f64().unwrap() > 0.0);
    assert_eq!(v["split"]["q_c"], "-1");
}

#[test]
fn evaluations_have_documented_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "h.json", HYPERBOLIC);
    let p = p.to_str().unwrap();

    let f = json_stdout(&run(&["f-eval", "--problem", p]));
    assert_eq!(f["f"], "1");

    let g = json_stdout(&run(&["g-eval", "--problem", p]));
    let closed = g["closed_form"].as_f64().unwrap();
    assert!((g["value"].as_f64().unwrap() - closed).abs() < 1e-10);
    assert_eq!(g["rule_used"], "gm:7");

    let t = json_stdout(&run(&["theta-g", "--problem", p, "--eps", "1e-9"]));
    let keys: Vec<&str> = t.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    assert_eq!(keys, ["radius", "tail_bound", "terms", "value"]);
    assert_eq!(t["value"].as_array().unwrap().len(), 2);

    let c = json_stdout(&run(&["cosets", "--problem", p]));
    assert_eq!(c["count"], 4);

    let a = json_stdout(&run(&["fourier", "--problem", p]));
    assert_eq!(a["value"].as_array().unwrap().len(), 2);
}

#[test]
fn monte_carlo_rule_takes_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "h.json", HYPERBOLIC);
    let p = p.to_str().unwrap();
    let a = run(&["g-eval", "--problem", p, "--rule", "mc:5000", "--seed", "9"]);
    let b = run(&["g-eval", "--problem", p, "--rule", "mc:5000:9"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let clash = run(&["g-eval", "--problem", p, "--rule", "mc:5000:9", "--seed", "3"]);
    assert_eq!(clash.status.code(), Some(1));
}

#[test]
fn unknown_subcommand_exits_one_with_usage() {
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Usage"), "{err}");
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"A": [[2, 1], [0, -2]], "m": 2}"#);
    let out = run(&["inspect", "--problem", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());

    let p = write(dir.path(), "h.json", HYPERBOLIC);
    let out = run(&["theta-g", "--problem", p.to_str().unwrap(), "--eps", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["g-eval", "--problem", p.to_str().unwrap(), "--rule", "gm:8"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["inspect"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn passing_translation_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "h.json", HYPERBOLIC);
    let out_path = dir.path().join("report.json");
    let out = run(&["verify-translate", "--problem", p.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(report["law"], "translate");
    assert_eq!(report["pass"], true);
    assert_eq!(report["details"]["multiplier"], serde_json::json!([1.0, 0.0]));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "law,inputs_hash,abs_err,rel_err,pass");
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "translate");
    assert_eq!(fields[1].len(), 64);
    assert_eq!(fields[4], "true");
}

#[test]
fn failing_translation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "half.json", HALF_SHIFT);
    let out = run(&["verify-translate", "--problem", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let report = json_stdout(&out);
    assert_eq!(report["pass"], false);
    assert_eq!(report["details"]["even_lattice_pass"], true);
}

#[test]
fn batch_of_problems_gives_array_and_one_csv_row_each() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", HYPERBOLIC);
    let b = write(dir.path(), "b.json", HALF_SHIFT);
    let out_path = dir.path().join("batch.json");
    let out = run(&[
        "verify-invert",
        "--problem",
        a.to_str().unwrap(),
        "--problem",
        b.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: Value = serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 2);
    for r in reports.as_array().unwrap() {
        assert_eq!(r["details"]["coset_count"], 4);
    }
    let csv = std::fs::read_to_string(dir.path().join("batch.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "half.json", HALF_SHIFT);
    let p = p.to_str().unwrap();
    let one = run(&["theta-g", "--problem", p, "--threads", "1"]);
    let four = run(&["theta-g", "--problem", p, "--threads", "4"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn limit_uses_the_requested_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "h.json", HYPERBOLIC);
    let out = run(&["verify-limit", "--problem", p.to_str().unwrap(), "--ygrid", "1,100"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_stdout(&out);
    let series = r["details"]["series"].as_array().unwrap();
    assert_eq!(series.len(), 2);
    assert_eq!(series[1]["y"], 100.0);
    assert_eq!(r["details"]["f"], "1");
}
