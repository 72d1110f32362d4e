//! End-to-end checks of the binary: exit codes, determinism of output
//! files, and the schema contract.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dikin"))
}

fn write_preset(dir: &std::path::Path, name: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{name}.json"));
    let out = bin()
        .args(["preset", "--name", name, "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    path
}

#[test]
fn usage_error_exits_2() {
    let out = bin().args(["sample", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_error_exits_1() {
    let out = bin()
        .args(["sample", "--problem", "/nonexistent/problem.json", "--n", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_violation_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"version": 1, "dimension": 2, "unknown_field": true}"#).unwrap();
    let out = bin()
        .args(["sample", "--problem", path.to_str().unwrap(), "--n", "10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown_field") || err.contains("unknown field"), "stderr: {err}");
    assert!(err.contains("line"), "parse errors should carry a location: {err}");
}

#[test]
fn fixed_seed_is_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_preset(dir.path(), "uniform-box");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out_path = dir.path().join(format!("s{run}.jsonl"));
        let out = bin()
            .args([
                "sample",
                "--problem",
                problem.to_str().unwrap(),
                "--n",
                "500",
                "--seed",
                "11",
                "--out",
                out_path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "same seed must give identical bytes");

    let other = dir.path().join("other.jsonl");
    let out = bin()
        .args([
            "sample",
            "--problem",
            problem.to_str().unwrap(),
            "--n",
            "500",
            "--seed",
            "12",
            "--out",
            other.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_ne!(outputs[0], std::fs::read(&other).unwrap());
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_preset(dir.path(), "uniform-box");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out_path = dir.path().join(format!("t{threads}.jsonl"));
        let out = bin()
            .env("DIKIN_THREADS", threads)
            .args([
                "sample",
                "--problem",
                problem.to_str().unwrap(),
                "--n",
                "300",
                "--seed",
                "5",
                "--chains",
                "3",
                "--out",
                out_path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(std::fs::read(&out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "worker fan-out must reduce deterministically");
}

#[test]
fn walk_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_preset(dir.path(), "uniform-box");
    let csv_path = dir.path().join("w.csv");
    let out = bin()
        .args([
            "walk",
            "--problem",
            problem.to_str().unwrap(),
            "--n",
            "50",
            "--start",
            "0.5,0.5",
            "--seed",
            "3",
            "--out",
            csv_path.to_str().unwrap(),
            "--format",
            "csv",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().count(), 50);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 2);
}

#[test]
fn certify_psd_table() {
    let out = bin()
        .args(["certify", "--barrier", "psd", "--n", "30"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("ssc_frobenius"));
    assert!(text.contains("PASS"));
}

#[test]
fn certify_negative_control_fails() {
    let out = bin()
        .args(["certify", "--barrier", "psd-unscaled", "--n", "20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("FAIL"));
}

#[test]
fn metadata_sidecar_written() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_preset(dir.path(), "gaussian-polytope");
    let out_path = dir.path().join("g.jsonl");
    let out = bin()
        .args([
            "sample",
            "--problem",
            problem.to_str().unwrap(),
            "--n",
            "200",
            "--seed",
            "9",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.jsonl.meta.json")).unwrap())
            .unwrap();
    // the run is auditable: applied scalings and combined (nu, nu_bar)
    assert!(meta["nu"].as_f64().unwrap() > 0.0);
    assert!(meta["nu_bar"].as_f64().unwrap() > 0.0);
    assert_eq!(meta["ambient_dim"].as_u64().unwrap(), 3);
    assert!(meta["parts"].as_array().unwrap().len() == 2);
    assert!(meta["schedule"].as_array().unwrap().len() > 3);
}

#[test]
fn bench_emits_csv() {
    let out = bin()
        .args(["bench", "--family", "polytope", "--dims", "2..3", "--steps", "2000"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("dimension,acceptance"));
    assert_eq!(text.lines().count(), 3);
}
