//! Behavior of the `steklov` binary: exit codes, error reporting, file
//! layout, and determinism across thread counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn steklov() -> Command {
    Command::new(env!("CARGO_BIN_EXE_steklov"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("config written");
    path
}

fn last_line(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .last()
        .unwrap_or_default()
        .to_string()
}

fn violation_paths(output: &Output) -> Vec<String> {
    let value: serde_json::Value =
        serde_json::from_str(&last_line(&output.stderr)).expect("stderr ends with JSON");
    value["schema_violations"]
        .as_array()
        .expect("violation list")
        .iter()
        .map(|v| v["path"].as_str().unwrap().to_string())
        .collect()
}

const SPLIT_CONFIG: &str = r#"{
    "curve": {"base_radius": 1.0, "n_nodes": 128},
    "solver": {"basis_order": 16},
    "experiment": "split",
    "params": {"trials": 4, "amplitude": 0.05, "max_mode": 6, "seed": 5},
    "output": {"path": "unused", "format": "json"}
}"#;

#[test]
fn schema_errors_are_collected_and_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{
            "curve": {"base_radius": -1.0, "n_nodes": 127},
            "solver": {"n_nodes": 256},
            "experiment": "warp",
            "params": {},
            "output": {"path": "x", "format": "json"}
        }"#,
    );
    let output = steklov().arg("run").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    let paths = violation_paths(&output);
    assert!(paths.len() >= 4, "only {paths:?}");
    for expected in ["curve.base_radius", "solver.n_nodes", "experiment"] {
        assert!(
            paths.iter().any(|p| p == expected),
            "missing {expected} in {paths:?}"
        );
    }
}

#[test]
fn syntax_errors_report_a_root_violation() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "oops.json", "{oops");
    let output = steklov().arg("validate").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert_eq!(violation_paths(&output), vec!["<root>".to_string()]);
}

#[test]
fn validate_round_trips_its_own_echo() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "partial.json",
        r#"{
            "curve": {"base_radius": 1.0, "cos": [0.0, 0.0, 0.1], "n_nodes": 128},
            "experiment": "derivative-check",
            "params": {"sigma": {"cos": [0.0, 1.0]}}
        }"#,
    );
    let first = steklov().arg("validate").arg(&config).output().unwrap();
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let echo = String::from_utf8(first.stdout).unwrap();
    assert!(echo.contains("\"basis_order\": 24"), "defaults filled in:\n{echo}");

    let round = write_config(dir.path(), "echo.json", &echo);
    let second = steklov().arg("validate").arg(&round).output().unwrap();
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(echo, String::from_utf8(second.stdout).unwrap());
}

#[test]
fn missing_config_file_exits_4() {
    let output = steklov()
        .arg("run")
        .arg("/nonexistent/steklov-config.json")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn unwritable_output_directory_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "split.json", SPLIT_CONFIG);
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"file, not a directory").unwrap();
    let output = steklov()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(blocker.join("sub"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn failed_check_exits_1_and_still_writes_files() {
    // An absurdly demanding window threshold makes the arc-window check
    // fail honestly; the data and report must be written regardless.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "uc.json",
        r#"{
            "curve": {"base_radius": 1.0, "n_nodes": 128},
            "solver": {"basis_order": 16},
            "experiment": "uc-check",
            "params": {"n_fields": 4, "tol": 0.9},
            "output": {"path": "unused", "format": "json"}
        }"#,
    );
    let out = dir.path().join("out");
    let output = steklov()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["error"].is_null());
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["passed"] == false));
    assert!(out.join("uc.json").exists());
    assert!(String::from_utf8_lossy(&output.stdout).contains("FAIL"));
}

#[test]
fn compute_error_exits_2_and_still_writes_report() {
    // Cluster 9 does not exist in an 11-eigenvalue disk spectrum; that is
    // only discoverable at compute time, so the run must fail late, keep
    // the report, and say why.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "deriv.json",
        r#"{
            "curve": {"base_radius": 1.0, "n_nodes": 128},
            "solver": {"basis_order": 16},
            "experiment": "derivative-check",
            "params": {"cluster": 9, "sigma": {"cos": [0.0, 1.0]}},
            "output": {"path": "unused", "format": "json"}
        }"#,
    );
    let out = dir.path().join("out");
    let output = steklov()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report["error"].is_string(), "report: {report}");
}

#[test]
fn csv_header_names_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "spectrum.json",
        r#"{
            "curve": {"base_radius": 1.0, "n_nodes": 128},
            "solver": {"basis_order": 16},
            "experiment": "spectrum",
            "params": {"k_max": 4},
            "output": {"path": "unused", "format": "json+csv"}
        }"#,
    );
    let out = dir.path().join("out");
    let output = steklov()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("eigenfields.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "theta,f0,f1,f2,f3,f4");
    // One row per node plus the header.
    assert_eq!(csv.lines().count(), 129);
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "split.json", SPLIT_CONFIG);
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("threads{threads}"));
        let status = steklov()
            .arg("run")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .arg("--quiet")
            .env("STEKLOV_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(out);
    }
    for file in ["trials.jsonl", "summary.json"] {
        let a = std::fs::read(outputs[0].join(file)).unwrap();
        let b = std::fs::read(outputs[1].join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across thread counts");
    }
}

#[test]
fn quiet_suppresses_console_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "split.json", SPLIT_CONFIG);
    let out = dir.path().join("out");
    let output = steklov()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty());

    let loud = steklov()
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&loud.stdout).contains("PASS"));
}

#[test]
fn config_output_path_is_used_without_flag() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results");
    let config = write_config(
        dir.path(),
        "spectrum.json",
        &format!(
            r#"{{
                "curve": {{"base_radius": 1.0, "n_nodes": 64}},
                "solver": {{"basis_order": 12}},
                "experiment": "spectrum",
                "params": {{"k_max": 4}},
                "output": {{"path": "{}", "format": "json"}}
            }}"#,
            target.display()
        ),
    );
    let status = steklov().arg("run").arg(&config).arg("--quiet").status().unwrap();
    assert!(status.success());
    assert!(target.join("report.json").exists());
    assert!(target.join("spectrum.json").exists());
}
