//! End-to-end tests of the wflo binary: artifact shapes, determinism, and
//! error handling, driven through the real command-line interface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wflo_core::harness::{Method, RunRecord};
use wflo_core::qubo::QuboProblem;

fn wflo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wflo"))
        .args(args)
        .output()
        .expect("the wflo binary should run")
}

/// Fresh per-test scratch directory under the system temp dir.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wflo-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn path_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn enumerate_optimal_reports_the_degenerate_set() {
    let dir = scratch("enum");
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&[
        "enumerate-optimal",
        "--l-grid",
        "4",
        "--out",
        &out,
    ]));
    let value: serde_json::Value =
        serde_json::from_str(&read(&dir.join("run"), "optimal.json")).unwrap();
    assert!((value["power_kw"].as_f64().unwrap() - 2304.0).abs() < 1e-9);
    assert_eq!(value["num_layouts"].as_u64(), Some(79));
    let layouts = value["layouts"].as_array().unwrap();
    assert_eq!(layouts.len(), 79);
    for layout in layouts {
        let bits = layout.as_str().unwrap();
        assert_eq!(bits.len(), 16);
        assert_eq!(bits.chars().filter(|c| *c == '1').count(), 4);
    }
}

#[test]
fn equal_seed_solves_are_byte_identical() {
    let dir = scratch("determinism");
    for name in ["first", "second"] {
        let out = path_arg(&dir, name);
        assert_success(&wflo(&[
            "solve", "--method", "sa", "--seed", "7", "--l-grid", "3", "--out", &out,
        ]));
    }
    assert_eq!(
        read(&dir.join("first"), "records.json"),
        read(&dir.join("second"), "records.json")
    );
    assert_eq!(
        read(&dir.join("first"), "records.csv"),
        read(&dir.join("second"), "records.csv")
    );
}

#[test]
fn farm_writes_one_record_per_run() {
    let dir = scratch("farm");
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&[
        "farm",
        "--method",
        "vqe-cobyla",
        "--alpha",
        "0.25",
        "--runs",
        "3",
        "--l-grid",
        "2",
        "--m",
        "2",
        "--shots",
        "128",
        "--seed",
        "5",
        "--out",
        &out,
    ]));
    let records: Vec<RunRecord> =
        serde_json::from_str(&read(&dir.join("run"), "records.json")).unwrap();
    assert_eq!(records.len(), 3);
    for (index, record) in records.iter().enumerate() {
        assert_eq!(record.run_index, index);
        assert_eq!(record.method, Method::VqeCobyla);
        assert_eq!(record.alpha, 0.25);
        assert_eq!(record.wall_time_seconds, 0.0);
        assert!(!record.objective_history.is_empty());
    }
    let csv = read(&dir.join("run"), "records.csv");
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("run_index,seed,method,alpha"));
}

#[test]
fn build_qubo_artifact_round_trips() {
    let dir = scratch("qubo");
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&["build-qubo", "--l-grid", "3", "--out", &out]));
    let problem = QuboProblem::from_json_str(&read(&dir.join("run"), "qubo.json")).unwrap();
    assert_eq!(problem.num_sites, 9);
    assert_eq!(problem.m, 4);
    assert!((problem.coefficient(0, 0) - (-7576.0)).abs() < 1e-9);
    assert!((problem.constant_offset - 16000.0).abs() < 1e-12);
}

#[test]
fn heatmap_preserves_turbine_mass() {
    let dir = scratch("heatmap");
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&["heatmap", "--l-grid", "4", "--out", &out]));
    let csv = read(&dir.join("run"), "heatmap.csv");
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .map(|line| line.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|row| row.len() == 4));
    let total: f64 = rows.iter().flatten().sum();
    assert!((total - 4.0).abs() < 1e-9);
}

#[test]
fn bench_fits_a_power_law() {
    let dir = scratch("bench");
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&[
        "bench", "--method", "sa", "--grids", "2,3", "--runs", "1", "--m", "2", "--seed", "3",
        "--out", &out,
    ]));
    let value: serde_json::Value =
        serde_json::from_str(&read(&dir.join("run"), "scaling.json")).unwrap();
    assert_eq!(value["method"].as_str(), Some("sa"));
    assert_eq!(value["grids"].as_array().unwrap().len(), 2);
    let seconds = value["mean_seconds"].as_array().unwrap();
    assert!(seconds.iter().all(|s| s.as_f64().unwrap() > 0.0));
    assert!(value["fit"]["slope"].as_f64().unwrap().is_finite());
    assert!(value["fit"]["intercept"].as_f64().unwrap().is_finite());
}

#[test]
fn dea_check_reports_independent_parameters() {
    let dir = scratch("dea");
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&[
        "dea-check",
        "--l-grid",
        "2",
        "--layers",
        "2",
        "--seed",
        "5",
        "--out",
        &out,
    ]));
    let value: serde_json::Value =
        serde_json::from_str(&read(&dir.join("run"), "dea.json")).unwrap();
    assert_eq!(value["num_qubits"].as_u64(), Some(4));
    assert_eq!(value["parameter_count"].as_u64(), Some(8));
    assert_eq!(value["independent_count"].as_u64(), Some(8));
    let verdicts = value["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 8);
    assert!(verdicts.iter().all(|v| v.as_bool() == Some(true)));
}

#[test]
fn stats_summarizes_arrays_and_records() {
    let dir = scratch("stats");
    std::fs::write(dir.join("powers.json"), "[2304.0, 2304.0, 1152.0]").unwrap();
    let out = path_arg(&dir, "from-array");
    assert_success(&wflo(&[
        "stats",
        "--input",
        &path_arg(&dir, "powers.json"),
        "--optimal",
        "2304",
        "--out",
        &out,
    ]));
    let value: serde_json::Value =
        serde_json::from_str(&read(&dir.join("from-array"), "stats.json")).unwrap();
    assert_eq!(value["summary"]["count"].as_u64(), Some(3));
    assert!((value["summary"]["mean"].as_f64().unwrap() - 1920.0).abs() < 1e-9);
    let percent = value["percent_of_optimal"].as_f64().unwrap();
    assert!((percent - 100.0 * 1920.0 / 2304.0).abs() < 1e-9);

    let farm_out = path_arg(&dir, "farm");
    assert_success(&wflo(&[
        "farm",
        "--method",
        "exhaustive",
        "--runs",
        "2",
        "--l-grid",
        "2",
        "--m",
        "2",
        "--out",
        &farm_out,
    ]));
    let out = path_arg(&dir, "from-records");
    assert_success(&wflo(&[
        "stats",
        "--input",
        &path_arg(&dir.join("farm"), "records.json"),
        "--out",
        &out,
    ]));
    let value: serde_json::Value =
        serde_json::from_str(&read(&dir.join("from-records"), "stats.json")).unwrap();
    assert_eq!(value["summary"]["count"].as_u64(), Some(2));
    assert!(value["percent_of_optimal"].is_null());
}

#[test]
fn config_file_drives_the_farm_and_flags_override_it() {
    let dir = scratch("config");
    std::fs::write(
        dir.join("config.json"),
        r#"{"method": "exhaustive", "num_runs": 2, "m": 3, "master_seed": 9}"#,
    )
    .unwrap();
    let out = path_arg(&dir, "run");
    assert_success(&wflo(&[
        "farm",
        "--config",
        &path_arg(&dir, "config.json"),
        "--l-grid",
        "3",
        "--out",
        &out,
    ]));
    let records: Vec<RunRecord> =
        serde_json::from_str(&read(&dir.join("run"), "records.json")).unwrap();
    assert_eq!(records.len(), 2);
    for record in &records {
        assert_eq!(record.method, Method::Exhaustive);
        let bits = record.selected_layout.as_ref().unwrap();
        assert_eq!(bits.len(), 9);
        assert_eq!(bits.chars().filter(|c| *c == '1').count(), 3);
    }
}

#[test]
fn invalid_inputs_fail_with_a_diagnostic() {
    let unknown_method = wflo(&["solve", "--method", "gurobi"]);
    assert!(!unknown_method.status.success());
    let stderr = String::from_utf8_lossy(&unknown_method.stderr).to_string();
    assert!(stderr.contains("unknown method"), "stderr: {stderr}");

    let unknown_subcommand = wflo(&["frobnicate"]);
    assert!(!unknown_subcommand.status.success());
    let stderr = String::from_utf8_lossy(&unknown_subcommand.stderr).to_string();
    assert!(stderr.contains("Usage"), "stderr: {stderr}");

    let missing_method = wflo(&["solve", "--l-grid", "3"]);
    assert!(!missing_method.status.success());
    let stderr = String::from_utf8_lossy(&missing_method.stderr).to_string();
    assert!(stderr.contains("--method"), "stderr: {stderr}");

    let oversized = wflo(&["farm", "--method", "vqe-cobyla", "--l-grid", "5"]);
    assert!(!oversized.status.success());
    let stderr = String::from_utf8_lossy(&oversized.stderr).to_string();
    assert!(stderr.contains("exceeds"), "stderr: {stderr}");
}
