//! End-to-end checks of the experiment runner and the `gelfand` binary.

use gelfand_cli::config::{ExperimentConfig, Task};
use gelfand_cli::runner::{execute, exit_code, RunError};
use std::path::Path;
use std::process::Command;

fn base_config(dir: &Path, tasks: Vec<Task>) -> ExperimentConfig {
    ExperimentConfig {
        tasks,
        output_dir: dir.to_path_buf(),
        r_max: 30.0,
        ..Default::default()
    }
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn solve_task_writes_monotone_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = base_config(tmp.path(), vec![Task::Solve]);
    let summary = execute(&cfg).unwrap();
    assert!(summary.files.contains(&"trajectory_p0_a0.csv".to_string()));
    let text = read(tmp.path(), "trajectory_p0_a0.csv");
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "r,u,u1,F");
    let mut prev_u = f64::INFINITY;
    for line in lines {
        let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(u <= prev_u + 1e-12, "u not monotone: {u} after {prev_u}");
        prev_u = u;
    }
}

#[test]
fn stability_sweep_is_monotone_in_alpha() {
    // threshold for the hyperbolic profile in dimension 3 is ~1.41, inside
    // the grid, so both verdict blocks appear and must not interleave
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path(), vec![Task::Stability]);
    cfg.alphas = (0..13).map(|i| -3.0 + 0.5 * i as f64).collect();
    execute(&cfg).unwrap();
    let text = read(tmp.path(), "stability.csv");
    let decisions: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(decisions.len(), 13);
    assert!(decisions.contains(&"stable") && decisions.contains(&"unstable"));
    let first_unstable = decisions.iter().position(|d| *d == "unstable").unwrap();
    assert!(decisions[..first_unstable].iter().all(|d| *d == "stable"));
    assert!(decisions[first_unstable..].iter().all(|d| *d == "unstable"));
}

#[test]
fn eta_task_reports_threshold_and_range_gap() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path(), vec![Task::Eta]);
    cfg.r_max = 50.0;
    execute(&cfg).unwrap();
    let text = read(tmp.path(), "eta.csv");
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let eta: f64 = fields[0].parse().unwrap();
    let log_l1: f64 = fields[4].parse().unwrap();
    assert!(eta > 0.0 && (eta - 1.4094).abs() < 5e-3, "eta {eta}");
    assert!(eta > log_l1);
    let manifest = read(tmp.path(), "manifest.txt");
    assert!(manifest.contains("eta_hat_2rmax"), "{manifest}");
}

#[test]
fn intersect_task_counts_flat_high_dimension_pair() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path(), vec![Task::Intersect]);
    cfg.profiles = vec!["euclidean".into()];
    cfg.dimension = 10;
    cfg.alphas = vec![0.0, 1.0];
    execute(&cfg).unwrap();
    let summary = read(tmp.path(), "intersections_summary.csv");
    let row = summary.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[2], "0");
    let min_gap: f64 = fields[3].parse().unwrap();
    assert!(min_gap > 0.0);
}

#[test]
fn check_profile_task_reports_assumptions() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path(), vec![Task::CheckProfile]);
    cfg.profiles = vec!["euclidean".into()];
    execute(&cfg).unwrap();
    let text = read(tmp.path(), "assumptions.csv");
    let a3 = text.lines().find(|l| l.starts_with("A3")).unwrap();
    assert!(a3.contains("false"));
}

#[test]
fn per_cell_failures_are_isolated() {
    // second alpha fails classification (range too short for the slope
    // gate); the first cell's rows must still be written
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path(), vec![Task::Asymptotics]);
    cfg.profiles = vec!["polyexp:2".into()];
    cfg.r_max = 12.0;
    cfg.alphas = vec![0.0, 3.0];
    let err = execute(&cfg).unwrap_err();
    assert!(matches!(err, RunError::Partial { .. }));
    assert_eq!(exit_code(&err), 4);
    let text = read(tmp.path(), "asymptotics.csv");
    assert!(text.lines().count() >= 2, "{text}");
    let manifest = read(tmp.path(), "manifest.txt");
    assert!(manifest.contains("cells.failed=1"));
}

#[test]
fn config_error_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = base_config(tmp.path(), vec![]);
    let err = execute(&cfg).unwrap_err();
    assert_eq!(exit_code(&err), 2);

    let mut cfg = base_config(tmp.path(), vec![Task::Eta]);
    cfg.dimension = 10;
    assert_eq!(exit_code(&execute(&cfg).unwrap_err()), 2);
}

#[test]
fn all_cells_failing_is_a_numerical_error() {
    // one cell, and it cannot satisfy the classification slope gate
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(tmp.path(), vec![Task::Asymptotics]);
    cfg.r_max = 5.0;
    let err = execute(&cfg).unwrap_err();
    assert!(matches!(err, RunError::Numerical(_)), "{err}");
    assert_eq!(exit_code(&err), 3);
}

#[test]
fn config_file_overrides_flags_in_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("exp.ini");
    std::fs::write(
        &cfg_path,
        format!(
            "[experiment]\nprofile = hyperbolic\ndimension = 3\nalphas = 0\nr_max = 5\ntasks = solve\noutput_dir = {}\n",
            tmp.path().join("out").display()
        ),
    )
    .unwrap();
    // the flag says euclidean dimension 7; the config file must win
    let status = Command::new(env!("CARGO_BIN_EXE_gelfand"))
        .args([
            "solve",
            "--profile",
            "euclidean",
            "--dimension",
            "7",
            "--config",
        ])
        .arg(&cfg_path)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(tmp.path().join("out/manifest.txt")).unwrap();
    assert!(manifest.contains("profile.0=hyperbolic"));
    assert!(manifest.contains("dimension=3"));
}

#[test]
fn binary_exit_codes() {
    // bad profile spec: config error, exit 2
    let out = Command::new(env!("CARGO_BIN_EXE_gelfand"))
        .args(["solve", "--profile", "torus", "--output-dir"])
        .arg(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // sweep without tasks: config error
    let out = Command::new(env!("CARGO_BIN_EXE_gelfand"))
        .args(["sweep", "--profile", "hyperbolic", "--output-dir"])
        .arg(tempfile::tempdir().unwrap().path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
