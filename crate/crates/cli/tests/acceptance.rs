//! Acceptance criterion 12: sweep determinism. Reruns with different worker
//! counts must produce byte-identical CSVs; a one-cell sweep must equal the
//! plain experiment run byte for byte.

use gelfand_cli::config::{ExperimentConfig, Task};
use gelfand_cli::runner::{run_experiment, sweep};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

fn csv_snapshot(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        if name.ends_with(".csv") {
            out.insert(name, std::fs::read_to_string(entry.path()).unwrap());
        }
    }
    out
}

#[test]
fn c12_sweep_determinism() {
    let t0 = Instant::now();
    let base = tempfile::tempdir().unwrap();

    let mut snapshots = Vec::new();
    for (i, workers) in [1usize, 8, 1].into_iter().enumerate() {
        let cfg = ExperimentConfig {
            profiles: vec!["hyperbolic".into()],
            dimension: 3,
            alphas: vec![-1.0, 0.5, 2.0],
            r_max: 30.0,
            tol: 1e-10,
            tasks: vec![Task::Stability, Task::Solve],
            output_dir: base.path().join(format!("run{i}")),
            workers,
            ..Default::default()
        };
        sweep(&cfg).unwrap();
        snapshots.push(csv_snapshot(&cfg.output_dir));
    }
    assert!(!snapshots[0].is_empty());
    assert_eq!(snapshots[0], snapshots[1], "workers 1 vs 8 differ");
    assert_eq!(snapshots[0], snapshots[2], "repeated run differs");

    // degenerate grid: a one-cell sweep equals run_experiment byte for byte
    let mut cfg1 = ExperimentConfig {
        profiles: vec!["hyperbolic".into()],
        dimension: 3,
        alphas: vec![0.5],
        r_max: 30.0,
        tol: 1e-10,
        tasks: vec![Task::Stability],
        output_dir: base.path().join("single_run"),
        workers: 1,
        ..Default::default()
    };
    run_experiment(&cfg1).unwrap();
    let run_snap = csv_snapshot(&cfg1.output_dir);
    cfg1.output_dir = base.path().join("single_sweep");
    cfg1.workers = 4;
    sweep(&cfg1).unwrap();
    let sweep_snap = csv_snapshot(&cfg1.output_dir);
    assert_eq!(run_snap, sweep_snap);

    let elapsed = t0.elapsed().as_secs_f64();
    println!("acceptance C12 (sweep determinism): PASS in {elapsed:.2}s (budget 10s)");
    assert!(elapsed < 10.0);
}
