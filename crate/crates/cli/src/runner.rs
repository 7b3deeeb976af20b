//! Experiment execution: grid cells, a bounded worker pool, deterministic
//! aggregation and CSV/manifest output.
//!
//! A run is split into cells: one per (profile, alpha) for solution-level
//! tasks, one per profile for eta/intersect/check-profile. Cells are pure
//! and independent; they execute on a rayon pool bounded by `workers`, and
//! the aggregator writes rows sorted by grid index, so outputs are
//! byte-identical regardless of worker count or completion order. Cell
//! failures are isolated: healthy rows are still written and the manifest
//! lists what failed.

use crate::config::{ExperimentConfig, Task};
use gelfand_models::asymptotics::{self, LimitKind};
use gelfand_models::emden;
use gelfand_models::intersections::find_intersections;
use gelfand_models::manifold::{check_assumptions, geometric_grid};
use gelfand_models::solver::{fmt_g17, integrate_ivp, integrate_linearized, RadialSolution};
use gelfand_models::stability::{
    attach_sturm_cross_check, lambda1_extrapolated, stability_test_on, threshold_eta, Decision,
};
use gelfand_models::WarpProfile;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Partial { failed: Vec<String> },
    Io(std::io::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical error: {m}"),
            RunError::Partial { failed } => {
                write!(
                    f,
                    "partial failure ({} cells): {}",
                    failed.len(),
                    failed.join("; ")
                )
            }
            RunError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// Process exit code for an error: 2 config, 3 numerical, 4 partial.
pub fn exit_code(err: &RunError) -> i32 {
    match err {
        RunError::Config(_) => 2,
        RunError::Numerical(_) | RunError::Io(_) => 3,
        RunError::Partial { .. } => 4,
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub failed_cells: Vec<String>,
    pub manifest_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum CellSpec {
    PerAlpha { pi: usize, ai: usize },
    PerProfile { pi: usize },
}

impl CellSpec {
    fn label(&self, cfg: &ExperimentConfig) -> String {
        match self {
            CellSpec::PerAlpha { pi, ai } => {
                format!("{}[alpha={}]", cfg.profiles[*pi], cfg.alphas[*ai])
            }
            CellSpec::PerProfile { pi } => cfg.profiles[*pi].clone(),
        }
    }
}

#[derive(Debug, Default)]
struct CellOutput {
    /// Whole files owned by this cell (trajectories, phase traces).
    files: Vec<(String, String)>,
    /// Rows destined for shared CSVs, keyed by file name.
    rows: Vec<(String, Vec<String>)>,
    /// Informational lines for the manifest.
    notes: Vec<String>,
}

fn csv_header(name: &str) -> &'static str {
    if name.starts_with("stability") {
        "alpha,decision,r_star_or_rmax,Lambda_R,certificate"
    } else if name.starts_with("asymptotics") {
        "alpha,limit_kind,limit_value,r,ratio,rate,rate_logr"
    } else if name.starts_with("eta") {
        "eta_hat,tol,alpha_lo,alpha_hi,log_lambda1_hat"
    } else if name.starts_with("intersections_summary") {
        "alpha,beta,count,min_difference"
    } else if name.starts_with("intersections") {
        "alpha,beta,k,crossing_r"
    } else if name.starts_with("assumptions") {
        "assumption,pass,first_violation_r"
    } else {
        unreachable!("no header for {name}")
    }
}

/// Shared-CSV file name; profile-suffixed when the run spans several profiles.
fn csv_name(base: &str, pi: usize, multi: bool) -> String {
    if multi {
        format!("{base}_p{pi}.csv")
    } else {
        format!("{base}.csv")
    }
}

fn run_cell(cfg: &ExperimentConfig, spec: CellSpec) -> Result<CellOutput, String> {
    let started = Instant::now();
    let mut out = match spec {
        CellSpec::PerAlpha { pi, ai } => run_alpha_cell(cfg, pi, ai),
        CellSpec::PerProfile { pi } => run_profile_cell(cfg, pi),
    }?;
    out.notes.push(format!(
        "cell.{}.wall_ms={}",
        spec.label(cfg),
        started.elapsed().as_millis()
    ));
    Ok(out)
}

fn run_alpha_cell(cfg: &ExperimentConfig, pi: usize, ai: usize) -> Result<CellOutput, String> {
    let profile = WarpProfile::parse(&cfg.profiles[pi]).map_err(|e| e.to_string())?;
    let alpha = cfg.alphas[ai];
    let multi = cfg.profiles.len() > 1;
    let mut out = CellOutput::default();

    let need_base = cfg
        .tasks
        .iter()
        .any(|t| matches!(t, Task::Solve | Task::Asymptotics | Task::Emden));
    let base: Option<RadialSolution> = if need_base {
        Some(
            integrate_ivp(&profile, cfg.dimension, alpha, cfg.r_max, cfg.tol)
                .map_err(|e| e.to_string())?,
        )
    } else {
        None
    };

    for task in &cfg.tasks {
        match task {
            Task::Solve => {
                let sol = base.as_ref().unwrap();
                let mut buf = Vec::new();
                sol.write_csv(&mut buf, None).map_err(|e| e.to_string())?;
                out.files.push((
                    format!("trajectory_p{pi}_a{ai}.csv"),
                    String::from_utf8(buf).expect("csv is utf8"),
                ));
            }
            Task::Asymptotics => {
                let sol = base.as_ref().unwrap();
                let rep = asymptotics::classify_limit(sol, &profile).map_err(|e| e.to_string())?;
                if let Some(x) = rep.extrapolated_log_rate {
                    out.notes.push(format!(
                        "asymptotics.{}.alpha={}.extrapolated_log_rate={x:.6} (heuristic)",
                        cfg.profiles[pi], alpha
                    ));
                }
                let mut rows = Vec::new();
                match rep.limit_kind {
                    LimitKind::FiniteLimit => rows.push(format!(
                        "{},finite,{},,,,",
                        fmt_g17(alpha),
                        fmt_g17(rep.limit_value.unwrap())
                    )),
                    LimitKind::LogDivergence => {
                        let logr: BTreeMap<u64, f64> = rep
                            .log_rate_logr_tail
                            .iter()
                            .map(|&(r, v)| (r.to_bits(), v))
                            .collect();
                        let rates: BTreeMap<u64, f64> = rep
                            .log_rate_tail
                            .iter()
                            .map(|&(r, v)| (r.to_bits(), v))
                            .collect();
                        for &(r, ratio) in &rep.decay_ratio_tail {
                            let rate = rates
                                .get(&r.to_bits())
                                .map(|v| fmt_g17(*v))
                                .unwrap_or_default();
                            let rlogr = logr
                                .get(&r.to_bits())
                                .map(|v| fmt_g17(*v))
                                .unwrap_or_default();
                            rows.push(format!(
                                "{},log_divergence,,{},{},{},{}",
                                fmt_g17(alpha),
                                fmt_g17(r),
                                fmt_g17(ratio),
                                rate,
                                rlogr
                            ));
                        }
                    }
                }
                out.rows.push((csv_name("asymptotics", pi, multi), rows));
            }
            Task::Stability => {
                let verdict = stability_row(cfg, &profile, alpha)?;
                out.rows
                    .push((csv_name("stability", pi, multi), vec![verdict]));
            }
            Task::Emden => {
                let sol = base.as_ref().unwrap();
                let start = emden::phase_start_from_solution(sol, &profile, cfg.dimension, 1.0)
                    .map_err(|e| e.to_string())?;
                let traj = emden::integrate_autonomous(cfg.dimension, start, 40.0, cfg.tol)
                    .map_err(|e| e.to_string())?;
                let angles = emden::cumulative_angle(&traj);
                let mut text = String::from("t,y,z,angle_cum\n");
                for (p, a) in traj.iter().zip(angles.iter()) {
                    let _ = writeln!(
                        text,
                        "{},{},{},{}",
                        fmt_g17(p.t),
                        fmt_g17(p.y),
                        fmt_g17(p.z),
                        fmt_g17(*a)
                    );
                }
                out.files.push((format!("phase_p{pi}_a{ai}.csv"), text));
            }
            _ => {}
        }
    }
    Ok(out)
}

fn stability_row(
    cfg: &ExperimentConfig,
    profile: &WarpProfile,
    alpha: f64,
) -> Result<String, String> {
    let base = integrate_ivp(profile, cfg.dimension, alpha, cfg.r_max, cfg.tol)
        .map_err(|e| e.to_string())?;
    let lin = integrate_linearized(&base, cfg.tol).map_err(|e| e.to_string())?;
    let mut verdict = stability_test_on(profile, &base, cfg.tol).map_err(|e| e.to_string())?;
    // the weighted eigenvalue cross-check is affordable for moderate ranges
    if !profile.is_euclidean() && cfg.r_max <= 200.0 {
        attach_sturm_cross_check(&mut verdict, profile, &base, &lin, cfg.r_max, 1e-8)
            .map_err(|e| e.to_string())?;
        if verdict.method_agreement == Some(false) {
            let (_, lam) = verdict.weighted_eig.unwrap();
            return Err(format!(
                "Sturm disagreement at alpha = {alpha}: Lambda = {lam} vs {:?}",
                verdict.decision
            ));
        }
    }
    let (decision, r_field) = match verdict.decision {
        Decision::UnstableAt { r_star } => ("unstable", r_star),
        Decision::StableUpTo { r_max } => ("stable", r_max),
    };
    let lambda_field = verdict
        .weighted_eig
        .map(|(_, lam)| fmt_g17(lam))
        .unwrap_or_default();
    let cert_field = verdict.certificate.map(fmt_g17).unwrap_or_default();
    Ok(format!(
        "{},{decision},{},{lambda_field},{cert_field}",
        fmt_g17(alpha),
        fmt_g17(r_field)
    ))
}

fn run_profile_cell(cfg: &ExperimentConfig, pi: usize) -> Result<CellOutput, String> {
    let profile = WarpProfile::parse(&cfg.profiles[pi]).map_err(|e| e.to_string())?;
    let multi = cfg.profiles.len() > 1;
    let mut out = CellOutput::default();

    for task in &cfg.tasks {
        match task {
            Task::CheckProfile => {
                let grid = geometric_grid(0.05, cfg.r_max.max(1.0), 200);
                let rep = check_assumptions(&profile, &grid);
                let rows = rep
                    .checks
                    .iter()
                    .map(|c| {
                        format!(
                            "{},{},{}",
                            c.name,
                            c.pass,
                            c.first_violation_r.map(fmt_g17).unwrap_or_default()
                        )
                    })
                    .collect();
                out.rows.push((csv_name("assumptions", pi, multi), rows));
            }
            Task::Eta => {
                let radii = [0.2 * cfg.r_max, 0.4 * cfg.r_max, 0.8 * cfg.r_max];
                let est = lambda1_extrapolated(&profile, cfg.dimension, &radii, 1e-8)
                    .map_err(|e| e.to_string())?;
                let log_l1 = est.value.ln();
                let lo = cfg.eta_alpha_lo.unwrap_or(log_l1 - 2.0);
                let hi = cfg.eta_alpha_hi.unwrap_or(10.0);
                let rep = threshold_eta(&profile, cfg.dimension, lo, hi, cfg.r_max, cfg.eta_tol)
                    .map_err(|e| e.to_string())?;
                out.rows.push((
                    csv_name("eta", pi, multi),
                    vec![format!(
                        "{},{},{},{},{}",
                        fmt_g17(rep.eta_hat),
                        fmt_g17(rep.tol_alpha),
                        fmt_g17(rep.alpha_lo),
                        fmt_g17(rep.alpha_hi),
                        fmt_g17(log_l1)
                    )],
                ));
                // threshold dependence on the range: recompute at 2 r_max
                let rep2 = threshold_eta(
                    &profile,
                    cfg.dimension,
                    lo,
                    hi,
                    2.0 * cfg.r_max,
                    cfg.eta_tol,
                )
                .map_err(|e| e.to_string())?;
                out.notes.push(format!(
                    "eta.{}.r_max={} eta_hat={:.6} eta_hat_2rmax={:.6} gap={:.2e}",
                    cfg.profiles[pi],
                    cfg.r_max,
                    rep.eta_hat,
                    rep2.eta_hat,
                    (rep.eta_hat - rep2.eta_hat).abs()
                ));
            }
            Task::Intersect => {
                let mut sols = Vec::new();
                for &alpha in &cfg.alphas {
                    sols.push(
                        integrate_ivp(&profile, cfg.dimension, alpha, cfg.r_max, cfg.tol)
                            .map_err(|e| e.to_string())?,
                    );
                }
                let mut rows = Vec::new();
                let mut summary = Vec::new();
                for i in 0..sols.len() {
                    for j in (i + 1)..sols.len() {
                        let rep = find_intersections(&sols[i], &sols[j], cfg.r_max)
                            .map_err(|e| e.to_string())?;
                        for (k, z) in rep.crossings.iter().enumerate() {
                            rows.push(format!(
                                "{},{},{},{}",
                                fmt_g17(rep.alpha),
                                fmt_g17(rep.beta),
                                k,
                                fmt_g17(*z)
                            ));
                        }
                        summary.push(format!(
                            "{},{},{},{}",
                            fmt_g17(rep.alpha),
                            fmt_g17(rep.beta),
                            rep.count(),
                            fmt_g17(rep.min_difference)
                        ));
                    }
                }
                out.rows.push((csv_name("intersections", pi, multi), rows));
                out.rows
                    .push((csv_name("intersections_summary", pi, multi), summary));
            }
            _ => {}
        }
    }
    Ok(out)
}

/// Execute a validated configuration: build the cell list, run it on a pool
/// of `workers` threads, aggregate deterministically, write files and the
/// manifest.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    cfg.validate().map_err(RunError::Config)?;
    let started = Instant::now();

    let mut cells = Vec::new();
    let per_alpha = cfg.tasks.iter().any(|t| t.per_alpha());
    let per_profile = cfg.tasks.iter().any(|t| !t.per_alpha());
    for pi in 0..cfg.profiles.len() {
        if per_alpha {
            for ai in 0..cfg.alphas.len() {
                cells.push(CellSpec::PerAlpha { pi, ai });
            }
        }
        if per_profile {
            cells.push(CellSpec::PerProfile { pi });
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let results: Vec<Result<CellOutput, String>> =
        pool.install(|| cells.par_iter().map(|spec| run_cell(cfg, *spec)).collect());

    // deterministic aggregation in cell order
    let mut csv_rows: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut whole_files: Vec<(String, String)> = Vec::new();
    let mut notes = Vec::new();
    let mut failed = Vec::new();
    for (spec, res) in cells.iter().zip(results) {
        match res {
            Ok(cell) => {
                for (name, rows) in cell.rows {
                    csv_rows.entry(name).or_default().extend(rows);
                }
                whole_files.extend(cell.files);
                notes.extend(cell.notes);
            }
            Err(msg) => failed.push(format!("{}: {msg}", spec.label(cfg))),
        }
    }

    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut files = Vec::new();
    for (name, rows) in &csv_rows {
        let mut text = String::with_capacity(rows.len() * 64);
        text.push_str(csv_header(name));
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        std::fs::write(cfg.output_dir.join(name), text)?;
        files.push(name.clone());
    }
    for (name, content) in &whole_files {
        std::fs::write(cfg.output_dir.join(name), content)?;
        files.push(name.clone());
    }
    files.sort();

    let manifest_path = cfg.output_dir.join("manifest.txt");
    let mut m = String::new();
    let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
    for (pi, p) in cfg.profiles.iter().enumerate() {
        let _ = writeln!(m, "profile.{pi}={p}");
    }
    let _ = writeln!(m, "dimension={}", cfg.dimension);
    let _ = writeln!(
        m,
        "alphas={}",
        cfg.alphas
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(m, "r_max={}", cfg.r_max);
    let _ = writeln!(m, "tol={:e}", cfg.tol);
    let _ = writeln!(
        m,
        "tasks={}",
        cfg.tasks
            .iter()
            .map(|t| t.name())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(m, "workers={}", cfg.workers);
    let _ = writeln!(m, "cells.total={}", cells.len());
    let _ = writeln!(m, "cells.failed={}", failed.len());
    for f in &failed {
        let _ = writeln!(m, "failed={f}");
    }
    for n in &notes {
        let _ = writeln!(m, "{n}");
    }
    for f in &files {
        let _ = writeln!(m, "output={f}");
    }
    let _ = writeln!(m, "wall_ms={}", started.elapsed().as_millis());
    std::fs::write(&manifest_path, m)?;

    if !failed.is_empty() {
        if failed.len() == cells.len() {
            return Err(RunError::Numerical(failed.join("; ")));
        }
        return Err(RunError::Partial { failed });
    }
    Ok(RunSummary {
        output_dir: cfg.output_dir.clone(),
        files,
        failed_cells: failed,
        manifest_path,
    })
}

/// Run a configuration as a single experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    execute(cfg)
}

/// Run a configuration as a grid sweep. Identical engine and outputs;
/// the grid-size cap is enforced by validation.
pub fn sweep(cfg: &ExperimentConfig) -> Result<RunSummary, RunError> {
    execute(cfg)
}
