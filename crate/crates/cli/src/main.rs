//! `gelfand`: experiment runner for radial Gelfand-type problems on warped
//! model manifolds. See `gelfand --help` and the repository README for the
//! config grammar.

use clap::{Args, Parser, Subcommand};
use gelfand_cli::config::{apply_config_file, parse_alphas, parse_tasks, ExperimentConfig, Task};
use gelfand_cli::runner::{execute, exit_code};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "gelfand",
    version,
    about = "Radial solutions of -Δu = e^u on Riemannian models: solve, classify, cross-validate"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Profile spec: `euclidean | hyperbolic | polyexp:<gamma> | spliced:<a>:<r0>`
    /// (comma list allowed for sweeps)
    #[arg(long)]
    profile: Option<String>,
    /// Dimension N >= 2
    #[arg(long)]
    dimension: Option<usize>,
    /// Initial heights: comma list `0,1,2` or range `lo:hi:step`
    #[arg(long)]
    alphas: Option<String>,
    /// Integration range
    #[arg(long)]
    r_max: Option<f64>,
    /// Integration tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory (default $GELFAND_OUTPUT_DIR or ./gelfand-out)
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads for grid cells
    #[arg(long)]
    workers: Option<usize>,
    /// Lower end of the eta bisection bracket (default: log(lambda1) - 2)
    #[arg(long)]
    eta_alpha_lo: Option<f64>,
    /// Upper end of the eta bisection bracket (default: 10)
    #[arg(long)]
    eta_alpha_hi: Option<f64>,
    /// Bisection width for eta
    #[arg(long)]
    eta_tol: Option<f64>,
    /// Config file; its values override the flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the radial IVP and dump trajectories
    Solve(CommonArgs),
    /// Classify the limit at infinity and report tail rates
    Asymptotics(CommonArgs),
    /// Decide stability per initial height
    Stability(CommonArgs),
    /// Locate the stability threshold by bisection (2 <= N <= 9)
    Eta(CommonArgs),
    /// Count intersections between solution pairs
    Intersect(CommonArgs),
    /// Phase-plane trace of the autonomous system
    Emden(CommonArgs),
    /// Verify the structural assumptions of a profile
    CheckProfile(CommonArgs),
    /// Run the configured task list over a (profile x alpha) grid
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma list of tasks to run per grid cell
    #[arg(long)]
    tasks: Option<String>,
}

fn build_config(common: &CommonArgs, tasks: Vec<Task>) -> Result<ExperimentConfig, String> {
    let mut cfg = ExperimentConfig {
        tasks,
        ..Default::default()
    };
    if let Some(p) = &common.profile {
        cfg.profiles = p.split(',').map(|s| s.trim().to_string()).collect();
    }
    if let Some(n) = common.dimension {
        cfg.dimension = n;
    }
    if let Some(a) = &common.alphas {
        cfg.alphas = parse_alphas(a)?;
    }
    if let Some(r) = common.r_max {
        cfg.r_max = r;
    }
    if let Some(t) = common.tol {
        cfg.tol = t;
    }
    if let Some(o) = &common.output_dir {
        cfg.output_dir = o.clone();
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    cfg.eta_alpha_lo = common.eta_alpha_lo.or(cfg.eta_alpha_lo);
    cfg.eta_alpha_hi = common.eta_alpha_hi.or(cfg.eta_alpha_hi);
    if let Some(t) = common.eta_tol {
        cfg.eta_tol = t;
    }
    // the config file overrides flags
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        apply_config_file(&mut cfg, &text)?;
    }
    Ok(cfg)
}

fn main() {
    let cli = Cli::parse();
    let built = match &cli.cmd {
        Cmd::Solve(c) => build_config(c, vec![Task::Solve]),
        Cmd::Asymptotics(c) => build_config(c, vec![Task::Asymptotics]),
        Cmd::Stability(c) => build_config(c, vec![Task::Stability]),
        Cmd::Eta(c) => build_config(c, vec![Task::Eta]),
        Cmd::Intersect(c) => build_config(c, vec![Task::Intersect]),
        Cmd::Emden(c) => build_config(c, vec![Task::Emden]),
        Cmd::CheckProfile(c) => build_config(c, vec![Task::CheckProfile]),
        Cmd::Sweep(s) => {
            let tasks = match &s.tasks {
                Some(t) => parse_tasks(t),
                None => Ok(Vec::new()),
            };
            tasks.and_then(|t| build_config(&s.common, t))
        }
    };
    let cfg = match built {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error: {msg}");
            std::process::exit(2);
        }
    };
    match execute(&cfg) {
        Ok(summary) => {
            println!(
                "wrote {} file(s) to {}",
                summary.files.len(),
                summary.output_dir.display()
            );
        }
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(exit_code(&err));
        }
    }
}
