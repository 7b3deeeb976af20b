//! Experiment configuration: CLI flags plus an optional flat key-value
//! config file with a single `[experiment]` section.
//!
//! Config grammar (one `key = value` per line, `#` comments):
//!
//! ```text
//! [experiment]
//! profile    = hyperbolic            # or a comma list for sweeps
//! dimension  = 3
//! alphas     = 0,1,2                 # or a range lo:hi:step
//! r_max      = 50
//! tol        = 1e-10
//! tasks      = solve,stability
//! output_dir = out
//! workers    = 4
//! eta_alpha_lo = -2                  # optional; eta task bracket
//! eta_alpha_hi = 10
//! eta_tol      = 1e-3
//! ```
//!
//! Values from `--config` override command-line flags.

use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Task {
    Solve,
    Asymptotics,
    Stability,
    Eta,
    Intersect,
    Emden,
    CheckProfile,
}

impl Task {
    pub fn parse(s: &str) -> Result<Task, String> {
        match s.trim() {
            "solve" => Ok(Task::Solve),
            "asymptotics" => Ok(Task::Asymptotics),
            "stability" => Ok(Task::Stability),
            "eta" => Ok(Task::Eta),
            "intersect" => Ok(Task::Intersect),
            "emden" => Ok(Task::Emden),
            "check-profile" => Ok(Task::CheckProfile),
            other => Err(format!("unknown task `{other}`")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Asymptotics => "asymptotics",
            Task::Stability => "stability",
            Task::Eta => "eta",
            Task::Intersect => "intersect",
            Task::Emden => "emden",
            Task::CheckProfile => "check-profile",
        }
    }

    /// Tasks that run once per (profile, alpha) cell.
    pub fn per_alpha(&self) -> bool {
        matches!(
            self,
            Task::Solve | Task::Asymptotics | Task::Stability | Task::Emden
        )
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub profiles: Vec<String>,
    pub dimension: usize,
    pub alphas: Vec<f64>,
    pub r_max: f64,
    pub tol: f64,
    pub tasks: Vec<Task>,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub eta_alpha_lo: Option<f64>,
    pub eta_alpha_hi: Option<f64>,
    pub eta_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let out = std::env::var("GELFAND_OUTPUT_DIR").unwrap_or_else(|_| "gelfand-out".into());
        ExperimentConfig {
            profiles: vec!["hyperbolic".into()],
            dimension: 3,
            alphas: vec![0.0],
            r_max: 50.0,
            tol: 1e-10,
            tasks: Vec::new(),
            output_dir: PathBuf::from(out),
            workers: 1,
            eta_alpha_lo: None,
            eta_alpha_hi: None,
            eta_tol: 1e-3,
        }
    }
}

/// Parse `a,b,c` or `lo:hi:step` (inclusive) into a list of heights.
pub fn parse_alphas(s: &str) -> Result<Vec<f64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty alphas".into());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("range must be lo:hi:step, got `{s}`"));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| "bad range lo")?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| "bad range hi")?;
        let step: f64 = parts[2].trim().parse().map_err(|_| "bad range step")?;
        if !(step > 0.0) || hi < lo {
            return Err(format!("range needs hi >= lo and step > 0, got `{s}`"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| lo + step * i as f64).collect());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad alpha `{p}`"))
        })
        .collect()
}

pub fn parse_tasks(s: &str) -> Result<Vec<Task>, String> {
    let mut tasks: Vec<Task> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(Task::parse)
        .collect::<Result<_, _>>()?;
    tasks.sort();
    tasks.dedup();
    Ok(tasks)
}

/// Apply a config file on top of an existing configuration.
pub fn apply_config_file(cfg: &mut ExperimentConfig, text: &str) -> Result<(), String> {
    let mut in_section = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(format!(
                "line {}: malformed section header `{raw}`",
                lineno + 1
            ))?;
            if name.trim() != "experiment" {
                return Err(format!("line {}: unknown section `{name}`", lineno + 1));
            }
            in_section = true;
            continue;
        }
        if !in_section {
            return Err(format!(
                "line {}: key outside the [experiment] section",
                lineno + 1
            ));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| format!("line {}: bad {what} `{value}`", lineno + 1);
        match key {
            "profile" => {
                cfg.profiles = value.split(',').map(|p| p.trim().to_string()).collect();
            }
            "dimension" => cfg.dimension = value.parse().map_err(|_| bad("dimension"))?,
            "alphas" => cfg.alphas = parse_alphas(value)?,
            "r_max" => cfg.r_max = value.parse().map_err(|_| bad("r_max"))?,
            "tol" => cfg.tol = value.parse().map_err(|_| bad("tol"))?,
            "tasks" => cfg.tasks = parse_tasks(value)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            "workers" => cfg.workers = value.parse().map_err(|_| bad("workers"))?,
            "eta_alpha_lo" => {
                cfg.eta_alpha_lo = Some(value.parse().map_err(|_| bad("eta_alpha_lo"))?)
            }
            "eta_alpha_hi" => {
                cfg.eta_alpha_hi = Some(value.parse().map_err(|_| bad("eta_alpha_hi"))?)
            }
            "eta_tol" => cfg.eta_tol = value.parse().map_err(|_| bad("eta_tol"))?,
            other => return Err(format!("line {}: unknown key `{other}`", lineno + 1)),
        }
    }
    Ok(())
}

impl ExperimentConfig {
    /// Structural validation shared by run and sweep.
    pub fn validate(&self) -> Result<(), String> {
        if self.tasks.is_empty() {
            return Err("no tasks selected".into());
        }
        if self.profiles.is_empty() {
            return Err("no profiles".into());
        }
        for p in &self.profiles {
            gelfand_models::WarpProfile::parse(p).map_err(|e| e.to_string())?;
        }
        if self.alphas.is_empty() && self.tasks.iter().any(|t| t.per_alpha()) {
            return Err("alphas must be nonempty for solution-level tasks".into());
        }
        if self.dimension < 2 {
            return Err(format!("dimension {} < 2", self.dimension));
        }
        if self.tasks.contains(&Task::Eta) && !(2..=9).contains(&self.dimension) {
            return Err(format!(
                "eta task requires 2 <= N <= 9, got {}",
                self.dimension
            ));
        }
        if self.tasks.contains(&Task::Emden) && self.dimension < 3 {
            return Err("emden task requires N >= 3".into());
        }
        if self.tasks.contains(&Task::Intersect) && self.alphas.len() < 2 {
            return Err("intersect task needs at least two alphas".into());
        }
        if self.workers == 0 {
            return Err("workers must be positive".into());
        }
        if !(self.r_max > 0.0) || !(self.tol > 0.0) {
            return Err("r_max and tol must be positive".into());
        }
        let cells = self.profiles.len() * self.alphas.len().max(1);
        if cells > 10_000 {
            return Err(format!("grid too large: {cells} cells (cap 10000)"));
        }
        Ok(())
    }
}
