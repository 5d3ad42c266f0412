//! Drivers for the `simulate`, `montecarlo` and `sweep` commands.
//!
//! Each driver resolves the configuration, runs the experiment, writes its
//! CSV files and a `manifest.txt` into the output directory, and reports
//! failures through [`CommandError::exit_code`].

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use thiserror::Error;

use crate::config::{self, ConfigError};
use crate::estimation::GainLaw;
use crate::experiment::{monte_carlo, uncertainty_sweep, SweepRecord};
use crate::monitor::{issf_report, ISSF_TOL};
use crate::output::{self, RunManifest};
use crate::sim::{simulate, ClosedLoop, SimConfig};

#[derive(Debug, Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("simulation aborted: {0}")]
    Simulation(String),

    #[error("acceptance monitor failed: {0}")]
    Monitor(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Simulation(_) => 3,
            Self::Monitor(_) => 4,
            Self::Io { .. } => 1,
        }
    }
}

/// Options shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub config_path: Option<PathBuf>,
    /// `--set key=value`, applied in order after the config file.
    pub overrides: Vec<(String, String)>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub laws: Option<Vec<GainLaw>>,
    pub strict: bool,
}

#[derive(Debug, Clone)]
pub struct CommandReport {
    pub outputs: Vec<PathBuf>,
    pub manifest: RunManifest,
}

pub fn resolve_config(opts: &CommandOptions) -> Result<SimConfig, ConfigError> {
    let mut overrides = opts.overrides.clone();
    if let Some(seed) = opts.seed {
        overrides.push(("sim.seed".into(), seed.to_string()));
    }
    if let Some(runs) = opts.runs {
        overrides.push(("sim.runs".into(), runs.to_string()));
    }
    if let Some(laws) = &opts.laws {
        let joined = laws.iter().map(GainLaw::as_str).collect::<Vec<_>>().join(",");
        overrides.push(("sim.laws".into(), joined));
    }
    match &opts.config_path {
        Some(path) => config::load(path, &overrides),
        None => config::parse_with_overrides("", &overrides),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CommandError + '_ {
    move |source| CommandError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file<F>(path: &Path, body: F) -> Result<(), CommandError>
where
    F: FnOnce(BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(io_err(path))?;
    body(BufWriter::new(file)).map_err(io_err(path))
}

struct Session {
    started: Instant,
    out_dir: PathBuf,
    outputs: Vec<PathBuf>,
}

impl Session {
    fn start(out_dir: &Path) -> Result<Self, CommandError> {
        fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
        Ok(Self {
            started: Instant::now(),
            out_dir: out_dir.to_owned(),
            outputs: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<(), CommandError>
    where
        F: FnOnce(BufWriter<File>) -> std::io::Result<()>,
    {
        let path = self.out_dir.join(name);
        write_file(&path, body)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(self, command: &str, config: SimConfig, status: &str, notes: Vec<String>) -> Result<CommandReport, CommandError> {
        let manifest = RunManifest {
            config,
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            outputs: self
                .outputs
                .iter()
                .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .collect(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            status: status.to_owned(),
            notes,
        };
        let path = self.out_dir.join("manifest.txt");
        let text = manifest.to_text();
        write_file(&path, |mut w| std::io::Write::write_all(&mut w, text.as_bytes()))?;
        let mut outputs = self.outputs;
        outputs.push(path);
        Ok(CommandReport { outputs, manifest })
    }
}

/// Single run from `sim.x0`, `sim.theta_hat0`; writes `trajectory.csv`.
pub fn cmd_simulate(opts: &CommandOptions) -> Result<CommandReport, CommandError> {
    let config = resolve_config(opts)?;
    let mut session = Session::start(&opts.out_dir)?;
    let x0 = DVector::from_column_slice(&config.x0);
    let th0 = DVector::from_column_slice(&config.theta_hat0);
    let (traj, abort) = match simulate(&config, &x0, &th0) {
        Ok(t) => (t, None),
        Err(a) => {
            let msg = a.to_string();
            (a.partial, Some(msg))
        }
    };
    session.write("trajectory.csv", |w| output::write_trajectory_csv(w, &traj))?;

    if let Some(msg) = abort {
        let notes = vec![format!("partial trajectory: {msg}")];
        session.finish("simulate", config, "aborted", notes)?;
        return Err(CommandError::Simulation(msg));
    }

    let plant = ClosedLoop::from_config(&config, &Default::default())
        .map_err(|e| CommandError::Simulation(e.to_string()))?;
    let mut notes = Vec::new();
    let mut monitor_failure = None;
    if let Some(barrier) = &plant.barrier {
        let report = issf_report(&traj, barrier, ISSF_TOL).map_err(|e| CommandError::Simulation(e.to_string()))?;
        notes.push(format!(
            "issf delta = {}, min margin = {}, violations = {}",
            report.delta, report.min_margin, report.violations
        ));
        if !report.holds() {
            monitor_failure = Some(format!("{} records outside the inflated safe set", report.violations));
        }
    }
    let report = session.finish("simulate", config, "ok", notes)?;
    match monitor_failure {
        Some(msg) if opts.strict => Err(CommandError::Monitor(msg)),
        _ => Ok(report),
    }
}

/// Batch over sampled initial conditions; writes `summary_<law>.csv` and
/// `runs_<law>.csv` for each law.
pub fn cmd_montecarlo(opts: &CommandOptions) -> Result<CommandReport, CommandError> {
    let config = resolve_config(opts)?;
    let mut session = Session::start(&opts.out_dir)?;
    let batches = monte_carlo(&config, false).map_err(|e| CommandError::Simulation(e.to_string()))?;
    let mut notes = Vec::new();
    let mut aborted = 0;
    let mut violating = 0;
    for b in &batches {
        let s = &b.summary;
        session.write(&format!("summary_{}.csv", s.law), |w| output::write_summary_csv(w, s))?;
        session.write(&format!("runs_{}.csv", s.law), |w| output::write_runs_csv(w, s))?;
        for r in &s.runs {
            if let Some(e) = &r.error {
                aborted += 1;
                notes.push(format!("{} run {}: {e}", s.law, r.run));
            }
            if r.violations > 0 {
                violating += 1;
            }
        }
    }
    let status = if aborted > 0 { "aborted" } else { "ok" };
    let report = session.finish("montecarlo", config, status, notes)?;
    if aborted > 0 {
        return Err(CommandError::Simulation(format!("{aborted} run(s) aborted")));
    }
    if opts.strict && violating > 0 {
        return Err(CommandError::Monitor(format!("{violating} run(s) left the inflated safe set")));
    }
    Ok(report)
}

/// `true` if for some initial estimate the GD run's `min ψ0` is strictly
/// below the RLS-with-forgetting run's.
pub fn gd_less_safe_somewhere(rows: &[SweepRecord]) -> bool {
    rows.iter().filter(|r| r.law == GainLaw::Gd).any(|gd| {
        rows.iter()
            .filter(|r| r.law == GainLaw::RlsForget && r.theta_hat0 == gd.theta_hat0)
            .any(|ls| gd.min_psi0 < ls.min_psi0)
    })
}

/// One run per `(sweep.theta_hat0, sweep.laws)` pair; writes `sweep.csv`.
/// `--laws` replaces `sweep.laws` here.
pub fn cmd_sweep(opts: &CommandOptions) -> Result<CommandReport, CommandError> {
    let mut config = resolve_config(opts)?;
    if let Some(laws) = &opts.laws {
        config.sweep.laws = laws.clone();
    }
    let mut session = Session::start(&opts.out_dir)?;
    let rows = uncertainty_sweep(&config, &config.sweep.theta_hat0, &config.sweep.laws)
        .map_err(|e| CommandError::Simulation(e.to_string()))?;
    session.write("sweep.csv", |w| output::write_sweep_csv(w, &rows))?;
    let notes: Vec<String> = rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("{} {:?}: {e}", r.law, r.theta_hat0)))
        .collect();
    let aborted = !notes.is_empty();
    let ordering = gd_less_safe_somewhere(&rows);
    let report = session.finish("sweep", config, if aborted { "aborted" } else { "ok" }, notes)?;
    if aborted {
        return Err(CommandError::Simulation("sweep run(s) aborted".into()));
    }
    if opts.strict && !ordering {
        return Err(CommandError::Monitor(
            "no initial estimate where gradient descent comes closer to the obstacle than RLS with forgetting".into(),
        ));
    }
    Ok(report)
}
