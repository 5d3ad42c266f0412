//! CSV and manifest writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits, `.` decimal
//! point, no grouping), which round-trips every `f64`.

use std::io::{self, Write};

use crate::config::{self, ConfigError};
use crate::experiment::{MonteCarloSummary, SweepRecord};
use crate::sim::{SimConfig, Trajectory};

pub const TRAJECTORY_HEADER: &str =
    "t,q1,q2,qd1,qd2,u1,u2,uref1,uref2,that1,that2,ttil_norm,V,psi0,psi1,stack_size,sigma_min";
pub const SUMMARY_HEADER: &str = "t,ttil_mean,ttil_std,ttil_min,ttil_max";
pub const RUNS_HEADER: &str = "run,seed,final_x_norm,min_psi0,violations";
pub const SWEEP_HEADER: &str = "law,that0_1,that0_2,min_psi0,max_ttil,final_x_norm";

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn at(v: &[f64], i: usize) -> f64 {
    v.get(i).copied().unwrap_or(f64::NAN)
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    for r in &traj.records {
        let x = r.x.as_slice();
        let u = r.u.as_slice();
        let ur = r.u_ref.as_slice();
        let th = r.theta_hat.as_slice();
        let cols = [
            r.t,
            at(x, 0),
            at(x, 1),
            at(x, 2),
            at(x, 3),
            at(u, 0),
            at(u, 1),
            at(ur, 0),
            at(ur, 1),
            at(th, 0),
            at(th, 1),
            r.ttil_norm,
            r.v,
            at(&r.psi, 0),
            at(&r.psi, 1),
        ];
        let mut line = cols.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
        line.push_str(&format!(",{},{}", r.stack_size, fmt_f64(r.sigma_min)));
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut w: W, s: &MonteCarloSummary) -> io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for k in 0..s.times.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(s.times[k]),
            fmt_f64(s.ttil_mean[k]),
            fmt_f64(s.ttil_std[k]),
            fmt_f64(s.ttil_min[k]),
            fmt_f64(s.ttil_max[k])
        )?;
    }
    Ok(())
}

pub fn write_runs_csv<W: Write>(mut w: W, s: &MonteCarloSummary) -> io::Result<()> {
    writeln!(w, "{RUNS_HEADER}")?;
    for r in &s.runs {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.run,
            r.seed,
            fmt_f64(r.final_x_norm),
            fmt_f64(r.min_psi0),
            r.violations
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRecord]) -> io::Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.law,
            fmt_f64(at(&r.theta_hat0, 0)),
            fmt_f64(at(&r.theta_hat0, 1)),
            fmt_f64(r.min_psi0),
            fmt_f64(r.max_ttil),
            fmt_f64(r.final_x_norm)
        )?;
    }
    Ok(())
}

/// Record of one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: SimConfig,
    pub command: String,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub duration_secs: f64,
    /// `ok`, or `aborted` when some output is partial.
    pub status: String,
    pub notes: Vec<String>,
}

const MANIFEST_PREFIX: &str = "manifest.";

impl RunManifest {
    /// The resolved config followed by `manifest.*` metadata lines.
    pub fn to_text(&self) -> String {
        let mut out = config::to_text(&self.config);
        let meta = [
            ("command", self.command.clone()),
            ("tool_version", self.tool_version.clone()),
            ("seed", self.config.seed.to_string()),
            ("outputs", self.outputs.join(", ")),
            ("duration_secs", self.duration_secs.to_string()),
            ("status", self.status.clone()),
        ];
        for (k, v) in meta {
            out.push_str(&format!("{MANIFEST_PREFIX}{k} = {v}\n"));
        }
        for n in &self.notes {
            out.push_str(&format!("{MANIFEST_PREFIX}note = {}\n", n.replace('\n', " ")));
        }
        out
    }

    /// Recover the config snapshot from manifest text.
    pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with(MANIFEST_PREFIX))
            .map(|l| format!("{l}\n"))
            .collect();
        config::parse(&body)
    }
}
