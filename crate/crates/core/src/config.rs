//! Plain-text experiment configuration.
//!
//! One `key = value` assignment per line with dotted section keys; `#`
//! starts a comment. Values are numbers, booleans (`true`/`false`), bare
//! words, comma-separated number lists (`-2, 2, 0, 0`), comma-separated
//! word lists (`gd, rls`) or `;`-separated groups of number lists
//! (`0, 0; 3, 3`). Keys not listed in [`KEYS`] are rejected, except that
//! `manifest.*` lines are skipped so a run manifest loads as a config.
//! Unset keys keep the values of [`SimConfig::default`].
//!
//! ```text
//! estimator.law = rls_forget
//! estimator.N = 20
//! cbf.obstacle_center = -1, 1
//! sweep.theta_hat0 = 0.8, 1.4; 3, 3
//! ```

use std::path::Path;

use thiserror::Error;

use crate::estimation::GainLaw;
use crate::sim::SimConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue {
        key: String,
        value: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Every accepted key, in the order [`to_text`] writes them.
pub const KEYS: &[&str] = &[
    "system.name",
    "system.theta",
    "sim.dt",
    "sim.horizon",
    "sim.seed",
    "sim.runs",
    "sim.laws",
    "sim.x0",
    "sim.theta_hat0",
    "estimator.law",
    "estimator.enabled",
    "estimator.N",
    "estimator.gamma0",
    "estimator.beta",
    "estimator.gamma_bar",
    "estimator.window_dt",
    "clf.c3",
    "clf.eps_v",
    "cbf.enabled",
    "cbf.eps_h",
    "cbf.alpha1_lambda",
    "cbf.alpha2_lambda",
    "cbf.obstacle_center",
    "cbf.obstacle_radius",
    "cbf.margin",
    "sample.x_lo",
    "sample.x_hi",
    "sample.theta_hat_lo",
    "sample.theta_hat_hi",
    "sweep.laws",
    "sweep.theta_hat0",
];

/// Split text into `(line, key, value)` assignments.
pub fn parse_assignments(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_owned(),
            });
        };
        let key = k.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_owned(),
            });
        }
        out.push((i + 1, key.to_owned(), v.trim().to_owned()));
    }
    Ok(out)
}

fn bad(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_owned(),
        value: value.to_owned(),
        reason: reason.into(),
    }
}

fn num(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .map_err(|e| bad(key, value, e.to_string()))
}

fn uint<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e.to_string()))
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(bad(key, value, "expected true or false")),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|s| num(key, s.trim())).collect()
}

fn pair(key: &str, value: &str) -> Result<[f64; 2], ConfigError> {
    let v = list(key, value)?;
    <[f64; 2]>::try_from(v.as_slice()).map_err(|_| bad(key, value, "expected two numbers"))
}

fn groups(key: &str, value: &str) -> Result<Vec<Vec<f64>>, ConfigError> {
    value.split(';').map(|g| list(key, g.trim())).collect()
}

fn laws(key: &str, value: &str) -> Result<Vec<GainLaw>, ConfigError> {
    value
        .split(',')
        .map(|s| s.trim().parse::<GainLaw>().map_err(|e| bad(key, value, e.to_string())))
        .collect()
}

/// Apply one assignment on top of `config`.
pub fn apply(config: &mut SimConfig, key: &str, value: &str) -> Result<(), ConfigError> {
    let c = config;
    match key {
        "system.name" => c.system = value.to_owned(),
        "system.theta" => c.theta = list(key, value)?,
        "sim.dt" => c.dt = num(key, value)?,
        "sim.horizon" => c.horizon = num(key, value)?,
        "sim.seed" => c.seed = uint(key, value)?,
        "sim.runs" => c.runs = uint(key, value)?,
        "sim.laws" => c.laws = laws(key, value)?,
        "sim.x0" => c.x0 = list(key, value)?,
        "sim.theta_hat0" => c.theta_hat0 = list(key, value)?,
        "estimator.law" => {
            c.estimator.law = value.parse().map_err(|e: crate::ControlError| bad(key, value, e.to_string()))?
        }
        "estimator.enabled" => c.adapt = boolean(key, value)?,
        "estimator.N" => c.estimator.capacity = uint(key, value)?,
        "estimator.gamma0" => c.estimator.gamma0 = num(key, value)?,
        "estimator.beta" => c.estimator.params.beta = num(key, value)?,
        "estimator.gamma_bar" => c.estimator.params.gamma_bar = num(key, value)?,
        "estimator.window_dt" => c.estimator.window_dt = num(key, value)?,
        "clf.c3" => c.clf.c3 = num(key, value)?,
        "clf.eps_v" => c.clf.eps_v = num(key, value)?,
        "cbf.enabled" => c.cbf.enabled = boolean(key, value)?,
        "cbf.eps_h" => c.cbf.eps_h = num(key, value)?,
        "cbf.alpha1_lambda" => c.cbf.alpha1_lambda = num(key, value)?,
        "cbf.alpha2_lambda" => c.cbf.alpha2_lambda = num(key, value)?,
        "cbf.obstacle_center" => c.cbf.obstacle_center = pair(key, value)?,
        "cbf.obstacle_radius" => c.cbf.obstacle_radius = num(key, value)?,
        "cbf.margin" => c.cbf.margin = num(key, value)?,
        "sample.x_lo" => c.sampling.x_lo = list(key, value)?,
        "sample.x_hi" => c.sampling.x_hi = list(key, value)?,
        "sample.theta_hat_lo" => c.sampling.theta_hat_lo = list(key, value)?,
        "sample.theta_hat_hi" => c.sampling.theta_hat_hi = list(key, value)?,
        "sweep.laws" => c.sweep.laws = laws(key, value)?,
        "sweep.theta_hat0" => c.sweep.theta_hat0 = groups(key, value)?,
        other => return Err(ConfigError::UnknownKey(other.to_owned())),
    }
    Ok(())
}

/// Parse config text over the defaults and validate the result.
pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
    parse_with_overrides(text, &[])
}

/// Parse config text, then apply `key=value` overrides in order.
pub fn parse_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<SimConfig, ConfigError> {
    let mut config = SimConfig::default();
    for (_, key, value) in parse_assignments(text)? {
        // Run metadata from a manifest is not configuration.
        if key.starts_with("manifest.") {
            continue;
        }
        apply(&mut config, &key, &value)?;
    }
    for (key, value) in overrides {
        apply(&mut config, key.trim(), value.trim())?;
    }
    config.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(config)
}

pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_with_overrides(&text, overrides)
}

/// Split a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: s.to_owned(),
        })
}

fn join_nums(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn join_laws(v: &[GainLaw]) -> String {
    v.iter().map(GainLaw::as_str).collect::<Vec<_>>().join(", ")
}

/// Every resolved key as config text; [`parse`] reproduces `config` exactly.
pub fn to_text(config: &SimConfig) -> String {
    let c = config;
    let value = |key: &str| -> String {
        match key {
            "system.name" => c.system.clone(),
            "system.theta" => join_nums(&c.theta),
            "sim.dt" => c.dt.to_string(),
            "sim.horizon" => c.horizon.to_string(),
            "sim.seed" => c.seed.to_string(),
            "sim.runs" => c.runs.to_string(),
            "sim.laws" => join_laws(&c.laws),
            "sim.x0" => join_nums(&c.x0),
            "sim.theta_hat0" => join_nums(&c.theta_hat0),
            "estimator.law" => c.estimator.law.to_string(),
            "estimator.enabled" => c.adapt.to_string(),
            "estimator.N" => c.estimator.capacity.to_string(),
            "estimator.gamma0" => c.estimator.gamma0.to_string(),
            "estimator.beta" => c.estimator.params.beta.to_string(),
            "estimator.gamma_bar" => c.estimator.params.gamma_bar.to_string(),
            "estimator.window_dt" => c.estimator.window_dt.to_string(),
            "clf.c3" => c.clf.c3.to_string(),
            "clf.eps_v" => c.clf.eps_v.to_string(),
            "cbf.enabled" => c.cbf.enabled.to_string(),
            "cbf.eps_h" => c.cbf.eps_h.to_string(),
            "cbf.alpha1_lambda" => c.cbf.alpha1_lambda.to_string(),
            "cbf.alpha2_lambda" => c.cbf.alpha2_lambda.to_string(),
            "cbf.obstacle_center" => join_nums(&c.cbf.obstacle_center),
            "cbf.obstacle_radius" => c.cbf.obstacle_radius.to_string(),
            "cbf.margin" => c.cbf.margin.to_string(),
            "sample.x_lo" => join_nums(&c.sampling.x_lo),
            "sample.x_hi" => join_nums(&c.sampling.x_hi),
            "sample.theta_hat_lo" => join_nums(&c.sampling.theta_hat_lo),
            "sample.theta_hat_hi" => join_nums(&c.sampling.theta_hat_hi),
            "sweep.laws" => join_laws(&c.sweep.laws),
            "sweep.theta_hat0" => c
                .sweep
                .theta_hat0
                .iter()
                .map(|g| join_nums(g))
                .collect::<Vec<_>>()
                .join("; "),
            _ => unreachable!("key list and writer out of sync"),
        }
    };
    KEYS.iter()
        .map(|k| format!("{k} = {}\n", value(k)))
        .collect()
}
