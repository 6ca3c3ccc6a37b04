//! Configuration layer: defaults, flat `key = value` or JSON input, repeated
//! `--param` overrides, and validation that reports one message per violation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use cavity_epr::dynamics::Params;

/// Which integrators a run executes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SolverChoice {
    Master,
    Effective,
    Analytic,
    All,
}

impl SolverChoice {
    pub fn runs_master(self) -> bool {
        matches!(self, SolverChoice::Master | SolverChoice::All)
    }

    pub fn runs_effective(self) -> bool {
        matches!(self, SolverChoice::Effective | SolverChoice::All)
    }

    pub fn runs_analytic(self) -> bool {
        matches!(self, SolverChoice::Analytic | SolverChoice::All)
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "master" => Ok(SolverChoice::Master),
            "effective" => Ok(SolverChoice::Effective),
            "analytic" => Ok(SolverChoice::Analytic),
            "all" => Ok(SolverChoice::All),
            _ => Err(format!(
                "solver: must be one of master, effective, analytic, all; got {s:?}"
            )),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolverChoice::Master => "master",
            SolverChoice::Effective => "effective",
            SolverChoice::Analytic => "analytic",
            SolverChoice::All => "all",
        };
        f.write_str(s)
    }
}

/// One swept parameter with an inclusive linear range.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepSpec {
    /// Evenly spaced sweep values including both endpoints.
    pub fn values(&self) -> Vec<f64> {
        if self.steps <= 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: Params,
    pub solver: SolverChoice,
    pub output_dir: PathBuf,
    pub emit_timeseries: bool,
    pub emit_summary: bool,
    pub sweep: Option<SweepSpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: Params::default(),
            solver: SolverChoice::All,
            output_dir: PathBuf::from("out"),
            emit_timeseries: true,
            emit_summary: true,
            sweep: None,
        }
    }
}

/// Model parameters a sweep may vary (real-valued fields only).
pub const SWEEPABLE: &[&str] = &[
    "delta", "g", "omega", "gamma", "kappa", "t1", "t2", "t_final", "dt",
];

/// Set one real-valued model parameter by name.
pub fn set_sweep_param(p: &mut Params, name: &str, value: f64) -> Result<(), String> {
    match name {
        "delta" => p.delta = value,
        "g" => p.g = value,
        "omega" => p.omega = value,
        "gamma" => p.gamma = value,
        "kappa" => p.kappa = value,
        "t1" => p.t1 = value,
        "t2" => p.t2 = value,
        "t_final" => p.t_final = value,
        "dt" => p.dt = value,
        _ => {
            return Err(format!(
                "sweep parameter: must be one of {}; got {name:?}",
                SWEEPABLE.join(", ")
            ))
        }
    }
    Ok(())
}

/// Parse config text into ordered key-value pairs. A leading `{` selects the
/// JSON form; otherwise the text is flat `key = value` lines with `#` comments.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>, String> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_flat(text)
    }
}

fn parse_flat(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!(
                "config line {}: expected `key = value`, got {raw:?}",
                ln + 1
            ));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_json(text: &str) -> Result<Vec<(String, String)>, String> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("config: invalid JSON: {e}"))?;
    let obj = v
        .as_object()
        .ok_or_else(|| "config: JSON root must be an object".to_string())?;
    let mut out = Vec::with_capacity(obj.len());
    for (k, val) in obj {
        let s = match val {
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Bool(b) => b.to_string(),
            serde_json::Value::String(s) => s.clone(),
            _ => {
                return Err(format!(
                    "{k}: JSON value must be a number, boolean, or string"
                ))
            }
        };
        out.push((k.clone(), s));
    }
    Ok(out)
}

/// Split a `--param key=value` argument.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let Some((k, v)) = s.split_once('=') else {
        return Err(format!("--param: expected KEY=VALUE, got {s:?}"));
    };
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, String> {
    v.parse()
        .map_err(|_| format!("{key}: expected a number, got {v:?}"))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("{key}: expected a non-negative integer, got {v:?}"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got {v:?}")),
    }
}

#[derive(Default)]
struct SweepFields {
    parameter: Option<String>,
    min: Option<f64>,
    max: Option<f64>,
    steps: Option<usize>,
}

fn apply_entry(
    cfg: &mut RunConfig,
    sweep: &mut SweepFields,
    key: &str,
    value: &str,
) -> Result<(), String> {
    let p = &mut cfg.params;
    match key {
        "delta" => p.delta = parse_f64(key, value)?,
        "g" => p.g = parse_f64(key, value)?,
        "omega" => p.omega = parse_f64(key, value)?,
        "gamma" => p.gamma = parse_f64(key, value)?,
        "kappa" => p.kappa = parse_f64(key, value)?,
        "t1" => p.t1 = parse_f64(key, value)?,
        "t2" => p.t2 = parse_f64(key, value)?,
        "t_final" => p.t_final = parse_f64(key, value)?,
        "dt" => p.dt = parse_f64(key, value)?,
        "n_max" => p.n_max = parse_usize(key, value)?,
        "sample_every" => p.sample_every = parse_usize(key, value)?,
        "second_photon_kappa_only" => p.second_photon_kappa_only = parse_bool(key, value)?,
        "solver" => cfg.solver = value.parse()?,
        "output_dir" => cfg.output_dir = PathBuf::from(value),
        "emit_timeseries" => cfg.emit_timeseries = parse_bool(key, value)?,
        "emit_summary" => cfg.emit_summary = parse_bool(key, value)?,
        "sweep_parameter" => sweep.parameter = Some(value.to_string()),
        "sweep_min" => sweep.min = Some(parse_f64(key, value)?),
        "sweep_max" => sweep.max = Some(parse_f64(key, value)?),
        "sweep_steps" => sweep.steps = Some(parse_usize(key, value)?),
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

/// Check a sweep specification against the allowed parameter list and range
/// sanity, collecting one message per violation.
pub fn validate_sweep(spec: &SweepSpec, errors: &mut Vec<String>) {
    if !SWEEPABLE.contains(&spec.parameter.as_str()) {
        errors.push(format!(
            "sweep_parameter: must be one of {}; got {:?}",
            SWEEPABLE.join(", "),
            spec.parameter
        ));
    }
    if !spec.min.is_finite() || !spec.max.is_finite() {
        errors.push("sweep range: bounds must be finite".into());
    } else if spec.min > spec.max {
        errors.push(format!(
            "sweep range: min {} exceeds max {}",
            spec.min, spec.max
        ));
    }
    if spec.steps < 1 {
        errors.push("sweep_steps: must be >= 1".into());
    }
}

/// Build a configuration from optional file text plus overrides, applying
/// defaults for everything unspecified. Returns every violation found.
pub fn build_config(
    file_text: Option<&str>,
    overrides: &[(String, String)],
) -> Result<RunConfig, Vec<String>> {
    let mut cfg = RunConfig::default();
    let mut sweep = SweepFields::default();
    let mut errors = Vec::new();

    let mut entries = Vec::new();
    if let Some(text) = file_text {
        match parse_entries(text) {
            Ok(e) => entries.extend(e),
            Err(e) => return Err(vec![e]),
        }
    }
    entries.extend(overrides.iter().cloned());

    for (k, v) in &entries {
        if let Err(e) = apply_entry(&mut cfg, &mut sweep, k, v) {
            errors.push(e);
        }
    }

    match (sweep.parameter, sweep.min, sweep.max, sweep.steps) {
        (None, None, None, None) => {}
        (Some(parameter), Some(min), Some(max), Some(steps)) => {
            let spec = SweepSpec {
                parameter,
                min,
                max,
                steps,
            };
            validate_sweep(&spec, &mut errors);
            cfg.sweep = Some(spec);
        }
        _ => errors.push(
            "sweep: requires all of sweep_parameter, sweep_min, sweep_max, sweep_steps".into(),
        ),
    }

    if let Err(violations) = cfg.params.validate() {
        errors.extend(violations);
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}
