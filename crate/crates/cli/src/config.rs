//! Experiment configuration: flat dotted keys in a TOML file, overridden by
//! `BIPHOTON_*` environment variables and then by command-line flags.

use std::path::Path;

use biphoton::experiments::{GridSpec, Scale};
use biphoton::{Axis, Backend, PhysicalParams, Pipeline, PresetKind, Quadrature, SchemePreset};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

pub const ENV_PREFIX: &str = "BIPHOTON_";

/// Preset parameters and expression placeholders accepted under `pipeline.`.
pub const PARAM_KEYS: [&str; 9] =
    ["gamma_c", "gamma_c_i", "gamma_c_s", "gamma_c_s1", "gamma_c_i1", "gamma_c_i2", "gamma_c_s2", "phi", "stages"];

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    Float,
    Int,
    Str,
    Bool,
}

const KEYS: &[(&str, Kind)] = &[
    ("backend", Kind::Str),
    ("physical.gamma3N_over_gamma", Kind::Float),
    ("physical.gamma_tau", Kind::Float),
    ("grid.span_over_gamma", Kind::Float),
    ("grid.points", Kind::Int),
    ("grid.quadrature", Kind::Str),
    ("pipeline.preset", Kind::Str),
    ("pipeline.expr", Kind::Str),
    ("pipeline.target", Kind::Str),
    ("pipeline.gamma_c", Kind::Float),
    ("pipeline.gamma_c_i", Kind::Float),
    ("pipeline.gamma_c_s", Kind::Float),
    ("pipeline.gamma_c_s1", Kind::Float),
    ("pipeline.gamma_c_i1", Kind::Float),
    ("pipeline.gamma_c_i2", Kind::Float),
    ("pipeline.gamma_c_s2", Kind::Float),
    ("pipeline.phi", Kind::Float),
    ("pipeline.stages", Kind::Float),
    ("output.format", Kind::Str),
    ("output.path", Kind::Str),
    ("output.modes", Kind::Int),
    ("sweep.axis", Kind::Str),
    ("sweep.from", Kind::Float),
    ("sweep.to", Kind::Float),
    ("sweep.steps", Kind::Int),
    ("sweep.scale", Kind::Str),
    ("sweep.axis2", Kind::Str),
    ("sweep.from2", Kind::Float),
    ("sweep.to2", Kind::Float),
    ("sweep.steps2", Kind::Int),
    ("sweep.scale2", Kind::Str),
    ("sweep.points", Kind::Int),
    ("sweep.refine", Kind::Int),
    ("sweep.heatmap", Kind::Str),
    ("convergence.base_points", Kind::Int),
    ("convergence.levels", Kind::Int),
    ("repro.convergence", Kind::Bool),
    ("repro.phase_steps", Kind::Int),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Svd,
    Kernel,
    Both,
}

impl BackendChoice {
    pub fn backends(self) -> Vec<Backend> {
        match self {
            BackendChoice::Svd => vec![Backend::DirectSvd],
            BackendChoice::Kernel => vec![Backend::KernelEigen],
            BackendChoice::Both => vec![Backend::DirectSvd, Backend::KernelEigen],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physical {
    #[serde(rename = "gamma3N_over_gamma")]
    pub gamma3n_over_gamma: f64,
    pub gamma_tau: f64,
}

impl Default for Physical {
    fn default() -> Self {
        Self { gamma3n_over_gamma: 5.0, gamma_tau: 0.25 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub span_over_gamma: f64,
    pub points: usize,
    pub quadrature: Quadrature,
}

impl Default for Grid {
    fn default() -> Self {
        Self { span_over_gamma: 150.0, points: 2048, quadrature: Quadrature::Midpoint }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineCfg {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c_i: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c_s1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c_i1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c_i2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_c_s2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<f64>,
}

impl PipelineCfg {
    /// Set parameters, aliases first so exact keys override them.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        let values = [
            self.gamma_c,
            self.gamma_c_i,
            self.gamma_c_s,
            self.gamma_c_s1,
            self.gamma_c_i1,
            self.gamma_c_i2,
            self.gamma_c_s2,
            self.phi,
            self.stages,
        ];
        PARAM_KEYS.iter().zip(values).filter_map(|(k, v)| v.map(|v| (*k, v))).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepCfg {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<Scale>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis2: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps2: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale2: Option<Scale>,
    /// Field grid points per axis during sweeps.
    pub points: usize,
    /// Re-evaluate the extrema at this many points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heatmap: Option<String>,
}

impl Default for SweepCfg {
    fn default() -> Self {
        Self {
            axis: None,
            from: None,
            to: None,
            steps: None,
            scale: None,
            axis2: None,
            from2: None,
            to2: None,
            steps2: None,
            scale2: None,
            points: 1024,
            refine: None,
            heatmap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceCfg {
    pub base_points: usize,
    pub levels: usize,
}

impl Default for ConvergenceCfg {
    fn default() -> Self {
        Self { base_points: 1024, levels: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReproCfg {
    pub convergence: bool,
    pub phase_steps: usize,
}

impl Default for ReproCfg {
    fn default() -> Self {
        Self { convergence: true, phase_steps: 17 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub backend: BackendChoice,
    pub physical: Physical,
    pub grid: Grid,
    pub pipeline: PipelineCfg,
    pub output: Output,
    pub sweep: SweepCfg,
    pub convergence: ConvergenceCfg,
    pub repro: ReproCfg,
}

fn kind_of(path: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == path).map(|(_, kind)| *kind)
}

fn parse_value(path: &str, raw: &str) -> Result<Value, CliError> {
    let kind = kind_of(path).ok_or_else(|| CliError::Config(format!("unknown config key '{path}'")))?;
    let bad = |what: &str| CliError::Config(format!("{path}: expected {what}, got '{raw}'"));
    let raw = raw.trim();
    Ok(match kind {
        Kind::Float => Value::Float(parse_float(raw).ok_or_else(|| bad("a number"))?),
        Kind::Int => Value::Integer(raw.parse().map_err(|_| bad("a non-negative integer"))?),
        Kind::Bool => Value::Boolean(raw.parse().map_err(|_| bad("true or false"))?),
        Kind::Str => Value::String(raw.to_string()),
    })
}

/// Numbers, plus `pi` / `-pi` / `2pi` for phases.
pub fn parse_float(raw: &str) -> Option<f64> {
    use std::f64::consts::{PI, TAU};
    match raw {
        "pi" => Some(PI),
        "-pi" => Some(-PI),
        "2pi" => Some(TAU),
        _ => raw.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

fn insert(table: &mut Table, path: &str, value: Value) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut t = table;
    for p in parts {
        t = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new())).as_table_mut().expect("section");
    }
    t.insert(last.to_string(), value);
}

/// Integers written for float keys are accepted.
fn normalize_numbers(table: &mut Table, prefix: &str) {
    for (k, v) in table.iter_mut() {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => normalize_numbers(t, &path),
            Value::Integer(i) if kind_of(&path) == Some(Kind::Float) => *v = Value::Float(*i as f64),
            _ => {}
        }
    }
}

/// Environment variable name for a config key.
pub fn env_name(path: &str) -> String {
    format!("{ENV_PREFIX}{}", path.to_uppercase().replace('.', "_"))
}

/// Merges defaults, the config file, environment variables and `overrides`
/// (`key path`, raw value), later sources winning.
pub fn load(
    file: Option<&Path>,
    env: impl Fn(&str) -> Option<String>,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig, CliError> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            text.parse::<Table>().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    normalize_numbers(&mut table, "");
    for (path, _) in KEYS {
        if let Some(raw) = env(&env_name(path)) {
            insert(&mut table, path, parse_value(path, &raw)?);
        }
    }
    for (path, raw) in overrides {
        insert(&mut table, path, parse_value(path, raw)?);
    }
    Value::Table(table)
        .try_into::<ExperimentConfig>()
        .map_err(|e| CliError::Config(format!("invalid config: {}", e.message())))
}

impl ExperimentConfig {
    /// The merged configuration as flat `key = value` lines.
    pub fn to_flat_toml(&self) -> String {
        let value = Value::try_from(self).expect("config serializes");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        lines.join("\n") + "\n"
    }

    pub fn physical(&self) -> Result<PhysicalParams, CliError> {
        PhysicalParams::new(self.physical.gamma3n_over_gamma, self.physical.gamma_tau).map_err(CliError::from)
    }

    pub fn grid_spec(&self, points: usize) -> GridSpec {
        GridSpec { span: self.grid.span_over_gamma, points, quadrature: self.grid.quadrature }
    }

    /// Exactly one of preset or expression, with parameters applied.
    pub fn pipeline(&self) -> Result<Pipeline, CliError> {
        let p = &self.pipeline;
        match (&p.preset, &p.expr) {
            (Some(_), Some(_)) => Err(CliError::Config("set either pipeline.preset or pipeline.expr, not both".into())),
            (None, None) => Err(CliError::Config("no pipeline: set --preset or --expr".into())),
            (Some(name), None) => {
                let kind: PresetKind = name.parse().map_err(CliError::from)?;
                let mut preset = SchemePreset::new(kind);
                if let Some(t) = &p.target {
                    let axis: Axis = t.parse().map_err(CliError::from)?;
                    if kind != PresetKind::Fc {
                        return Err(CliError::Config(format!("preset {kind} does not take a target")));
                    }
                    preset = preset.with_target(axis);
                } else if kind == PresetKind::Fc {
                    preset = preset.with_target(Axis::Idler);
                }
                for (k, v) in p.params() {
                    preset.set(k, v).map_err(CliError::from)?;
                }
                Ok(Pipeline::Preset(preset))
            }
            (None, Some(expr)) => {
                if p.target.is_some() {
                    return Err(CliError::Config("target only applies to preset fc".into()));
                }
                let mut pipeline = Pipeline::Expr(expr.clone());
                for (k, v) in p.params() {
                    if pipeline.uses_param(k) {
                        pipeline = pipeline.with_param(k, v).map_err(CliError::from)?;
                    } else {
                        log::warn!("parameter {k} is not used by the expression");
                    }
                }
                Ok(pipeline)
            }
        }
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut Vec<String>) {
    match value {
        Value::Table(t) => {
            for (k, v) in t {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&path, v, out);
            }
        }
        Value::Float(f) => out.push(format!("{prefix} = {}", float_literal(*f))),
        other => out.push(format!("{prefix} = {other}")),
    }
}

/// Shortest round-trip literal that TOML still reads as a float.
fn float_literal(f: f64) -> String {
    let s = format!("{f:?}");
    if s.contains(['.', 'e', 'E']) || !f.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}
