use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::csv_number;
use crate::grid::{FrequencyGrid, PhysicalParams, Quadrature};
use crate::pipeline::Pipeline;
use crate::schmidt::{decompose, Backend, SchmidtOptions, SchmidtResult, DEFAULT_MAX_MODES};

/// Leading eigenvalues kept per record.
pub const RECORD_LAMBDAS: usize = 8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub name: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub scale: Scale,
}

impl SweepAxis {
    pub fn new(name: impl Into<String>, from: f64, to: f64, steps: usize, scale: Scale) -> Result<Self> {
        let axis = Self { name: name.into(), from, to, steps, scale };
        axis.validate()?;
        Ok(axis)
    }

    pub fn linear(name: impl Into<String>, from: f64, to: f64, steps: usize) -> Result<Self> {
        Self::new(name, from, to, steps, Scale::Linear)
    }

    pub fn log(name: impl Into<String>, from: f64, to: f64, steps: usize) -> Result<Self> {
        Self::new(name, from, to, steps, Scale::Log)
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return Err(Error::config(format!("axis {} needs at least one step", self.name)));
        }
        if !(self.from.is_finite() && self.to.is_finite() && self.from < self.to) {
            return Err(Error::config(format!(
                "axis {} needs finite from < to, got {} .. {}",
                self.name, self.from, self.to
            )));
        }
        if self.scale == Scale::Log && self.from <= 0.0 {
            return Err(Error::config(format!("log axis {} needs from > 0", self.name)));
        }
        Ok(())
    }

    /// Sample points, endpoints included.
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i == 0 {
                    return self.from;
                }
                if i == self.steps - 1 {
                    return self.to;
                }
                let t = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.from + t * (self.to - self.from),
                    Scale::Log => (self.from.ln() + t * (self.to.ln() - self.from.ln())).exp(),
                }
            })
            .collect()
    }
}

/// Grid used for both detuning axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub span: f64,
    pub points: usize,
    #[serde(default)]
    pub quadrature: Quadrature,
}

impl GridSpec {
    pub fn new(span: f64, points: usize) -> Self {
        Self { span, points, quadrature: Quadrature::Midpoint }
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::with_quadrature(self.span, self.points, self.quadrature)
    }
}

impl Default for GridSpec {
    /// ±150Γ with 2048 midpoint nodes.
    fn default() -> Self {
        Self::new(150.0, 2048)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: SweepAxis,
    pub axis2: Option<SweepAxis>,
    pub pipeline: Pipeline,
    pub physical: PhysicalParams,
    pub grid: GridSpec,
    #[serde(default)]
    pub backend: Backend,
    pub max_modes: usize,
}

impl SweepSpec {
    pub fn new(axis1: SweepAxis, pipeline: Pipeline) -> Self {
        Self {
            axis1,
            axis2: None,
            pipeline,
            physical: PhysicalParams::default(),
            grid: GridSpec::new(150.0, 1024),
            backend: Backend::DirectSvd,
            max_modes: DEFAULT_MAX_MODES,
        }
    }

    pub fn with_axis2(mut self, axis: SweepAxis) -> Self {
        self.axis2 = Some(axis);
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn axis_names(&self) -> Vec<&str> {
        std::iter::once(self.axis1.name.as_str()).chain(self.axis2.as_ref().map(|a| a.name.as_str())).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.name == self.axis1.name {
                return Err(Error::config(format!("both sweep axes are named {}", a2.name)));
            }
        }
        if self.max_modes == 0 {
            return Err(Error::config("max_modes must be at least 1"));
        }
        self.grid.grid()?;
        // Presets reject parameters they do not take; expressions ignore
        // axes they do not mention.
        for name in self.axis_names() {
            self.pipeline.with_param(name, 1.0)?;
        }
        Ok(())
    }

    /// Parameter tuples in output order (axis 1 outer, axis 2 inner).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let v1 = self.axis1.values();
        match &self.axis2 {
            None => v1.into_iter().map(|a| vec![a]).collect(),
            Some(a2) => {
                let v2 = a2.values();
                v1.iter().flat_map(|&a| v2.iter().map(move |&b| vec![a, b])).collect()
            }
        }
    }
}

/// Schmidt summary of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub entropy: f64,
    pub purity: f64,
    /// Leading eigenvalues, zero-padded.
    pub lambdas: [f64; RECORD_LAMBDAS],
    pub tail: f64,
}

impl From<&SchmidtResult> for PointMetrics {
    fn from(r: &SchmidtResult) -> Self {
        let mut lambdas = [0.0; RECORD_LAMBDAS];
        for (dst, src) in lambdas.iter_mut().zip(&r.lambdas) {
            *dst = *src;
        }
        Self { entropy: r.entropy, purity: r.purity, lambdas, tail: r.tail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub values: Vec<f64>,
    /// Metrics, or the error message if evaluating this point failed.
    pub outcome: std::result::Result<PointMetrics, String>,
    pub elapsed_ms: f64,
}

impl SweepRecord {
    pub fn metrics(&self) -> Option<&PointMetrics> {
        self.outcome.as_ref().ok()
    }

    pub fn entropy(&self) -> Option<f64> {
        self.metrics().map(|m| m.entropy)
    }
}

/// Builds and decomposes one parameter point.
pub fn evaluate_point(spec: &SweepSpec, grid: &FrequencyGrid, values: &[f64]) -> Result<SchmidtResult> {
    let mut pipeline = spec.pipeline.clone();
    for (name, &v) in spec.axis_names().into_iter().zip(values) {
        pipeline = pipeline.with_param(name, v)?;
    }
    let field = pipeline.build(&spec.physical, grid, grid)?;
    decompose(&field, spec.backend, &SchmidtOptions { max_modes: spec.max_modes, keep_modes: 0 })
}

/// Evaluates every point of the sweep. Point failures are recorded in-line.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    run_sweep_with_progress(spec, |_, _| {})
}

/// As [`run_sweep`], calling `progress(done, total)` after each point.
pub fn run_sweep_with_progress(spec: &SweepSpec, progress: impl Fn(usize, usize) + Sync) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let grid = spec.grid.grid()?;
    let points = spec.points();
    let total = points.len();
    let done = AtomicUsize::new(0);
    Ok(points
        .into_par_iter()
        .map(|values| {
            let start = Instant::now();
            let outcome =
                evaluate_point(spec, &grid, &values).map(|r| PointMetrics::from(&r)).map_err(|e| e.to_string());
            let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
            progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
            SweepRecord { values, outcome, elapsed_ms }
        })
        .collect())
}

/// Re-evaluates the records with the smallest and largest entropy on a finer
/// grid. Returns `(index, refined record)` pairs.
pub fn refine_extrema(spec: &SweepSpec, records: &[SweepRecord], points: usize) -> Result<Vec<(usize, SweepRecord)>> {
    let finite: Vec<(usize, f64)> =
        records.iter().enumerate().filter_map(|(i, r)| r.entropy().map(|s| (i, s))).collect();
    let Some(&(imin, _)) = finite.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else {
        return Ok(Vec::new());
    };
    let &(imax, _) = finite.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty");
    let fine = SweepSpec { grid: GridSpec { points, ..spec.grid }, ..spec.clone() };
    let grid = fine.grid.grid()?;
    let mut picks = vec![imin];
    if imax != imin {
        picks.push(imax);
    }
    Ok(picks
        .into_iter()
        .map(|i| {
            let values = records[i].values.clone();
            let start = Instant::now();
            let outcome =
                evaluate_point(&fine, &grid, &values).map(|r| PointMetrics::from(&r)).map_err(|e| e.to_string());
            (i, SweepRecord { values, outcome, elapsed_ms: start.elapsed().as_secs_f64() * 1e3 })
        })
        .collect())
}

pub fn csv_header(spec: &SweepSpec) -> String {
    let mut cols: Vec<String> = spec.axis_names().iter().map(|s| s.to_string()).collect();
    cols.extend(["S".to_string(), "purity".to_string()]);
    cols.extend((1..=RECORD_LAMBDAS).map(|n| format!("lambda_{n}")));
    cols.extend(["tail".to_string(), "ms".to_string(), "error".to_string()]);
    cols.join(",")
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One header row, one row per record, LF line endings.
pub fn write_csv(spec: &SweepSpec, records: &[SweepRecord], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{}", csv_header(spec))?;
    for r in records {
        let mut cols: Vec<String> = r.values.iter().map(|&v| csv_number(v)).collect();
        match &r.outcome {
            Ok(m) => {
                cols.push(csv_number(m.entropy));
                cols.push(csv_number(m.purity));
                cols.extend(m.lambdas.iter().map(|&l| csv_number(l)));
                cols.push(csv_number(m.tail));
                cols.push(format!("{:.3}", r.elapsed_ms));
                cols.push(String::new());
            }
            Err(e) => {
                cols.extend(std::iter::repeat_n(String::new(), 3 + RECORD_LAMBDAS));
                cols.push(format!("{:.3}", r.elapsed_ms));
                cols.push(csv_escape(e));
            }
        }
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}

/// One JSON object per record.
pub fn write_json_lines(spec: &SweepSpec, records: &[SweepRecord], mut out: impl Write) -> io::Result<()> {
    let names = spec.axis_names();
    for r in records {
        let mut obj = serde_json::Map::new();
        for (name, v) in names.iter().zip(&r.values) {
            obj.insert(name.to_string(), serde_json::json!(v));
        }
        match &r.outcome {
            Ok(m) => {
                obj.insert("S".into(), serde_json::json!(m.entropy));
                obj.insert("purity".into(), serde_json::json!(m.purity));
                obj.insert("lambdas".into(), serde_json::json!(m.lambdas));
                obj.insert("tail".into(), serde_json::json!(m.tail));
            }
            Err(e) => {
                obj.insert("error".into(), serde_json::json!(e));
            }
        }
        obj.insert("ms".into(), serde_json::json!(r.elapsed_ms));
        writeln!(out, "{}", serde_json::Value::Object(obj))?;
    }
    Ok(())
}

/// Dense entropy matrix of a 2D sweep: axis-2 values across the header row,
/// one row per axis-1 value. Failed points are written as `nan`.
pub fn write_heatmap(spec: &SweepSpec, records: &[SweepRecord], mut out: impl Write) -> io::Result<()> {
    let Some(a2) = &spec.axis2 else {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "heatmap needs a two-axis sweep"));
    };
    let v2 = a2.values();
    let mut header = vec![format!("{}\\{}", spec.axis1.name, a2.name)];
    header.extend(v2.iter().map(|&v| csv_number(v)));
    writeln!(out, "{}", header.join(","))?;
    for row in records.chunks(v2.len()) {
        let mut cols = vec![csv_number(row[0].values[0])];
        cols.extend(row.iter().map(|r| csv_number(r.entropy().unwrap_or(f64::NAN))));
        writeln!(out, "{}", cols.join(","))?;
    }
    Ok(())
}
