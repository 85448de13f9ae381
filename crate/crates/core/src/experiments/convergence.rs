use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PhysicalParams};
use crate::pipeline::Pipeline;
use crate::schmidt::{decompose, Backend, SchmidtOptions};

/// Largest accepted entropy change between successive doublings.
pub const CONVERGENCE_TOL: f64 = 1e-3;
pub const MIN_BASE_POINTS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub span: f64,
    pub points: Vec<usize>,
    pub entropies: Vec<f64>,
    /// `|S(2N) - S(N)|` for successive levels.
    pub deltas: Vec<f64>,
    pub tolerance: f64,
    /// Every successive change is below `tolerance`.
    pub converged: bool,
    /// Successive changes never grow.
    pub monotone: bool,
}

impl ConvergenceReport {
    pub fn final_delta(&self) -> f64 {
        self.deltas.last().copied().unwrap_or(0.0)
    }
}

/// Entropy at `base_points`, 2× and 4× on a `±span` grid.
pub fn convergence_check(
    pipeline: &Pipeline,
    physical: &PhysicalParams,
    span: f64,
    base_points: usize,
) -> Result<ConvergenceReport> {
    convergence_check_levels(pipeline, physical, span, base_points, 3)
}

/// Entropy at `levels` successive doublings starting from `base_points`.
pub fn convergence_check_levels(
    pipeline: &Pipeline,
    physical: &PhysicalParams,
    span: f64,
    base_points: usize,
    levels: usize,
) -> Result<ConvergenceReport> {
    if base_points < MIN_BASE_POINTS {
        return Err(Error::config(format!(
            "convergence check needs at least {MIN_BASE_POINTS} base points, got {base_points}"
        )));
    }
    if levels < 2 {
        return Err(Error::config("convergence check needs at least two resolutions"));
    }
    let points: Vec<usize> = (0..levels).map(|l| base_points << l).collect();
    let entropies = points
        .iter()
        .map(|&n| {
            let grid = FrequencyGrid::new(span, n)?;
            let field = pipeline.build(physical, &grid, &grid)?;
            Ok(decompose(&field, Backend::DirectSvd, &SchmidtOptions::default())?.entropy)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(report(span, points, entropies))
}

pub(crate) fn report(span: f64, points: Vec<usize>, entropies: Vec<f64>) -> ConvergenceReport {
    let deltas: Vec<f64> = entropies.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let converged = deltas.iter().all(|&d| d < CONVERGENCE_TOL);
    let monotone = deltas.windows(2).all(|w| w[1] <= w[0]);
    ConvergenceReport { span, points, entropies, deltas, tolerance: CONVERGENCE_TOL, converged, monotone }
}
