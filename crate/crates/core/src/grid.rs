//! Frequency discretization and the physical parameters of the source.
//!
//! Every frequency in the crate is a detuning measured in units of the
//! intrinsic idler decay rate Γ, so Γ itself never appears at runtime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quadrature rule used to discretize the detuning axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    /// Nodes at cell centres, equal weights.
    #[default]
    Midpoint,
    /// Nodes on both endpoints, half weights at the ends.
    Trapezoid,
}

/// Uniform 1D grid over `[-span, +span]` with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    span: f64,
    quadrature: Quadrature,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl FrequencyGrid {
    /// Midpoint grid: nodes at `-span + (k + 1/2) h` with `h = 2 span / points`.
    pub fn new(span: f64, points: usize) -> Result<Self> {
        Self::with_quadrature(span, points, Quadrature::Midpoint)
    }

    pub fn with_quadrature(span: f64, points: usize, quadrature: Quadrature) -> Result<Self> {
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::config(format!("grid span must be positive and finite, got {span}")));
        }
        if points < 2 {
            return Err(Error::config(format!("grid needs at least 2 points, got {points}")));
        }
        let n = points as f64;
        let (nodes, weights): (Vec<f64>, Vec<f64>) = match quadrature {
            Quadrature::Midpoint => {
                let h = 2.0 * span / n;
                (0..points).map(|k| (symmetric_node(k, points, |i| -span + (i as f64 + 0.5) * h), h)).unzip()
            }
            Quadrature::Trapezoid => {
                let h = 2.0 * span / (n - 1.0);
                (0..points)
                    .map(|k| {
                        let w = if k == 0 || k == points - 1 { 0.5 * h } else { h };
                        (symmetric_node(k, points, |i| -span + i as f64 * h), w)
                    })
                    .unzip()
            }
        };
        Ok(Self { span, quadrature, nodes, weights })
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Node spacing.
    pub fn step(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Same discretization of the same interval.
    pub fn same_axis(&self, other: &FrequencyGrid) -> bool {
        self.span == other.span && self.points() == other.points() && self.quadrature == other.quadrature
    }
}

// Mirror the upper half onto the lower half so the grid is exactly symmetric
// about zero regardless of rounding in `node`.
fn symmetric_node(k: usize, points: usize, node: impl Fn(usize) -> f64) -> f64 {
    let mirror = points - 1 - k;
    if k < mirror {
        -node(mirror)
    } else if k == mirror {
        0.0
    } else {
        node(k)
    }
}

/// Free-function alias of [`FrequencyGrid::new`].
pub fn make_grid(span: f64, points: usize) -> Result<FrequencyGrid> {
    FrequencyGrid::new(span, points)
}

/// Source parameters: superradiant idler decay Γ₃ᴺ (units of Γ) and the
/// dimensionless pulse-duration product Γτ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    gamma3n: f64,
    gamma_tau: f64,
}

impl PhysicalParams {
    pub fn new(gamma3n: f64, gamma_tau: f64) -> Result<Self> {
        for (name, v) in [("gamma3N", gamma3n), ("gamma_tau", gamma_tau)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { gamma3n, gamma_tau })
    }

    pub fn gamma3n(&self) -> f64 {
        self.gamma3n
    }

    pub fn gamma_tau(&self) -> f64 {
        self.gamma_tau
    }
}

impl Default for PhysicalParams {
    /// Γ₃ᴺ = 5Γ, Γτ = 0.25.
    fn default() -> Self {
        Self { gamma3n: 5.0, gamma_tau: 0.25 }
    }
}

/// Collective idler decay rate `N μ̄ + 1` (units of Γ) for `n_atoms` atoms
/// with geometrical constant `mu_bar`.
pub fn superradiant_rate(n_atoms: u64, mu_bar: f64) -> Result<f64> {
    if n_atoms < 1 {
        return Err(Error::config("superradiant rate needs at least one atom"));
    }
    if !(mu_bar.is_finite() && mu_bar >= 0.0) {
        return Err(Error::config(format!("geometrical constant must be >= 0, got {mu_bar}")));
    }
    Ok(n_atoms as f64 * mu_bar + 1.0)
}
