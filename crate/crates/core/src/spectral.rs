//! Joint spectral amplitudes sampled on a pair of detuning grids.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PhysicalParams};

/// Complex amplitude `f(Δω_s, Δω_i)`; rows follow the signal grid, columns the
/// idler grid. Stored unnormalized.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid_s: FrequencyGrid,
    grid_i: FrequencyGrid,
    amplitude: Mat<Complex64>,
}

impl SpectralField {
    pub fn new(grid_s: FrequencyGrid, grid_i: FrequencyGrid, amplitude: Mat<Complex64>) -> Result<Self> {
        if amplitude.nrows() != grid_s.points() || amplitude.ncols() != grid_i.points() {
            return Err(Error::config(format!(
                "amplitude shape {}x{} does not match grids {}x{}",
                amplitude.nrows(),
                amplitude.ncols(),
                grid_s.points(),
                grid_i.points()
            )));
        }
        let field = Self { grid_s, grid_i, amplitude };
        field.check_finite()?;
        Ok(field)
    }

    /// Samples `f` at every `(signal node, idler node)` pair.
    pub fn from_fn(grid_s: &FrequencyGrid, grid_i: &FrequencyGrid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let (xs, ys) = (grid_s.nodes(), grid_i.nodes());
        let amplitude = Mat::from_fn(xs.len(), ys.len(), |j, k| f(xs[j], ys[k]));
        Self::new(grid_s.clone(), grid_i.clone(), amplitude)
    }

    pub(crate) fn from_parts_unchecked(
        grid_s: FrequencyGrid,
        grid_i: FrequencyGrid,
        amplitude: Mat<Complex64>,
    ) -> Self {
        debug_assert_eq!(amplitude.shape(), (grid_s.points(), grid_i.points()));
        Self { grid_s, grid_i, amplitude }
    }

    pub fn grid_s(&self) -> &FrequencyGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &FrequencyGrid {
        &self.grid_i
    }

    pub fn amplitude(&self) -> &Mat<Complex64> {
        &self.amplitude
    }

    pub fn into_amplitude(self) -> Mat<Complex64> {
        self.amplitude
    }

    pub fn shape(&self) -> (usize, usize) {
        self.amplitude.shape()
    }

    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.amplitude[(j, k)]
    }

    /// Both axes use the same discretization.
    pub fn has_shared_axis(&self) -> bool {
        self.grid_s.same_axis(&self.grid_i)
    }

    pub fn same_grids(&self, other: &SpectralField) -> bool {
        self.grid_s.same_axis(&other.grid_s) && self.grid_i.same_axis(&other.grid_i)
    }

    /// `∬ |f|² dω_s dω_i` under the grid quadrature.
    pub fn norm_sqr(&self) -> f64 {
        let (ws, wi) = (self.grid_s.weights(), self.grid_i.weights());
        let mut total = 0.0;
        for k in 0..self.amplitude.ncols() {
            let col: f64 = (0..self.amplitude.nrows()).map(|j| ws[j] * self.amplitude[(j, k)].norm_sqr()).sum();
            total += wi[k] * col;
        }
        total
    }

    /// Largest `|a - b|` over matching samples. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.shape(), other.shape(), "field shapes differ");
        let mut worst: f64 = 0.0;
        for k in 0..self.amplitude.ncols() {
            for j in 0..self.amplitude.nrows() {
                worst = worst.max((self.amplitude[(j, k)] - other.amplitude[(j, k)]).norm());
            }
        }
        worst
    }

    /// Largest modulus in the field.
    pub fn max_modulus(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.amplitude.ncols() {
            for j in 0..self.amplitude.nrows() {
                worst = worst.max(self.amplitude[(j, k)].norm());
            }
        }
        worst
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for k in 0..self.amplitude.ncols() {
            for j in 0..self.amplitude.nrows() {
                let z = self.amplitude[(j, k)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::numerical(format!("non-finite amplitude at ({j}, {k})")));
                }
            }
        }
        Ok(())
    }
}

/// Cascade amplitude `exp(-(Δω_s + Δω_i)² τ² / 8) / (Γ₃ᴺ/2 - i Δω_i)` with Γ = 1.
pub fn base_amplitude(params: &PhysicalParams, ds: f64, di: f64) -> Complex64 {
    let tau = params.gamma_tau();
    let sum = ds + di;
    let gauss = (-sum * sum * tau * tau / 8.0).exp();
    Complex64::new(gauss, 0.0) / Complex64::new(0.5 * params.gamma3n(), -di)
}

/// Samples [`base_amplitude`] on the grid pair.
pub fn base_spectral(params: &PhysicalParams, grid_s: &FrequencyGrid, grid_i: &FrequencyGrid) -> SpectralField {
    let (xs, ys) = (grid_s.nodes(), grid_i.nodes());
    let amplitude = Mat::from_fn(xs.len(), ys.len(), |j, k| base_amplitude(params, xs[j], ys[k]));
    SpectralField::from_parts_unchecked(grid_s.clone(), grid_i.clone(), amplitude)
}
