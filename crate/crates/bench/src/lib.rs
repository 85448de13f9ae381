//! Shared fixtures for the benchmarks.

use biphoton::{FrequencyGrid, PhysicalParams, Scheme, SpectralField};

/// FE field on a `±150` grid with `points` nodes per axis.
pub fn fe_field(points: usize) -> SpectralField {
    let grid = FrequencyGrid::new(150.0, points).expect("valid grid");
    Scheme::Fe { gamma_c: 1.0 }.build(&PhysicalParams::default(), &grid, &grid).expect("FE builds")
}
