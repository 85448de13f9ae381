//! Joint spectral amplitudes of cascaded biphotons, modulation networks, and
//! Schmidt-decomposition entanglement measures.
//!
//! ```
//! use biphoton::{decompose, Backend, FrequencyGrid, PhysicalParams, Scheme, SchmidtOptions};
//!
//! let grid = FrequencyGrid::new(150.0, 256).unwrap();
//! let field = Scheme::Fe { gamma_c: 1.0 }.build(&PhysicalParams::default(), &grid, &grid).unwrap();
//! let r = decompose(&field, Backend::DirectSvd, &SchmidtOptions::default()).unwrap();
//! assert!(r.entropy < 0.05);
//! ```

pub mod error;
pub mod experiments;
pub mod format;
pub mod grid;
pub mod modulation;
pub mod netlang;
pub mod pipeline;
pub mod schmidt;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{make_grid, superradiant_rate, FrequencyGrid, PhysicalParams, Quadrature};
pub use modulation::{
    apply_factor, build_preset, cavity_transfer, combine, swap_arguments, unit_phase, Axis, CavitySpec, PresetKind,
    Scheme, SchemePreset,
};
pub use netlang::{evaluate, parse, ModulationExpr, ParseError};
pub use pipeline::Pipeline;
pub use schmidt::{decompose, Backend, SchmidtModes, SchmidtOptions, SchmidtResult};
pub use spectral::{base_amplitude, base_spectral, SpectralField};

pub use faer::Mat;
pub use num_complex::Complex64;
