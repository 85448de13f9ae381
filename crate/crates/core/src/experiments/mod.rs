//! Parameter sweeps, grid-convergence checks and the headline reproduction runs.

mod convergence;
mod repro;
mod sweep;

pub use convergence::{
    convergence_check, convergence_check_levels, ConvergenceReport, CONVERGENCE_TOL, MIN_BASE_POINTS,
};
pub use repro::{reproduce, write_summary, ReproItem, ReproOptions};
pub use sweep::{
    csv_header, evaluate_point, refine_extrema, run_sweep, run_sweep_with_progress, write_csv, write_heatmap,
    write_json_lines, GridSpec, PointMetrics, Scale, SweepAxis, SweepRecord, SweepSpec, RECORD_LAMBDAS,
};
