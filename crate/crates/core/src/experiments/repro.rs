use std::f64::consts::{PI, TAU};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::convergence::{report, ConvergenceReport};
use super::sweep::{run_sweep, GridSpec, SweepAxis, SweepSpec};
use crate::error::{Error, Result};
use crate::format::sig;
use crate::grid::PhysicalParams;
use crate::modulation::Scheme;
use crate::pipeline::Pipeline;
use crate::schmidt::{decompose, Backend, SchmidtOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproOptions {
    pub physical: PhysicalParams,
    pub grid: GridSpec,
    /// Rerun every item at twice the grid resolution.
    pub convergence: bool,
    /// Phase samples over `[0, 2π]` for the symmetrization sweep.
    pub phase_steps: usize,
}

impl Default for ReproOptions {
    fn default() -> Self {
        Self { physical: PhysicalParams::default(), grid: GridSpec::default(), convergence: true, phase_steps: 17 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproItem {
    pub id: String,
    pub pipeline: String,
    pub entropy: f64,
    pub purity: f64,
    /// Human-readable acceptance band.
    pub target: String,
    pub pass: bool,
    pub convergence: Option<ConvergenceReport>,
}

struct Case {
    id: &'static str,
    scheme: Scheme,
    target: &'static str,
    check: fn(f64, f64) -> bool,
}

fn cases() -> Vec<Case> {
    vec![
        Case {
            id: "baseline",
            scheme: Scheme::Base,
            target: "S in [1.0, 1.4]",
            check: |s, _| (1.0..=1.4).contains(&s),
        },
        Case {
            id: "fe",
            scheme: Scheme::Fe { gamma_c: 1.0 },
            target: "S <= 0.010, purity >= 0.998",
            check: |s, p| s <= 0.010 && p >= 0.998,
        },
        Case {
            id: "fd",
            scheme: Scheme::Fd { gamma_c_i2: 1.0, gamma_c_s2: 1.0 },
            target: "S in [0.70, 0.90]",
            check: |s, _| (0.70..=0.90).contains(&s),
        },
        Case {
            id: "iterated-gc5",
            scheme: Scheme::Iterated { stages: 6, gamma_c_i: 5.0, gamma_c_s: 5.0 },
            target: "purity >= 0.999",
            check: |_, p| p >= 0.999,
        },
        Case {
            id: "iterated-gc1",
            scheme: Scheme::Iterated { stages: 6, gamma_c_i: 1.0, gamma_c_s: 1.0 },
            target: "purity >= 0.9999",
            check: |_, p| p >= 0.9999,
        },
    ]
}

fn entropy_purity(pipeline: &Pipeline, physical: &PhysicalParams, grid: GridSpec) -> Result<(f64, f64)> {
    let g = grid.grid()?;
    let field = pipeline.build(physical, &g, &g)?;
    let r = decompose(&field, Backend::DirectSvd, &SchmidtOptions::default())?;
    Ok((r.entropy, r.purity))
}

fn refined(pipeline: &Pipeline, opts: &ReproOptions, coarse: f64) -> Result<Option<ConvergenceReport>> {
    if !opts.convergence {
        return Ok(None);
    }
    let fine = GridSpec { points: opts.grid.points * 2, ..opts.grid };
    let (s, _) = entropy_purity(pipeline, &opts.physical, fine)?;
    Ok(Some(report(opts.grid.span, vec![opts.grid.points, fine.points], vec![coarse, s])))
}

/// Runs every headline item at the configured grid, calling `progress(id)`
/// before each.
pub fn reproduce(opts: &ReproOptions, progress: impl Fn(&str)) -> Result<Vec<ReproItem>> {
    if opts.phase_steps < 3 || opts.phase_steps % 2 == 0 {
        return Err(Error::config("phase_steps must be odd and at least 3 so that the sweep hits pi"));
    }
    let mut items = Vec::new();
    for case in cases() {
        progress(case.id);
        let pipeline: Pipeline = case.scheme.into();
        let (entropy, purity) = entropy_purity(&pipeline, &opts.physical, opts.grid)?;
        let convergence = refined(&pipeline, opts, entropy)?;
        let pass = (case.check)(entropy, purity) && convergence.as_ref().is_none_or(|c| c.converged);
        items.push(ReproItem {
            id: case.id.into(),
            pipeline: pipeline.describe(),
            entropy,
            purity,
            target: case.target.into(),
            pass,
            convergence,
        });
    }

    progress("fs-phase");
    let axis = SweepAxis::linear("phi", 0.0, TAU, opts.phase_steps)?;
    let spec =
        SweepSpec { physical: opts.physical, grid: opts.grid, ..SweepSpec::new(axis, Scheme::Fs { phi: 0.0 }.into()) };
    let records = run_sweep(&spec)?;
    let mut samples = Vec::with_capacity(records.len());
    for r in &records {
        let m = r.metrics().ok_or_else(|| Error::numerical(format!("phase sweep failed at phi = {}", r.values[0])))?;
        samples.push((r.values[0], m.entropy, m.purity));
    }
    let (phi_min, s_min, p_min) = *samples.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty sweep");
    let (phi_max, _, _) = *samples.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty sweep");
    let at_zero = phi_min == 0.0 || phi_min == TAU;
    let pipeline: Pipeline = Scheme::Fs { phi: phi_min }.into();
    let convergence = refined(&pipeline, opts, s_min)?;
    let pass = at_zero
        && phi_max == PI
        && (0.25..=0.35).contains(&s_min)
        && (0.910..=0.935).contains(&p_min)
        && convergence.as_ref().is_none_or(|c| c.converged);
    items.push(ReproItem {
        id: "fs-phase".into(),
        pipeline: format!(
            "fs phi in [0, 2pi], {} steps; min at phi={}, max at phi={}",
            opts.phase_steps,
            sig(phi_min, 6),
            sig(phi_max, 6)
        ),
        entropy: s_min,
        purity: p_min,
        target: "min S in [0.25, 0.35] at phi=0, purity in [0.910, 0.935], max S at phi=pi".into(),
        pass,
        convergence,
    });
    Ok(items)
}

/// Fixed-width summary table.
pub fn write_summary(items: &[ReproItem], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{:<14} {:>12} {:>12} {:>12} {:>6}  target", "item", "S", "purity", "|dS| (2N)", "pass")?;
    for it in items {
        let delta = it.convergence.as_ref().map(|c| sig(c.final_delta(), 3)).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{:<14} {:>12} {:>12} {:>12} {:>6}  {}",
            it.id,
            sig(it.entropy, 6),
            sig(it.purity, 6),
            delta,
            if it.pass { "yes" } else { "NO" },
            it.target
        )?;
    }
    Ok(())
}
