use std::f64::consts::TAU;
use std::io::{IsTerminal, Write};

use biphoton::experiments::{
    convergence_check_levels, refine_extrema, reproduce, run_sweep_with_progress, write_csv, write_heatmap,
    write_json_lines, write_summary, ReproOptions, Scale, SweepAxis, SweepRecord, SweepSpec, RECORD_LAMBDAS,
};
use biphoton::format::{csv_number, sig};
use biphoton::schmidt::SchmidtResult;
use biphoton::{decompose, Backend, SchmidtOptions, SpectralField};
use serde_json::json;

use crate::config::{BackendChoice, ExperimentConfig, Format};
use crate::output::{write_atomic, write_output};
use crate::CliError;

/// Axis names a sweep may vary.
pub const SWEEP_AXES: [&str; 9] =
    ["gamma_c", "gamma_c_s", "gamma_c_i", "phi", "stages", "gamma_c_s1", "gamma_c_i1", "gamma_c_i2", "gamma_c_s2"];

fn build_field(cfg: &ExperimentConfig, points: usize) -> Result<SpectralField, CliError> {
    let pipeline = cfg.pipeline()?;
    let physical = cfg.physical()?;
    let grid = cfg.grid_spec(points).grid()?;
    Ok(pipeline.build(&physical, &grid, &grid)?)
}

fn single_backend(cfg: &ExperimentConfig, what: &str) -> Result<Backend, CliError> {
    match cfg.backend {
        BackendChoice::Svd => Ok(Backend::DirectSvd),
        BackendChoice::Kernel => Ok(Backend::KernelEigen),
        BackendChoice::Both => Err(CliError::Config(format!("{what} needs a single backend (svd or kernel)"))),
    }
}

fn top_relative_gap(a: &SchmidtResult, b: &SchmidtResult, n: usize) -> f64 {
    a.lambdas
        .iter()
        .zip(&b.lambdas)
        .take(n)
        .filter(|(x, _)| **x > 0.0)
        .map(|(x, y)| (x - y).abs() / x)
        .fold(0.0, f64::max)
}

pub fn entropy(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let field = build_field(cfg, cfg.grid.points)?;
    let results = cfg
        .backend
        .backends()
        .into_iter()
        .map(|b| decompose(&field, b, &SchmidtOptions::default()))
        .collect::<biphoton::Result<Vec<_>>>()?;

    if let [r] = results.as_slice() {
        println!("S = {}", sig(r.entropy, 6));
        println!("purity = {}", sig(r.purity, 6));
    } else {
        for r in &results {
            println!("[{}] S = {}", r.backend, sig(r.entropy, 6));
            println!("[{}] purity = {}", r.backend, sig(r.purity, 6));
        }
        println!("max relative lambda gap (top 20) = {}", sig(top_relative_gap(&results[0], &results[1], 20), 3));
        println!("entropy gap = {}", sig((results[0].entropy - results[1].entropy).abs(), 3));
    }

    if let Some(path) = &cfg.output.path {
        write_atomic(path.as_ref(), |w| match cfg.output.format {
            Format::Csv => {
                let mut header =
                    vec!["backend".to_string(), "S".into(), "purity".into(), "tail".into(), "retained".into()];
                header.extend((1..=RECORD_LAMBDAS).map(|n| format!("lambda_{n}")));
                writeln!(w, "{}", header.join(","))?;
                for r in &results {
                    let mut cols =
                        vec![r.backend.to_string(), csv_number(r.entropy), csv_number(r.purity), csv_number(r.tail)];
                    cols.push(r.lambdas.len().to_string());
                    cols.extend((0..RECORD_LAMBDAS).map(|n| csv_number(r.lambdas.get(n).copied().unwrap_or(0.0))));
                    writeln!(w, "{}", cols.join(","))?;
                }
                Ok(())
            }
            Format::Json => {
                for r in &results {
                    let rec = json!({
                        "backend": r.backend.name(),
                        "S": r.entropy,
                        "purity": r.purity,
                        "tail": r.tail,
                        "lambdas": r.lambdas,
                    });
                    writeln!(w, "{rec}")?;
                }
                Ok(())
            }
        })?;
    }
    Ok(())
}

fn default_range(name: &str) -> (f64, f64, usize, Scale) {
    match name {
        "phi" => (0.0, TAU, 50, Scale::Linear),
        "stages" => (1.0, 6.0, 6, Scale::Linear),
        _ => (0.1, 10.0, 50, Scale::Log),
    }
}

fn make_axis(
    name: &str,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
    scale: Option<Scale>,
    two_d: bool,
) -> Result<SweepAxis, CliError> {
    if !SWEEP_AXES.contains(&name) {
        return Err(CliError::Config(format!(
            "unknown sweep axis '{name}' (expected one of {})",
            SWEEP_AXES.join(", ")
        )));
    }
    let (f, t, n, s) = default_range(name);
    let n = if two_d && name != "stages" { 30 } else { n };
    Ok(SweepAxis::new(name, from.unwrap_or(f), to.unwrap_or(t), steps.unwrap_or(n), scale.unwrap_or(s))?)
}

fn sweep_spec(cfg: &ExperimentConfig) -> Result<SweepSpec, CliError> {
    let s = &cfg.sweep;
    let name = s.axis.as_deref().ok_or_else(|| CliError::Config("sweep needs --axis".into()))?;
    let two_d = s.axis2.is_some();
    let axis1 = make_axis(name, s.from, s.to, s.steps, s.scale, two_d)?;
    let mut spec = SweepSpec::new(axis1, cfg.pipeline()?).with_grid(cfg.grid_spec(s.points));
    spec.physical = cfg.physical()?;
    spec.backend = single_backend(cfg, "sweep")?;
    if let Some(name2) = &s.axis2 {
        spec = spec.with_axis2(make_axis(name2, s.from2, s.to2, s.steps2, s.scale2, true)?);
    }
    spec.validate()?;
    Ok(spec)
}

fn describe_point(spec: &SweepSpec, r: &SweepRecord) -> String {
    spec.axis_names().iter().zip(&r.values).map(|(n, v)| format!("{n}={}", sig(*v, 6))).collect::<Vec<_>>().join(" ")
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let spec = sweep_spec(cfg)?;
    let interactive = std::io::stderr().is_terminal();
    let records = run_sweep_with_progress(&spec, |done, total| {
        if interactive {
            eprint!("\rpoint {done}/{total}");
            if done == total {
                eprintln!();
            }
        }
    })?;

    write_output(cfg.output.path.as_deref(), |w| match cfg.output.format {
        Format::Csv => write_csv(&spec, &records, w),
        Format::Json => write_json_lines(&spec, &records, w),
    })?;
    if let Some(path) = &cfg.sweep.heatmap {
        if spec.axis2.is_none() {
            return Err(CliError::Config("--heatmap needs a two-axis sweep (--axis2)".into()));
        }
        write_atomic(path.as_ref(), |w| write_heatmap(&spec, &records, w))?;
    }

    let failed = records.iter().filter(|r| r.outcome.is_err()).count();
    // the data itself may be on stdout
    let mut summary = std::io::stderr();
    let _ = writeln!(summary, "{} points, {failed} failed", records.len());
    if let Some(points) = cfg.sweep.refine {
        for (i, fine) in refine_extrema(&spec, &records, points)? {
            let coarse = records[i].entropy().unwrap_or(f64::NAN);
            let refined = fine.outcome.as_ref().map(|m| sig(m.entropy, 6)).unwrap_or_else(|e| e.clone());
            let _ = writeln!(
                summary,
                "refined {}: S({}) = {}, S({points}) = {refined}",
                describe_point(&spec, &records[i]),
                spec.grid.points,
                sig(coarse, 6)
            );
        }
    }
    Ok(())
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let field = build_field(cfg, cfg.grid.points)?;
    write_output(cfg.output.path.as_deref(), |w| {
        let mut header = vec!["ds\\di".to_string()];
        header.extend(field.grid_i().nodes().iter().map(|&x| csv_number(x)));
        writeln!(w, "{}", header.join(","))?;
        for (j, &x) in field.grid_s().nodes().iter().enumerate() {
            let mut row = Vec::with_capacity(field.grid_i().points() + 1);
            row.push(csv_number(x));
            row.extend((0..field.grid_i().points()).map(|k| csv_number(field.at(j, k).norm())));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

pub fn modes(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n = if cfg.output.modes == 0 { 4 } else { cfg.output.modes };
    let backend = single_backend(cfg, "modes")?;
    let field = build_field(cfg, cfg.grid.points)?;
    let r = decompose(&field, backend, &SchmidtOptions { keep_modes: n, ..SchmidtOptions::default() })?;
    let modes = r.modes.as_ref().expect("modes requested");
    if modes.count() < n {
        return Err(CliError::Config(format!("requested {n} modes but only {} are retained", modes.count())));
    }
    for (k, l) in r.lambdas.iter().take(n).enumerate() {
        eprintln!("lambda_{} = {}", k + 1, sig(*l, 6));
    }
    write_output(cfg.output.path.as_deref(), |w| {
        let mut header = vec!["delta_omega".to_string()];
        for k in 1..=n {
            header.extend([format!("re_psi_{k}"), format!("im_psi_{k}"), format!("re_phi_{k}"), format!("im_phi_{k}")]);
        }
        writeln!(w, "{}", header.join(","))?;
        for (j, &x) in field.grid_s().nodes().iter().enumerate() {
            let mut row = vec![csv_number(x)];
            for k in 0..n {
                let (psi, phi) = (modes.signal[(j, k)], modes.idler[(j, k)]);
                row.extend([psi.re, psi.im, phi.re, phi.im].map(csv_number));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

pub fn repro(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let opts = ReproOptions {
        physical: cfg.physical()?,
        grid: cfg.grid_spec(cfg.grid.points),
        convergence: cfg.repro.convergence,
        phase_steps: cfg.repro.phase_steps,
    };
    let items = reproduce(&opts, |id| log::info!("running {id}"))?;
    let mut stdout = std::io::stdout().lock();
    write_summary(&items, &mut stdout).map_err(|e| CliError::Config(format!("cannot write stdout: {e}")))?;
    if let Some(path) = &cfg.output.path {
        write_atomic(path.as_ref(), |w| match cfg.output.format {
            Format::Json => {
                for it in &items {
                    writeln!(w, "{}", serde_json::to_string(it).expect("serializable"))?;
                }
                Ok(())
            }
            Format::Csv => {
                writeln!(w, "item,S,purity,points,S_fine,delta,converged,pass,target")?;
                for it in &items {
                    let (points, fine, delta, conv) = match &it.convergence {
                        Some(c) => (
                            c.points[0].to_string(),
                            csv_number(*c.entropies.last().expect("two levels")),
                            csv_number(c.final_delta()),
                            c.converged.to_string(),
                        ),
                        None => (opts.grid.points.to_string(), String::new(), String::new(), String::new()),
                    };
                    writeln!(
                        w,
                        "{},{},{},{points},{fine},{delta},{conv},{},\"{}\"",
                        it.id,
                        csv_number(it.entropy),
                        csv_number(it.purity),
                        it.pass,
                        it.target
                    )?;
                }
                Ok(())
            }
        })?;
    }
    Ok(())
}

pub fn convergence(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let report = convergence_check_levels(
        &cfg.pipeline()?,
        &cfg.physical()?,
        cfg.grid.span_over_gamma,
        cfg.convergence.base_points,
        cfg.convergence.levels,
    )?;
    for (k, (n, s)) in report.points.iter().zip(&report.entropies).enumerate() {
        let delta = if k == 0 { "-".to_string() } else { sig(report.deltas[k - 1], 3) };
        println!("points = {n}  S = {}  |dS| = {delta}", sig(*s, 9));
    }
    println!("converged = {} (tolerance {})", report.converged, report.tolerance);
    println!("monotone = {}", report.monotone);
    if let Some(path) = &cfg.output.path {
        write_atomic(path.as_ref(), |w| match cfg.output.format {
            Format::Json => writeln!(w, "{}", serde_json::to_string(&report).expect("serializable")),
            Format::Csv => {
                writeln!(w, "points,S,delta")?;
                for (k, (n, s)) in report.points.iter().zip(&report.entropies).enumerate() {
                    let delta = if k == 0 { String::new() } else { csv_number(report.deltas[k - 1]) };
                    writeln!(w, "{n},{},{delta}", csv_number(*s))?;
                }
                Ok(())
            }
        })?;
    }
    Ok(())
}
