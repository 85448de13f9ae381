use std::f64::consts::{PI, TAU};

use biphoton::experiments::{
    convergence_check, run_sweep, write_csv, write_heatmap, write_json_lines, GridSpec, SweepAxis, SweepSpec,
};
use biphoton::{Axis, PhysicalParams, Pipeline, PresetKind, SchemePreset};

fn small(spec: SweepSpec) -> SweepSpec {
    spec.with_grid(GridSpec::new(150.0, 256))
}

fn strip_ms(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split(',').collect();
            let n = cols.len();
            cols.remove(n - 2);
            cols.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn identical_specs_give_identical_csv() {
    let preset = SchemePreset::new(PresetKind::Fc).with_target(Axis::Idler).with("gamma_c", 1.0).unwrap();
    let spec = small(SweepSpec::new(SweepAxis::linear("phi", 0.0, TAU, 7).unwrap(), preset.into()));
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_csv(&spec, &run_sweep(&spec).unwrap(), &mut a).unwrap();
    write_csv(&spec, &run_sweep(&spec).unwrap(), &mut b).unwrap();
    let (a, b) = (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap());
    assert!(!a.contains('\r'));
    assert_eq!(
        a.lines().next().unwrap(),
        "phi,S,purity,lambda_1,lambda_2,lambda_3,lambda_4,lambda_5,lambda_6,lambda_7,lambda_8,tail,ms,error"
    );
    assert_eq!(a.lines().count(), 8);
    assert_eq!(strip_ms(&a), strip_ms(&b));
}

#[test]
fn failed_points_are_recorded_in_line() {
    let spec = small(SweepSpec::new(
        SweepAxis::linear("g", -1.0, 1.0, 5).unwrap(),
        Pipeline::Expr("base * cav(i, {g})".into()),
    ));
    let records = run_sweep(&spec).unwrap();
    assert_eq!(records.len(), 5);
    assert!(records[0].outcome.is_err() && records[2].outcome.is_err());
    assert!(records[3].outcome.is_ok() && records[4].outcome.is_ok());
    let mut csv = Vec::new();
    write_csv(&spec, &records, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("-1,,,"), "{first}");
    assert!(first.contains("linewidth"), "{first}");
    let mut json = Vec::new();
    write_json_lines(&spec, &records, &mut json).unwrap();
    let line: serde_json::Value =
        serde_json::from_str(String::from_utf8(json).unwrap().lines().next().unwrap()).unwrap();
    assert!(line["error"].is_string());
}

#[test]
fn invalid_specs_are_rejected() {
    let fs: Pipeline = SchemePreset::new(PresetKind::Fs).into();
    assert!(SweepAxis::linear("phi", 1.0, 1.0, 3).is_err());
    assert!(SweepAxis::linear("phi", 0.0, 1.0, 0).is_err());
    assert!(SweepAxis::log("gamma_c", 0.0, 1.0, 3).is_err());
    let spec = SweepSpec::new(SweepAxis::log("gamma_c", 0.1, 10.0, 3).unwrap(), fs);
    assert!(run_sweep(&spec).unwrap_err().is_config());
}

#[test]
fn unused_parameter_gives_constant_entropy() {
    let spec = small(SweepSpec::new(SweepAxis::linear("phi", 0.0, TAU, 4).unwrap(), Pipeline::Expr("base".into())));
    let s: Vec<f64> = run_sweep(&spec).unwrap().iter().map(|r| r.entropy().unwrap()).collect();
    assert!(s.iter().all(|&x| x == s[0]));
}

#[test]
fn fc_phase_sweep_has_minimum_near_pi() {
    let preset = SchemePreset::new(PresetKind::Fc).with_target(Axis::Idler).with("gamma_c", 1.0).unwrap();
    let spec = small(SweepSpec::new(SweepAxis::linear("phi", 0.0, TAU, 17).unwrap(), preset.into()));
    let s: Vec<f64> = run_sweep(&spec).unwrap().iter().map(|r| r.entropy().unwrap()).collect();
    let imin = (0..s.len()).min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
    let phi_min = imin as f64 * TAU / 16.0;
    assert!((phi_min - PI).abs() <= PI / 4.0, "minimum at {phi_min}");
}

#[test]
fn two_axis_sweep_heatmap() {
    let preset: Pipeline = SchemePreset::new(PresetKind::Fa).into();
    let spec = SweepSpec::new(SweepAxis::log("gamma_c_s1", 0.1, 10.0, 3).unwrap(), preset)
        .with_axis2(SweepAxis::log("gamma_c_i2", 0.1, 10.0, 4).unwrap())
        .with_grid(GridSpec::new(150.0, 64));
    let records = run_sweep(&spec).unwrap();
    assert_eq!(records.len(), 12);
    assert_eq!(records[1].values[0], 0.1);
    assert!((records[1].values[1] - 10f64.powf(-1.0 / 3.0)).abs() < 1e-14);
    assert_eq!(records[11].values, vec![10.0, 10.0]);
    let mut out = Vec::new();
    write_heatmap(&spec, &records, &mut out).unwrap();
    let out = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
    assert!(rows[0].starts_with("gamma_c_s1\\gamma_c_i2,0.1,"));
}

#[test]
fn convergence_of_separable_and_base_fields() {
    let physical = PhysicalParams::default();
    let sep = convergence_check(&Pipeline::Expr("cav(i, 1) * cav(s, 2)".into()), &physical, 150.0, 256).unwrap();
    assert!(sep.entropies.iter().all(|s| s.abs() < 1e-8));
    assert!(sep.converged);

    let base = convergence_check(&Pipeline::Expr("base".into()), &physical, 150.0, 256).unwrap();
    assert_eq!(base.points, vec![256, 512, 1024]);
    assert!(base.monotone, "{:?}", base.deltas);
    assert!(base.converged, "{:?}", base.deltas);
}

#[test]
fn fe_converges_inside_its_band() {
    let fe = SchemePreset::new(PresetKind::Fe).with("gamma_c", 1.0).unwrap();
    let r = convergence_check(&fe.into(), &PhysicalParams::default(), 150.0, 512).unwrap();
    assert!(r.converged, "{:?}", r.deltas);
    assert!(*r.entropies.last().unwrap() <= 0.010);
}
