//! Headline numbers at the default working point on the 2048-point grid.
//! Prints one PASS/FAIL line per criterion and exits non-zero on any failure.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use biphoton::format::sig;
use biphoton::{
    build_preset, decompose, Axis, Backend, Complex64, FrequencyGrid, PhysicalParams, Pipeline, Scheme, SchmidtOptions,
    SchmidtResult, SpectralField,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rayon::prelude::*;

const SPAN: f64 = 150.0;
const POINTS: usize = 2048;
const FINE_POINTS: usize = 4096;

#[derive(Clone)]
struct Metrics {
    entropy: f64,
    purity: f64,
    lambdas: Vec<f64>,
}

impl From<&SchmidtResult> for Metrics {
    fn from(r: &SchmidtResult) -> Self {
        Self { entropy: r.entropy, purity: r.purity, lambdas: r.lambdas.clone() }
    }
}

struct Ctx {
    physical: PhysicalParams,
    grids: HashMap<usize, FrequencyGrid>,
    cache: RefCell<HashMap<(String, usize), Metrics>>,
}

impl Ctx {
    fn new() -> Self {
        let grids = [POINTS, FINE_POINTS].into_iter().map(|n| (n, FrequencyGrid::new(SPAN, n).unwrap())).collect();
        Self { physical: PhysicalParams::default(), grids, cache: RefCell::new(HashMap::new()) }
    }

    fn field(&self, scheme: Scheme, points: usize) -> SpectralField {
        let g = &self.grids[&points];
        scheme.build(&self.physical, g, g).unwrap()
    }

    fn svd(&self, scheme: Scheme, points: usize) -> Metrics {
        let key = (format!("{scheme:?}"), points);
        if let Some(m) = self.cache.borrow().get(&key) {
            return m.clone();
        }
        let r = decompose(&self.field(scheme, points), Backend::DirectSvd, &SchmidtOptions::default()).unwrap();
        let m = Metrics::from(&r);
        self.cache.borrow_mut().insert(key, m.clone());
        m
    }

    /// Fills the cache for `schemes`, decomposing independent fields in parallel.
    fn prefetch(&self, schemes: &[Scheme], points: usize) {
        let missing: Vec<Scheme> = {
            let cache = self.cache.borrow();
            let mut seen = Vec::new();
            for s in schemes {
                if !cache.contains_key(&(format!("{s:?}"), points)) && !seen.contains(s) {
                    seen.push(*s);
                }
            }
            seen
        };
        let (physical, grid) = (&self.physical, &self.grids[&points]);
        let computed: Vec<(Scheme, Metrics)> = missing
            .par_iter()
            .map(|s| {
                let field = s.build(physical, grid, grid).unwrap();
                let r = decompose(&field, Backend::DirectSvd, &SchmidtOptions::default()).unwrap();
                (*s, Metrics::from(&r))
            })
            .collect();
        let mut cache = self.cache.borrow_mut();
        for (s, m) in computed {
            cache.insert((format!("{s:?}"), points), m);
        }
    }

    fn s(&self, scheme: Scheme) -> f64 {
        self.svd(scheme, POINTS).entropy
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: &str, title: &str, start: Instant, o: Outcome, failures: &mut Vec<String>) {
    let tag = if o.pass { "PASS" } else { "FAIL" };
    println!("{tag} [{id}] {title}: {} ({:.0} s)", o.detail, start.elapsed().as_secs_f64());
    if !o.pass {
        failures.push(id.to_string());
    }
}

fn fc(phi: f64, gamma_c: f64, target: Axis) -> Scheme {
    Scheme::Fc { phi, gamma_c, target }
}

const BASE: Scheme = Scheme::Base;
const FE: Scheme = Scheme::Fe { gamma_c: 1.0 };
const FD: Scheme = Scheme::Fd { gamma_c_i2: 1.0, gamma_c_s2: 1.0 };
const ITER5: Scheme = Scheme::Iterated { stages: 6, gamma_c_i: 5.0, gamma_c_s: 5.0 };
const ITER1: Scheme = Scheme::Iterated { stages: 6, gamma_c_i: 1.0, gamma_c_s: 1.0 };
const FS0: Scheme = Scheme::Fs { phi: 0.0 };
const PHASE_STEPS: usize = 17;

fn c1(ctx: &Ctx) -> Outcome {
    let s = ctx.s(BASE);
    Outcome { pass: (1.0..=1.4).contains(&s), detail: format!("S = {} in [1.0, 1.4]", sig(s, 6)) }
}

fn c2(ctx: &Ctx) -> Outcome {
    let m = ctx.svd(FE, POINTS);
    Outcome {
        pass: m.entropy <= 0.010 && m.purity >= 0.998,
        detail: format!("S = {} <= 0.010, purity = {} >= 0.998", sig(m.entropy, 6), sig(m.purity, 6)),
    }
}

fn c3(ctx: &Ctx) -> Outcome {
    let s = ctx.s(FD);
    Outcome { pass: (0.70..=0.90).contains(&s), detail: format!("S = {} in [0.70, 0.90]", sig(s, 6)) }
}

fn c4(ctx: &Ctx) -> Outcome {
    let p5 = ctx.svd(ITER5, POINTS).purity;
    let p1 = ctx.svd(ITER1, POINTS).purity;
    Outcome {
        pass: p5 >= 0.999 && p1 >= 0.9999,
        detail: format!(
            "6 stages: purity(gc=5) = {} >= 0.999 [{}], purity(gc=1) = {} >= 0.9999 [{}]",
            sig(p5, 7),
            if p5 >= 0.999 { "ok" } else { "miss" },
            sig(p1, 7),
            if p1 >= 0.9999 { "ok" } else { "miss" }
        ),
    }
}

fn phases() -> Vec<f64> {
    (0..PHASE_STEPS).map(|k| if k == 0 { 0.0 } else { TAU * k as f64 / (PHASE_STEPS - 1) as f64 }).collect()
}

fn c5(ctx: &Ctx) -> Outcome {
    let fs: Vec<Scheme> = phases().into_iter().map(|phi| Scheme::Fs { phi }).collect();
    ctx.prefetch(&fs, POINTS);
    let samples: Vec<(f64, Metrics)> =
        phases().into_iter().map(|phi| (phi, ctx.svd(Scheme::Fs { phi }, POINTS))).collect();
    let (phi_min, m_min) = samples.iter().min_by(|a, b| a.1.entropy.total_cmp(&b.1.entropy)).unwrap();
    let (phi_max, _) = samples.iter().max_by(|a, b| a.1.entropy.total_cmp(&b.1.entropy)).unwrap();
    let min_at_zero = *phi_min == 0.0 || *phi_min == TAU;
    let pass = min_at_zero
        && *phi_max == PI
        && (0.25..=0.35).contains(&m_min.entropy)
        && (0.910..=0.935).contains(&m_min.purity);
    Outcome {
        pass,
        detail: format!(
            "{PHASE_STEPS} phases: min S = {} at phi = {}, purity = {} in [0.910, 0.935], max S at phi = {}",
            sig(m_min.entropy, 6),
            sig(*phi_min, 6),
            sig(m_min.purity, 6),
            sig(*phi_max, 6)
        ),
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn c6(ctx: &Ctx) -> Outcome {
    let ladder = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let axis: Vec<f64> = (0..10).map(|k| 10f64.powf(-1.0 + 2.0 * k as f64 / 9.0)).collect();
    let mut all: Vec<Scheme> = [0.1, 1.0, 10.0].iter().map(|&g| fc(0.0, g, Axis::Idler)).collect();
    for t in [Axis::Idler, Axis::Signal] {
        all.extend(ladder.iter().map(|&g| fc(PI, g, t)));
    }
    for i in 0..10 {
        // the bracket C(i, g1) + C(i, g2) is symmetric in (g1, g2)
        all.extend((i..10).map(|j| Scheme::Fb { gamma_c_i1: axis[i], gamma_c_i2: axis[j] }));
    }
    all.push(BASE);
    ctx.prefetch(&all, POINTS);

    let a: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&g| ctx.s(fc(0.0, g, Axis::Idler))).collect();
    let b_i: Vec<f64> = ladder.iter().map(|&g| ctx.s(fc(PI, g, Axis::Idler))).collect();
    let b_s: Vec<f64> = ladder.iter().map(|&g| ctx.s(fc(PI, g, Axis::Signal))).collect();

    let base = ctx.s(BASE);
    let mut worst_drop = f64::INFINITY;
    let mut worst_diag = 0.0f64;
    for i in 0..10 {
        for j in i..10 {
            let s = ctx.s(Scheme::Fb { gamma_c_i1: axis[i], gamma_c_i2: axis[j] });
            worst_drop = worst_drop.min(s - base);
            if i == j {
                worst_diag = worst_diag.max((s - base).abs());
            }
        }
    }
    let pa = strictly_increasing(&a);
    let pb = strictly_increasing(&b_i) && strictly_increasing(&b_s);
    let pc = worst_drop >= -1e-3 && worst_diag <= 1e-3;
    let fmt = |v: &[f64]| v.iter().map(|&x| sig(x, 5)).collect::<Vec<_>>().join(" ");
    Outcome {
        pass: pa && pb && pc,
        detail: format!(
            "(a) fc phi=0 S = [{}] {}; (b) fc phi=pi idler S = [{}], signal S = [{}] {}; \
             (c) fb min S - S_base = {}, max diagonal |S - S_base| = {} {}",
            fmt(&a),
            if pa { "ok" } else { "miss" },
            fmt(&b_i),
            fmt(&b_s),
            if pb { "ok" } else { "miss" },
            sig(worst_drop, 3),
            sig(worst_diag, 3),
            if pc { "ok" } else { "miss" }
        ),
    }
}

fn c7(ctx: &Ctx) -> Outcome {
    let presets = [
        ("base", BASE),
        ("fa", Scheme::Fa { gamma_c_s1: 1.0, gamma_c_i2: 1.0 }),
        ("fb", Scheme::Fb { gamma_c_i1: 0.5, gamma_c_i2: 2.0 }),
        ("fc", fc(PI, 1.0, Axis::Idler)),
        ("fd", FD),
        ("fe", FE),
        ("fs", FS0),
    ];
    let mut worst_rel = 0.0f64;
    let mut worst_s = 0.0f64;
    let mut worst_name = "";
    for (name, scheme) in presets {
        let svd = ctx.svd(scheme, POINTS);
        let kern = decompose(&ctx.field(scheme, POINTS), Backend::KernelEigen, &SchmidtOptions::default()).unwrap();
        for n in 0..20.min(svd.lambdas.len()) {
            let rel = (svd.lambdas[n] - kern.lambdas[n]).abs() / svd.lambdas[n];
            if rel > worst_rel {
                worst_rel = rel;
                worst_name = name;
            }
        }
        worst_s = worst_s.max((svd.entropy - kern.entropy).abs());
    }
    Outcome {
        pass: worst_rel <= 1e-8 && worst_s <= 1e-6,
        detail: format!(
            "7 presets: max top-20 relative lambda gap = {} ({worst_name}) <= 1e-8, max |dS| = {} <= 1e-6",
            sig(worst_rel, 3),
            sig(worst_s, 3)
        ),
    }
}

fn c8() -> Outcome {
    let (a, b) = (1.0f64, 3.0f64);
    let mu = ((b - a) / (b + a)).powi(2);
    let g = FrequencyGrid::new(20.0, 256).unwrap();
    let f = SpectralField::from_fn(&g, &g, |x, y| {
        Complex64::new((-(x + y).powi(2) / (4.0 * a * a) - (x - y).powi(2) / (4.0 * b * b)).exp(), 0.0)
    })
    .unwrap();
    let r = decompose(&f, Backend::DirectSvd, &SchmidtOptions::default()).unwrap();
    let ratios: Vec<f64> = r.lambdas.windows(2).take(8).map(|w| w[1] / w[0]).collect();
    let fitted = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Outcome {
        pass: (fitted - mu).abs() <= 1e-6,
        detail: format!(
            "(a, b) = (1, 3): fitted mu = {} vs {} (|d| = {})",
            sig(fitted, 10),
            mu,
            sig((fitted - mu).abs(), 3)
        ),
    }
}

fn c9(ctx: &Ctx) -> Outcome {
    let items = [
        ("baseline", BASE),
        ("fe", FE),
        ("fd", FD),
        ("iterated gc=5", ITER5),
        ("iterated gc=1", ITER1),
        ("fs phi=0", FS0),
    ];
    let schemes: Vec<Scheme> = items.iter().map(|(_, s)| *s).collect();
    ctx.prefetch(&schemes, POINTS);
    ctx.prefetch(&schemes, FINE_POINTS);
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, scheme) in items {
        let d = (ctx.svd(scheme, FINE_POINTS).entropy - ctx.svd(scheme, POINTS).entropy).abs();
        pass &= d < 1e-3;
        parts.push(format!("{name} {}", sig(d, 3)));
    }
    Outcome { pass, detail: format!("|S(4096) - S(2048)| < 1e-3: {}", parts.join(", ")) }
}

fn c10() -> Outcome {
    let physical = PhysicalParams::default();
    let g = FrequencyGrid::new(SPAN, 96).unwrap();
    let lw = || prop_oneof![0.05f64..20.0, Just(1.0), Just(5.0)];
    let phase = || prop_oneof![0.0f64..TAU, Just(0.0), Just(PI)];
    let target = || prop_oneof![Just(Axis::Idler), Just(Axis::Signal)];
    let scheme = prop_oneof![
        (lw(), lw()).prop_map(|(a, b)| Scheme::Fa { gamma_c_s1: a, gamma_c_i2: b }),
        (lw(), lw()).prop_map(|(a, b)| Scheme::Fb { gamma_c_i1: a, gamma_c_i2: b }),
        (phase(), lw(), target()).prop_map(|(phi, gamma_c, target)| Scheme::Fc { phi, gamma_c, target }),
        (lw(), lw()).prop_map(|(a, b)| Scheme::Fd { gamma_c_i2: a, gamma_c_s2: b }),
        lw().prop_map(|gamma_c| Scheme::Fe { gamma_c }),
        phase().prop_map(|phi| Scheme::Fs { phi }),
        (1u32..=6, lw(), lw()).prop_map(|(stages, a, b)| Scheme::Iterated { stages, gamma_c_i: a, gamma_c_s: b }),
    ];
    let worst = RefCell::new(0.0f64);
    let mut runner = TestRunner::new_with_rng(
        Config { cases: 140, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let result = runner.run(&scheme, |s| {
        let preset = build_preset(&s.into(), &physical, &g, &g).unwrap();
        let via_dsl = Pipeline::Expr(s.canonical_expr()).build(&physical, &g, &g).unwrap();
        let d = preset.max_abs_diff(&via_dsl);
        let mut w = worst.borrow_mut();
        *w = w.max(d);
        prop_assert!(d <= 1e-12, "{:?}: {}", s, d);
        Ok(())
    });
    let worst = *worst.borrow();
    Outcome {
        pass: result.is_ok(),
        detail: match result {
            Ok(()) => format!("140 random presets (fa..fs, iterated): max |preset - dsl| = {} <= 1e-12", sig(worst, 3)),
            Err(e) => format!("{e}"),
        },
    }
}

fn main() -> ExitCode {
    let ctx = Ctx::new();
    let mut failures = Vec::new();
    let t = Instant::now();
    report("1", "baseline entropy", t, c1(&ctx), &mut failures);
    let t = Instant::now();
    report("2", "fe headline", t, c2(&ctx), &mut failures);
    let t = Instant::now();
    report("3", "fd entropy", t, c3(&ctx), &mut failures);
    let t = Instant::now();
    report("4", "iterated cascade purity", t, c4(&ctx), &mut failures);
    let t = Instant::now();
    report("5", "symmetrization phase sweep", t, c5(&ctx), &mut failures);
    let t = Instant::now();
    report("6", "monotonicity", t, c6(&ctx), &mut failures);
    let t = Instant::now();
    report("7", "backend agreement", t, c7(&ctx), &mut failures);
    let t = Instant::now();
    report("8", "double-gaussian oracle", t, c8(), &mut failures);
    let t = Instant::now();
    report("9", "grid convergence", t, c9(&ctx), &mut failures);
    let t = Instant::now();
    report("10", "dsl equivalence", t, c10(), &mut failures);
    if failures.is_empty() {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {}", failures.join(", "));
        ExitCode::FAILURE
    }
}
