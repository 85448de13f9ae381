use biphoton::schmidt::{idler_kernel, kernel_eigenvalues, normalize, signal_kernel};
use biphoton::{
    base_spectral, decompose, Backend, Complex64, FrequencyGrid, PhysicalParams, SchmidtOptions, SchmidtResult,
    SpectralField,
};

fn both(field: &SpectralField, opts: SchmidtOptions) -> [SchmidtResult; 2] {
    [Backend::DirectSvd, Backend::KernelEigen].map(|b| decompose(field, b, &opts).unwrap())
}

fn double_gaussian(a: f64, b: f64, grid: &FrequencyGrid) -> SpectralField {
    SpectralField::from_fn(grid, grid, |x, y| {
        Complex64::new((-(x + y).powi(2) / (4.0 * a * a) - (x - y).powi(2) / (4.0 * b * b)).exp(), 0.0)
    })
    .unwrap()
}

fn quad_normalized(grid: &FrequencyGrid, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
    let v: Vec<Complex64> = grid.nodes().iter().map(|&x| f(x)).collect();
    let n: f64 = v.iter().zip(grid.weights()).map(|(z, w)| z.norm_sqr() * w).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

#[test]
fn separable_field_has_one_mode() {
    let g = FrequencyGrid::new(40.0, 128).unwrap();
    let f = SpectralField::from_fn(&g, &g, |x, y| Complex64::new((-x * x / 8.0).exp(), 0.0) / Complex64::new(1.5, -y))
        .unwrap();
    for r in both(&f, SchmidtOptions::default()) {
        assert!((r.lambdas[0] - 1.0).abs() < 1e-8, "{:?}: {}", r.backend, r.lambdas[0]);
        assert!(r.entropy.abs() < 1e-8);
        assert!((r.purity - 1.0).abs() < 1e-8);
    }
}

#[test]
fn two_equal_modes() {
    let g = FrequencyGrid::new(30.0, 200).unwrap();
    let g1 = quad_normalized(&g, |x| Complex64::new((-x * x / 4.0).exp(), 0.0));
    let g2 = quad_normalized(&g, |x| Complex64::new(x * (-x * x / 4.0).exp(), 0.0));
    let h1 = quad_normalized(&g, |y| Complex64::new(1.0 / (4.0 + y * y), 0.0));
    let h2 = quad_normalized(&g, |y| Complex64::new(0.0, y * (-y * y / 9.0).exp()));
    let amp = biphoton::Mat::from_fn(g.points(), g.points(), |j, k| (g1[j] * h1[k] + g2[j] * h2[k]) / 2f64.sqrt());
    let f = SpectralField::new(g.clone(), g.clone(), amp).unwrap();
    for r in both(&f, SchmidtOptions::default()) {
        assert!((r.lambdas[0] - 0.5).abs() < 1e-8 && (r.lambdas[1] - 0.5).abs() < 1e-8, "{:?}", &r.lambdas[..2]);
        assert!((r.entropy - 1.0).abs() < 1e-8);
        assert!((r.purity - 0.5).abs() < 1e-8);
    }
}

#[test]
fn double_gaussian_is_geometric() {
    let (a, b) = (1.0f64, 3.0f64);
    let mu = ((b - a) / (b + a)).powi(2);
    let g = FrequencyGrid::new(20.0, 256).unwrap();
    for r in both(&double_gaussian(a, b, &g), SchmidtOptions::default()) {
        let ratios: Vec<f64> = r.lambdas.windows(2).take(6).map(|w| w[1] / w[0]).collect();
        let fitted = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((fitted - mu).abs() < 1e-6, "{:?}: fitted {fitted} vs {mu}", r.backend);
        for (n, l) in r.lambdas.iter().take(6).enumerate() {
            assert!((l - (1.0 - mu) * mu.powi(n as i32)).abs() < 1e-8);
        }
    }
}

#[test]
fn signal_and_idler_kernels_share_spectrum() {
    let g = FrequencyGrid::new(40.0, 256).unwrap();
    let f = double_gaussian(1.0, 8.0, &g);
    let k1 = kernel_eigenvalues(&signal_kernel(&f).unwrap()).unwrap();
    let k2 = kernel_eigenvalues(&idler_kernel(&f).unwrap()).unwrap();
    assert!(k1[19] > 1e-6);
    for n in 0..20 {
        assert!((k1[n] - k2[n]).abs() <= 1e-8 * k1[n], "mode {n}: {} vs {}", k1[n], k2[n]);
    }
}

#[test]
fn backends_agree_on_base_field() {
    let g = FrequencyGrid::new(150.0, 256).unwrap();
    let f = base_spectral(&PhysicalParams::default(), &g, &g);
    let [svd, kern] = both(&f, SchmidtOptions::default());
    for n in 0..20 {
        assert!((svd.lambdas[n] - kern.lambdas[n]).abs() <= 1e-8 * svd.lambdas[n], "mode {n}");
    }
    assert!((svd.entropy - kern.entropy).abs() < 1e-6);
}

#[test]
fn modes_are_orthonormal_and_reconstruct() {
    let g = FrequencyGrid::new(150.0, 128).unwrap();
    let f = normalize(&base_spectral(&PhysicalParams::default(), &g, &g)).unwrap();
    for r in both(&f, SchmidtOptions { max_modes: 200, keep_modes: 200 }) {
        let modes = r.modes.as_ref().unwrap();
        assert_eq!(modes.count(), r.lambdas.len());
        let w = g.weights();
        for basis in [&modes.signal, &modes.idler] {
            for m in 0..10 {
                for n in 0..10 {
                    let ip: Complex64 = (0..g.points()).map(|j| basis[(j, m)].conj() * basis[(j, n)] * w[j]).sum();
                    let expect = if m == n { 1.0 } else { 0.0 };
                    assert!((ip - expect).norm() < 1e-6, "{:?} <{m}|{n}> = {ip}", r.backend);
                }
            }
        }
        let mut err = 0.0;
        for j in 0..g.points() {
            for k in 0..g.points() {
                let rec: Complex64 =
                    (0..modes.count()).map(|n| r.lambdas[n].sqrt() * modes.signal[(j, n)] * modes.idler[(k, n)]).sum();
                err += (rec - f.at(j, k)).norm_sqr() * w[j] * w[k];
            }
        }
        assert!(err.sqrt() < 1e-6, "{:?}: L2 error {}", r.backend, err.sqrt());
    }
}

#[test]
fn invariant_under_global_phase_and_scale() {
    let g = FrequencyGrid::new(150.0, 128).unwrap();
    let f = base_spectral(&PhysicalParams::default(), &g, &g);
    let c = Complex64::from_polar(7.0, 0.3);
    let scaled =
        SpectralField::from_fn(&g, &g, |x, y| c * biphoton::base_amplitude(&PhysicalParams::default(), x, y)).unwrap();
    let [a, _] = both(&f, SchmidtOptions::default());
    let [b, _] = both(&scaled, SchmidtOptions::default());
    assert!((a.entropy - b.entropy).abs() < 1e-10);
    assert!((a.purity - b.purity).abs() < 1e-10);
}

#[test]
fn low_entropy_implies_dominant_mode() {
    let g = FrequencyGrid::new(40.0, 128).unwrap();
    for (a, b) in [(1.0, 1.0), (1.0, 1.001), (1.0, 2.0)] {
        let r = decompose(&double_gaussian(a, b, &g), Backend::DirectSvd, &SchmidtOptions::default()).unwrap();
        if r.entropy < 1e-8 {
            assert!(r.lambdas[0] > 1.0 - 1e-8);
            assert!((r.purity - 1.0).abs() < 1e-8);
        } else {
            assert!(r.purity < 1.0);
        }
    }
}

#[test]
fn zero_field_is_degenerate() {
    let g = FrequencyGrid::new(10.0, 16).unwrap();
    let f = SpectralField::from_fn(&g, &g, |_, _| Complex64::new(0.0, 0.0)).unwrap();
    for b in [Backend::DirectSvd, Backend::KernelEigen] {
        assert!(matches!(decompose(&f, b, &SchmidtOptions::default()), Err(biphoton::Error::Degenerate(_))));
    }
}
