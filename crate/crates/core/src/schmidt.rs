//! Schmidt decomposition of a joint spectral amplitude.
//!
//! The amplitude is normalized under the grid quadrature and discretized as
//! `M = diag(√w_s) F diag(√w_i)`, so that singular vectors of `M` divided by
//! `√w` are orthonormal under the same quadrature. Two routes produce the
//! Schmidt spectrum:
//!
//! * [`Backend::DirectSvd`]: `λ_n = σ_n(M)²`.
//! * [`Backend::KernelEigen`]: eigen-decomposition of the one-photon kernel
//!   `K₁ = M Mᴴ` (signal) with eigenvalues refined as `‖Mᴴ u_n‖²`.
//!
//! The routes share nothing beyond `M`, which makes each the other's check.

use std::fmt;
use std::str::FromStr;

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Accum, Mat, MatRef, Par};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Eigenvalues in `(-CLAMP, 0)` are rounding noise and become 0.
pub const NEGATIVE_CLAMP: f64 = 1e-10;
/// Retained modes stop once their cumulative weight exceeds `1 - CUTOFF`.
pub const CUMULATIVE_CUTOFF: f64 = 1e-12;
/// Terms below this contribute nothing to the entropy.
pub const ENTROPY_FLOOR: f64 = 1e-15;
pub const DEFAULT_MAX_MODES: usize = 200;

const KERNEL_HERMITIAN_TOL: f64 = 1e-8;
const NORMALIZATION_TOL: f64 = 1e-6;

// Thread count never changes the numbers.
const PAR: Par = Par::Seq;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Backend {
    #[serde(rename = "kernel")]
    KernelEigen,
    #[default]
    #[serde(rename = "svd")]
    DirectSvd,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::KernelEigen => "kernel",
            Backend::DirectSvd => "svd",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(Backend::DirectSvd),
            "kernel" => Ok(Backend::KernelEigen),
            other => Err(Error::config(format!("unknown backend '{other}' (expected svd or kernel)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchmidtOptions {
    /// Upper bound on retained eigenvalues.
    pub max_modes: usize,
    /// Number of mode functions to return (0 skips them).
    pub keep_modes: usize,
}

impl Default for SchmidtOptions {
    fn default() -> Self {
        Self { max_modes: DEFAULT_MAX_MODES, keep_modes: 0 }
    }
}

/// Grid-sampled Schmidt modes; column `n` holds mode `n`.
#[derive(Clone, Debug)]
pub struct SchmidtModes {
    /// ψ_n(Δω_s), rows follow the signal grid.
    pub signal: Mat<Complex64>,
    /// φ_n(Δω_i), rows follow the idler grid.
    pub idler: Mat<Complex64>,
}

impl SchmidtModes {
    pub fn count(&self) -> usize {
        self.signal.ncols()
    }
}

#[derive(Clone, Debug)]
pub struct SchmidtResult {
    /// Retained Schmidt eigenvalues, descending.
    pub lambdas: Vec<f64>,
    /// Entanglement entropy in bits.
    pub entropy: f64,
    /// Single-photon purity `Σ λ²`.
    pub purity: f64,
    /// `1 - Σ lambdas`: weight dropped by truncation.
    pub tail: f64,
    pub modes: Option<SchmidtModes>,
    pub backend: Backend,
}

impl SchmidtResult {
    fn from_spectrum(raw: Vec<f64>, max_modes: usize, backend: Backend) -> Result<Self> {
        let lambdas = truncate(clamp_spectrum(raw)?, max_modes);
        let total: f64 = lambdas.iter().sum();
        Ok(Self {
            entropy: entropy_unchecked(&lambdas),
            purity: purity_unchecked(&lambdas),
            tail: 1.0 - total,
            lambdas,
            modes: None,
            backend,
        })
    }

    /// Schmidt number `1 / purity`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.purity
    }
}

fn clamp_spectrum(mut values: Vec<f64>) -> Result<Vec<f64>> {
    for (n, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::numerical(format!("Schmidt eigenvalue {n} is not finite")));
        }
        if *v < -NEGATIVE_CLAMP {
            return Err(Error::numerical(format!("Schmidt eigenvalue {n} is negative ({v:e})")));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

fn truncate(values: Vec<f64>, max_modes: usize) -> Vec<f64> {
    let mut kept = Vec::with_capacity(max_modes.min(values.len()));
    let mut cumulative = 0.0;
    for v in values.into_iter().take(max_modes) {
        kept.push(v);
        cumulative += v;
        if cumulative > 1.0 - CUMULATIVE_CUTOFF {
            break;
        }
    }
    kept
}

fn check_normalized(lambdas: &[f64]) -> Result<()> {
    let total: f64 = lambdas.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || !total.is_finite() {
        return Err(Error::Contract(format!("Schmidt eigenvalues sum to {total}, expected 1")));
    }
    Ok(())
}

fn entropy_unchecked(lambdas: &[f64]) -> f64 {
    lambdas.iter().filter(|&&l| l >= ENTROPY_FLOOR).map(|&l| -l * l.log2()).sum::<f64>().max(0.0)
}

fn purity_unchecked(lambdas: &[f64]) -> f64 {
    lambdas.iter().map(|l| l * l).sum()
}

/// `S = -Σ λ log₂ λ`. Fails unless the eigenvalues sum to one within 1e-6.
pub fn entropy(lambdas: &[f64]) -> Result<f64> {
    check_normalized(lambdas)?;
    Ok(entropy_unchecked(lambdas))
}

/// `Tr ρ² = Σ λ²`. Fails unless the eigenvalues sum to one within 1e-6.
pub fn purity(lambdas: &[f64]) -> Result<f64> {
    check_normalized(lambdas)?;
    Ok(purity_unchecked(lambdas))
}

/// Rescales so that `∬ |f|² = 1` under the grid quadrature.
pub fn normalize(field: &SpectralField) -> Result<SpectralField> {
    let norm_sqr = field.norm_sqr();
    if !norm_sqr.is_finite() {
        return Err(Error::numerical("field norm is not finite"));
    }
    if norm_sqr == 0.0 || norm_sqr < f64::MIN_POSITIVE {
        return Err(Error::Degenerate("field vanishes everywhere (fully destructive network)".into()));
    }
    let scale = norm_sqr.sqrt().recip();
    let amplitude = field.amplitude() * faer::Scale(Complex64::new(scale, 0.0));
    SpectralField::new(field.grid_s().clone(), field.grid_i().clone(), amplitude)
}

/// `√w_s[j] f[j][k] √w_i[k]` of the normalized field.
pub fn weighted_matrix(field: &SpectralField) -> Result<Mat<Complex64>> {
    let normalized = normalize(field)?;
    let ws: Vec<f64> = field.grid_s().weights().iter().map(|w| w.sqrt()).collect();
    let wi: Vec<f64> = field.grid_i().weights().iter().map(|w| w.sqrt()).collect();
    let a = normalized.amplitude();
    Ok(Mat::from_fn(ws.len(), wi.len(), |j, k| a[(j, k)] * (ws[j] * wi[k])))
}

fn mode_count(opts: &SchmidtOptions, available: usize) -> usize {
    opts.keep_modes.min(available)
}

/// Schmidt decomposition with the chosen backend.
pub fn decompose(field: &SpectralField, backend: Backend, opts: &SchmidtOptions) -> Result<SchmidtResult> {
    if opts.max_modes == 0 {
        return Err(Error::config("max_modes must be at least 1"));
    }
    let m = weighted_matrix(field)?;
    let mut result = match backend {
        Backend::DirectSvd => svd_route(m.as_ref(), opts)?,
        Backend::KernelEigen => kernel_route(m.as_ref(), opts)?,
    };
    if let Some(modes) = result.modes.as_mut() {
        unweight(modes, field);
    }
    Ok(result)
}

pub fn decompose_svd(field: &SpectralField, max_modes: usize) -> Result<SchmidtResult> {
    decompose(field, Backend::DirectSvd, &SchmidtOptions { max_modes, keep_modes: 0 })
}

pub fn decompose_kernel(field: &SpectralField, max_modes: usize) -> Result<SchmidtResult> {
    decompose(field, Backend::KernelEigen, &SchmidtOptions { max_modes, keep_modes: 0 })
}

// Weighted singular vectors -> grid-sampled mode functions.
fn unweight(modes: &mut SchmidtModes, field: &SpectralField) {
    for (mat, weights) in [(&mut modes.signal, field.grid_s().weights()), (&mut modes.idler, field.grid_i().weights())]
    {
        for n in 0..mat.ncols() {
            for (j, w) in weights.iter().enumerate() {
                mat[(j, n)] /= w.sqrt();
            }
        }
    }
}

fn svd_route(m: MatRef<'_, Complex64>, opts: &SchmidtOptions) -> Result<SchmidtResult> {
    let (rows, cols) = m.shape();
    let size = rows.min(cols);
    let want_vectors = opts.keep_modes > 0;
    let flag = if want_vectors { ComputeSvdVectors::Thin } else { ComputeSvdVectors::No };
    let mut s = Diag::<Complex64>::zeros(size);
    let mut u = want_vectors.then(|| Mat::<Complex64>::zeros(rows, size));
    let mut v = want_vectors.then(|| Mat::<Complex64>::zeros(cols, size));
    let mut mem = MemBuffer::new(svd::svd_scratch::<Complex64>(rows, cols, flag, flag, PAR, Default::default()));
    svd::svd(
        m,
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        v.as_mut().map(|v| v.as_mut()),
        PAR,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::numerical(format!("SVD of {rows}x{cols} weighted amplitude failed: {e:?}")))?;
    let raw: Vec<f64> = s.column_vector().iter().map(|x| x.re * x.re).collect();
    let mut result = SchmidtResult::from_spectrum(raw, opts.max_modes, Backend::DirectSvd)?;
    if let (Some(u), Some(v)) = (u, v) {
        let n = mode_count(opts, result.lambdas.len());
        result.modes = Some(SchmidtModes {
            signal: u.subcols(0, n).to_owned(),
            idler: Mat::from_fn(cols, n, |k, c| v[(k, c)].conj()),
        });
    }
    Ok(result)
}

fn hermitian_defect(k: MatRef<'_, Complex64>) -> (f64, f64) {
    let n = k.nrows();
    let mut defect: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for c in 0..n {
        for r in c..n {
            defect = defect.max((k[(r, c)] - k[(c, r)].conj()).norm());
            scale = scale.max(k[(r, c)].norm());
        }
    }
    (defect, scale)
}

/// Discretized signal kernel `K₁ = M Mᴴ`, i.e. `√w K₁(ω, ω') √w'`.
pub fn signal_kernel(field: &SpectralField) -> Result<Mat<Complex64>> {
    let m = weighted_matrix(field)?;
    Ok(gram(m.as_ref()))
}

/// Discretized idler kernel `K₂ = Mᵀ M*`.
pub fn idler_kernel(field: &SpectralField) -> Result<Mat<Complex64>> {
    let m = weighted_matrix(field)?;
    Ok(gram(m.transpose()))
}

fn gram(m: MatRef<'_, Complex64>) -> Mat<Complex64> {
    let mut k = Mat::<Complex64>::zeros(m.nrows(), m.nrows());
    matmul(k.as_mut(), Accum::Replace, m, m.adjoint(), Complex64::new(1.0, 0.0), PAR);
    k
}

fn hermitian_eigen(k: MatRef<'_, Complex64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<Complex64>>)> {
    let n = k.nrows();
    let (defect, scale) = hermitian_defect(k);
    if defect > KERNEL_HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::numerical(format!(
            "discretized kernel is not Hermitian (defect {defect:e} vs scale {scale:e})"
        )));
    }
    let flag = if vectors { ComputeEigenvectors::Yes } else { ComputeEigenvectors::No };
    let mut s = Diag::<Complex64>::zeros(n);
    let mut u = vectors.then(|| Mat::<Complex64>::zeros(n, n));
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<Complex64>(n, flag, PAR, Default::default()));
    evd::self_adjoint_evd(
        k,
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        PAR,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::numerical(format!("kernel eigen-decomposition failed: {e:?}")))?;
    // faer returns ascending order
    let values: Vec<f64> = s.column_vector().iter().rev().map(|x| x.re).collect();
    let u = u.map(|u| Mat::from_fn(n, n, |r, c| u[(r, n - 1 - c)]));
    Ok((values, u))
}

/// Eigenvalues of a discretized kernel, descending.
pub fn kernel_eigenvalues(kernel: &Mat<Complex64>) -> Result<Vec<f64>> {
    Ok(hermitian_eigen(kernel.as_ref(), false)?.0)
}

fn kernel_route(m: MatRef<'_, Complex64>, opts: &SchmidtOptions) -> Result<SchmidtResult> {
    let (rows, cols) = m.shape();
    let kernel = gram(m);
    let (mut values, vectors) = hermitian_eigen(kernel.as_ref(), true)?;
    let vectors = vectors.expect("eigenvectors requested");

    // Rayleigh quotient through the factored kernel: u† K₁ u = ‖M† u‖².
    // Accurate relative to each eigenvalue instead of relative to λ₁.
    let refine = opts.max_modes.min(rows).min(cols);
    let top = vectors.subcols(0, refine);
    let mut projected = Mat::<Complex64>::zeros(cols, refine);
    matmul(projected.as_mut(), Accum::Replace, m.adjoint(), top, Complex64::new(1.0, 0.0), PAR);
    for (n, value) in values.iter_mut().take(refine).enumerate() {
        *value = projected.col(n).iter().map(|z| z.norm_sqr()).sum();
    }

    let mut result = SchmidtResult::from_spectrum(values.clone(), opts.max_modes, Backend::KernelEigen)?;
    let n = mode_count(opts, result.lambdas.len());
    if n > 0 {
        // The refined values may reorder near-degenerate pairs; keep each
        // vector with its own eigenvalue.
        let mut order: Vec<usize> = (0..refine).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let signal = Mat::from_fn(rows, n, |r, c| vectors[(r, order[c])]);
        // φ_n = Mᵀ conj(u_n) / σ_n = conj(M† u_n) / σ_n
        let idler = Mat::from_fn(cols, n, |k, c| {
            let sigma = values[order[c]].sqrt();
            if sigma > 0.0 {
                projected[(k, order[c])].conj() / sigma
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        result.modes = Some(SchmidtModes { signal, idler });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FrequencyGrid, PhysicalParams};
    use crate::spectral::base_spectral;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn entropy_purity_examples() {
        assert_eq!(entropy(&[1.0]).unwrap(), 0.0);
        assert_eq!(purity(&[1.0]).unwrap(), 1.0);
        assert_relative_eq!(entropy(&[0.5, 0.5]).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(purity(&[0.5, 0.5]).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(entropy(&[0.25; 4]).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(purity(&[0.25; 4]).unwrap(), 0.25, max_relative = 1e-15);
        assert_eq!(entropy(&[1.0, 1e-16]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_rejects_unnormalized() {
        assert!(matches!(entropy(&[0.5, 0.4]), Err(Error::Contract(_))));
        assert!(matches!(purity(&[1.5]), Err(Error::Contract(_))));
        assert!(entropy(&[0.5, 0.5 + 5e-7]).is_ok());
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_spectrum(vec![0.9, -5e-11, 0.1]).unwrap(), vec![0.9, 0.1, 0.0]);
        assert!(clamp_spectrum(vec![1.0, -1e-9]).is_err());
        assert!(clamp_spectrum(vec![f64::NAN]).is_err());
    }

    #[test]
    fn truncation_rules() {
        assert_eq!(truncate(vec![0.5, 0.3, 0.2], 2), vec![0.5, 0.3]);
        assert_eq!(truncate(vec![1.0 - 1e-13, 1e-13, 0.0], 10), vec![1.0 - 1e-13]);
        assert_eq!(truncate(vec![0.5, 0.5 - 1e-11, 1e-11], 10).len(), 3);
    }

    #[test]
    fn normalization() {
        let g = FrequencyGrid::new(30.0, 40).unwrap();
        let f = base_spectral(&PhysicalParams::default(), &g, &g);
        let n = normalize(&f).unwrap();
        assert_relative_eq!(n.norm_sqr(), 1.0, max_relative = 1e-12);
        assert!(normalize(&n).unwrap().max_abs_diff(&n) < 1e-12);
        let scaled = crate::modulation::apply_factor(&f, |_, _| Complex64::new(7.0, 0.0));
        assert!(normalize(&scaled).unwrap().max_abs_diff(&n) < 1e-12);
        let zero = crate::modulation::apply_factor(&f, |_, _| Complex64::new(0.0, 0.0));
        assert!(matches!(normalize(&zero), Err(Error::Degenerate(_))));
        assert!(matches!(decompose_svd(&zero, 10), Err(Error::Degenerate(_))));
    }

    #[test]
    fn backend_names() {
        assert_eq!("svd".parse::<Backend>().unwrap(), Backend::DirectSvd);
        assert_eq!("kernel".parse::<Backend>().unwrap(), Backend::KernelEigen);
        assert!("qr".parse::<Backend>().is_err());
        assert_eq!(Backend::default(), Backend::DirectSvd);
    }

    #[test]
    fn zero_max_modes_is_config_error() {
        let g = FrequencyGrid::new(30.0, 16).unwrap();
        let f = base_spectral(&PhysicalParams::default(), &g, &g);
        assert!(decompose_svd(&f, 0).unwrap_err().is_config());
    }

    proptest! {
        #[test]
        fn entropy_and_purity_are_recomputable(raw in proptest::collection::vec(0.0f64..1.0, 1..30)) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-3);
            let lambdas: Vec<f64> = raw.iter().map(|v| v / total).collect();
            let r = SchmidtResult::from_spectrum(lambdas.clone(), 200, Backend::DirectSvd).unwrap();
            prop_assert!((r.lambdas.iter().sum::<f64>() - 1.0).abs() < 1e-8);
            prop_assert!((entropy(&r.lambdas).unwrap() - r.entropy).abs() < 1e-10);
            prop_assert!((purity(&r.lambdas).unwrap() - r.purity).abs() < 1e-10);
            prop_assert!(r.entropy >= 0.0 && r.purity > 0.0 && r.purity <= 1.0 + 1e-12);
            prop_assert!(r.lambdas.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn flattening_two_modes_lowers_purity(p in 0.5f64..0.999, q in 0.0f64..1.0) {
            // Moving weight from the larger to the smaller mode raises S and lowers purity.
            let p2 = 0.5 + (p - 0.5) * q;
            prop_assume!(p - p2 > 1e-9);
            let (a, b) = ([p, 1.0 - p], [p2, 1.0 - p2]);
            prop_assert!(purity(&b).unwrap() < purity(&a).unwrap());
            prop_assert!(entropy(&b).unwrap() > entropy(&a).unwrap());
        }
    }
}
