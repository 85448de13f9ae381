//! Cavity, phase and multiplexing modulation of a joint spectral amplitude.
//!
//! Every scheme here multiplies the cascade amplitude by a bracket built from
//! lossless single-sided cavity transfers and constant phases, or adds the
//! argument-swapped amplitude for non-discriminating detection.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PhysicalParams};
use crate::spectral::{base_spectral, SpectralField};

/// Which photon a cavity (or any single-axis factor) acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "s")]
    Signal,
    #[serde(rename = "i")]
    Idler,
}

impl Axis {
    pub fn symbol(self) -> &'static str {
        match self {
            Axis::Signal => "s",
            Axis::Idler => "i",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "s" | "signal" => Ok(Axis::Signal),
            "i" | "idler" => Ok(Axis::Idler),
            other => Err(Error::config(format!("unknown cavity target '{other}' (expected s or i)"))),
        }
    }
}

/// Lossless cavity transfer `-(Γc + 2iΔω) / (Γc - 2iΔω)`. Unit modulus, equal
/// to -1 on resonance and tending to +1 far off resonance.
pub fn cavity_transfer(delta: f64, gamma_c: f64) -> Result<Complex64> {
    check_linewidth(gamma_c)?;
    Ok(transfer(delta, gamma_c))
}

#[inline]
pub(crate) fn transfer(delta: f64, gamma_c: f64) -> Complex64 {
    -Complex64::new(gamma_c, 2.0 * delta) / Complex64::new(gamma_c, -2.0 * delta)
}

pub(crate) fn check_linewidth(gamma_c: f64) -> Result<()> {
    if gamma_c.is_finite() && gamma_c > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("cavity linewidth must be positive and finite, got {gamma_c}")))
    }
}

/// `e^{iφ}`, with φ = π mapped to exactly -1.
pub fn unit_phase(phi: f64) -> Complex64 {
    if phi == PI {
        Complex64::new(-1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, phi)
    }
}

/// A cavity of linewidth `gamma_c` on one photon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec {
    pub target: Axis,
    pub gamma_c: f64,
}

impl CavitySpec {
    pub fn new(target: Axis, gamma_c: f64) -> Result<Self> {
        check_linewidth(gamma_c)?;
        Ok(Self { target, gamma_c })
    }

    pub fn factor(&self, ds: f64, di: f64) -> Complex64 {
        match self.target {
            Axis::Signal => transfer(ds, self.gamma_c),
            Axis::Idler => transfer(di, self.gamma_c),
        }
    }

    /// Transfer sampled on the grid of the target axis.
    pub fn sample(&self, grid: &FrequencyGrid) -> Vec<Complex64> {
        grid.nodes().iter().map(|&w| transfer(w, self.gamma_c)).collect()
    }
}

/// Multiplies every sample by `factor(Δω_s, Δω_i)`.
pub fn apply_factor(field: &SpectralField, factor: impl Fn(f64, f64) -> Complex64) -> SpectralField {
    let (xs, ys) = (field.grid_s().nodes(), field.grid_i().nodes());
    let a = field.amplitude();
    let amplitude = Mat::from_fn(xs.len(), ys.len(), |j, k| a[(j, k)] * factor(xs[j], ys[k]));
    SpectralField::from_parts_unchecked(field.grid_s().clone(), field.grid_i().clone(), amplitude)
}

/// Multiplies by a separable bracket `g(C_s[j], C_i[k])` given per-axis samples.
fn apply_axis_bracket(
    field: &SpectralField,
    signal: &[Complex64],
    idler: &[Complex64],
    bracket: impl Fn(Complex64, Complex64) -> Complex64,
) -> SpectralField {
    let a = field.amplitude();
    let amplitude = Mat::from_fn(signal.len(), idler.len(), |j, k| a[(j, k)] * bracket(signal[j], idler[k]));
    SpectralField::from_parts_unchecked(field.grid_s().clone(), field.grid_i().clone(), amplitude)
}

/// `f(Δω₂, Δω₁)`: transposes the amplitude. Both axes must share a grid.
pub fn swap_arguments(field: &SpectralField) -> Result<SpectralField> {
    if !field.has_shared_axis() {
        return Err(Error::config("symmetrization requires a shared detector axis (signal and idler grids differ)"));
    }
    let amplitude = field.amplitude().transpose().to_owned();
    Ok(SpectralField::from_parts_unchecked(field.grid_i().clone(), field.grid_s().clone(), amplitude))
}

/// Coherent sum `Σ_m e^{iφ_m} f_m` of fields on identical grids.
pub fn combine(fields: &[SpectralField], phases: &[f64]) -> Result<SpectralField> {
    if fields.is_empty() {
        return Err(Error::config("combine needs at least one field"));
    }
    if fields.len() != phases.len() {
        return Err(Error::config(format!("combine got {} fields but {} phases", fields.len(), phases.len())));
    }
    let first = &fields[0];
    if let Some(bad) = fields.iter().position(|f| !f.same_grids(first)) {
        return Err(Error::config(format!("field {bad} is sampled on different grids")));
    }
    let weights: Vec<Complex64> = phases.iter().map(|&p| unit_phase(p)).collect();
    let (m, n) = first.shape();
    let amplitude = Mat::from_fn(m, n, |j, k| {
        fields.iter().zip(&weights).fold(Complex64::new(0.0, 0.0), |acc, (f, w)| acc + w * f.at(j, k))
    });
    Ok(SpectralField::from_parts_unchecked(first.grid_s().clone(), first.grid_i().clone(), amplitude))
}

/// Named multiplexing schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetKind {
    /// Single ensemble, no cavity.
    Base,
    Fa,
    Fb,
    Fc,
    Fd,
    Fe,
    Fs,
    Iterated,
}

impl PresetKind {
    pub const ALL: [PresetKind; 8] = [
        PresetKind::Base,
        PresetKind::Fa,
        PresetKind::Fb,
        PresetKind::Fc,
        PresetKind::Fd,
        PresetKind::Fe,
        PresetKind::Fs,
        PresetKind::Iterated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetKind::Base => "base",
            PresetKind::Fa => "fa",
            PresetKind::Fb => "fb",
            PresetKind::Fc => "fc",
            PresetKind::Fd => "fd",
            PresetKind::Fe => "fe",
            PresetKind::Fs => "fs",
            PresetKind::Iterated => "iterated",
        }
    }

    /// Numeric parameters the scheme requires (FC additionally needs a target).
    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            PresetKind::Base => &[],
            PresetKind::Fa => &["gamma_c_s1", "gamma_c_i2"],
            PresetKind::Fb => &["gamma_c_i1", "gamma_c_i2"],
            PresetKind::Fc => &["phi", "gamma_c"],
            PresetKind::Fd => &["gamma_c_i2", "gamma_c_s2"],
            PresetKind::Fe => &["gamma_c"],
            PresetKind::Fs => &["phi"],
            PresetKind::Iterated => &["stages", "gamma_c_i", "gamma_c_s"],
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        PresetKind::ALL
            .into_iter()
            .find(|k| k.name() == lower || (lower.len() == 3 && lower.starts_with("f_") && lower[2..] == k.name()[1..]))
            .ok_or_else(|| Error::config(format!("unknown preset '{s}'")))
    }
}

/// A preset as named parameters, the form used by configs and sweeps.
///
/// Keys are set either exactly (`gamma_c_i2`) or through the aliases
/// `gamma_c` (every linewidth of the scheme), `gamma_c_i` (idler-side
/// linewidths) and `gamma_c_s` (signal-side linewidths).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemePreset {
    pub kind: PresetKind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Axis>,
}

impl SchemePreset {
    pub fn new(kind: PresetKind) -> Self {
        Self { kind, params: BTreeMap::new(), target: None }
    }

    pub fn with(mut self, key: &str, value: f64) -> Result<Self> {
        self.set(key, value)?;
        Ok(self)
    }

    pub fn with_target(mut self, target: Axis) -> Self {
        self.target = Some(target);
        self
    }

    /// Keys `key` resolves to for this scheme.
    pub fn resolve_key(&self, key: &str) -> Result<Vec<&'static str>> {
        let required = self.kind.required_params();
        if let Some(k) = required.iter().find(|k| **k == key) {
            return Ok(vec![k]);
        }
        let side = |k: &str| -> Option<Axis> {
            match k {
                "gamma_c" if self.kind == PresetKind::Fc => self.target,
                "gamma_c" => None,
                _ if k.starts_with("gamma_c_s") => Some(Axis::Signal),
                _ if k.starts_with("gamma_c_i") => Some(Axis::Idler),
                _ => None,
            }
        };
        let linewidths = required.iter().copied().filter(|k| k.starts_with("gamma_c"));
        let keys: Vec<&'static str> = match key {
            "gamma_c" => linewidths.collect(),
            "gamma_c_i" => linewidths.filter(|k| side(k) == Some(Axis::Idler)).collect(),
            "gamma_c_s" => linewidths.filter(|k| side(k) == Some(Axis::Signal)).collect(),
            _ => Vec::new(),
        };
        if keys.is_empty() {
            Err(Error::config(format!("parameter '{key}' does not apply to preset {}", self.kind)))
        } else {
            Ok(keys)
        }
    }

    /// Sets `key` (exact or alias). Stage counts within 1e-9 of an integer
    /// are rounded to it.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let value = if key == "stages" && (value - value.round()).abs() < 1e-9 { value.round() } else { value };
        for k in self.resolve_key(key)? {
            self.params.insert(k.to_string(), value);
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::config(format!("preset {} is missing parameter '{key}'", self.kind)))
    }

    /// Validates the parameters and produces the typed scheme.
    pub fn scheme(&self) -> Result<Scheme> {
        if let Some(extra) = self.params.keys().find(|k| !self.kind.required_params().contains(&k.as_str())) {
            return Err(Error::config(format!("preset {} does not take parameter '{extra}'", self.kind)));
        }
        let scheme = match self.kind {
            PresetKind::Base => Scheme::Base,
            PresetKind::Fa => Scheme::Fa { gamma_c_s1: self.get("gamma_c_s1")?, gamma_c_i2: self.get("gamma_c_i2")? },
            PresetKind::Fb => Scheme::Fb { gamma_c_i1: self.get("gamma_c_i1")?, gamma_c_i2: self.get("gamma_c_i2")? },
            PresetKind::Fc => Scheme::Fc {
                phi: self.get("phi")?,
                gamma_c: self.get("gamma_c")?,
                target: self.target.ok_or_else(|| Error::config("preset fc is missing parameter 'target'"))?,
            },
            PresetKind::Fd => Scheme::Fd { gamma_c_i2: self.get("gamma_c_i2")?, gamma_c_s2: self.get("gamma_c_s2")? },
            PresetKind::Fe => Scheme::Fe { gamma_c: self.get("gamma_c")? },
            PresetKind::Fs => Scheme::Fs { phi: self.get("phi")? },
            PresetKind::Iterated => {
                let stages = self.get("stages")?;
                if stages.fract() != 0.0 || !(1.0..=64.0).contains(&stages) {
                    return Err(Error::config(format!("stages must be an integer in 1..=64, got {stages}")));
                }
                Scheme::Iterated {
                    stages: stages as u32,
                    gamma_c_i: self.get("gamma_c_i")?,
                    gamma_c_s: self.get("gamma_c_s")?,
                }
            }
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

impl From<Scheme> for SchemePreset {
    fn from(s: Scheme) -> Self {
        let mut p = SchemePreset::new(s.kind());
        let mut put = |k: &str, v: f64| {
            p.params.insert(k.to_string(), v);
        };
        match s {
            Scheme::Base => {}
            Scheme::Fa { gamma_c_s1, gamma_c_i2 } => {
                put("gamma_c_s1", gamma_c_s1);
                put("gamma_c_i2", gamma_c_i2);
            }
            Scheme::Fb { gamma_c_i1, gamma_c_i2 } => {
                put("gamma_c_i1", gamma_c_i1);
                put("gamma_c_i2", gamma_c_i2);
            }
            Scheme::Fc { phi, gamma_c, target } => {
                put("phi", phi);
                put("gamma_c", gamma_c);
                p.target = Some(target);
            }
            Scheme::Fd { gamma_c_i2, gamma_c_s2 } => {
                put("gamma_c_i2", gamma_c_i2);
                put("gamma_c_s2", gamma_c_s2);
            }
            Scheme::Fe { gamma_c } => put("gamma_c", gamma_c),
            Scheme::Fs { phi } => put("phi", phi),
            Scheme::Iterated { stages, gamma_c_i, gamma_c_s } => {
                put("stages", stages as f64);
                put("gamma_c_i", gamma_c_i);
                put("gamma_c_s", gamma_c_s);
            }
        }
        p
    }
}

/// Multiplexing schemes with typed parameters. Linewidths in units of Γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Base,
    /// `f [C(Δω_s, Γc_s1) + C(Δω_i, Γc_i2)]`
    Fa {
        gamma_c_s1: f64,
        gamma_c_i2: f64,
    },
    /// `f [C(Δω_i, Γc_i1) + C(Δω_i, Γc_i2)]`
    Fb {
        gamma_c_i1: f64,
        gamma_c_i2: f64,
    },
    /// `f [e^{iφ} + C(Δω_t, Γc)]`
    Fc {
        phi: f64,
        gamma_c: f64,
        target: Axis,
    },
    /// `f [e^{iπ} + C(Δω_i, Γc_i2) C(Δω_s, Γc_s2)]`
    Fd {
        gamma_c_i2: f64,
        gamma_c_s2: f64,
    },
    /// `f [1 - C(Δω_i) - C(Δω_s) + C(Δω_i) C(Δω_s)]`, common linewidth
    Fe {
        gamma_c: f64,
    },
    /// `f(Δω₁, Δω₂) + e^{iφ} f(Δω₂, Δω₁)`
    Fs {
        phi: f64,
    },
    /// `stages` phase-compensated cavity brackets, idler on odd stages and
    /// signal on even ones.
    Iterated {
        stages: u32,
        gamma_c_i: f64,
        gamma_c_s: f64,
    },
}

impl Scheme {
    pub fn kind(&self) -> PresetKind {
        match self {
            Scheme::Base => PresetKind::Base,
            Scheme::Fa { .. } => PresetKind::Fa,
            Scheme::Fb { .. } => PresetKind::Fb,
            Scheme::Fc { .. } => PresetKind::Fc,
            Scheme::Fd { .. } => PresetKind::Fd,
            Scheme::Fe { .. } => PresetKind::Fe,
            Scheme::Fs { .. } => PresetKind::Fs,
            Scheme::Iterated { .. } => PresetKind::Iterated,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let linewidths: &[f64] = match self {
            Scheme::Base | Scheme::Fs { .. } => &[],
            Scheme::Fa { gamma_c_s1, gamma_c_i2 } => &[*gamma_c_s1, *gamma_c_i2],
            Scheme::Fb { gamma_c_i1, gamma_c_i2 } => &[*gamma_c_i1, *gamma_c_i2],
            Scheme::Fc { gamma_c, .. } | Scheme::Fe { gamma_c } => std::slice::from_ref(gamma_c),
            Scheme::Fd { gamma_c_i2, gamma_c_s2 } => &[*gamma_c_i2, *gamma_c_s2],
            Scheme::Iterated { gamma_c_i, gamma_c_s, .. } => &[*gamma_c_i, *gamma_c_s],
        };
        linewidths.iter().try_for_each(|&g| check_linewidth(g))?;
        match self {
            Scheme::Fc { phi, .. } | Scheme::Fs { phi } if !phi.is_finite() => {
                Err(Error::config(format!("phase must be finite, got {phi}")))
            }
            Scheme::Iterated { stages: 0, .. } => Err(Error::config("iterated scheme needs stages >= 1")),
            _ => Ok(()),
        }
    }

    /// Number of atomic ensembles multiplexed by the scheme.
    pub fn ensemble_count(&self) -> u64 {
        match self {
            Scheme::Base => 1,
            Scheme::Fe { .. } => 4,
            Scheme::Iterated { stages, .. } => 1u64 << stages,
            _ => 2,
        }
    }

    /// Applies the scheme to an existing cascade amplitude.
    pub fn apply(&self, base: &SpectralField) -> Result<SpectralField> {
        self.validate()?;
        let (gs, gi) = (base.grid_s(), base.grid_i());
        let cav = |axis: Axis, g: f64| -> Vec<Complex64> {
            let grid = match axis {
                Axis::Signal => gs,
                Axis::Idler => gi,
            };
            grid.nodes().iter().map(|&w| transfer(w, g)).collect()
        };
        let ones = |n: usize| vec![Complex64::new(1.0, 0.0); n];
        let minus_one = Complex64::new(-1.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let out = match *self {
            Scheme::Base => base.clone(),
            Scheme::Fa { gamma_c_s1, gamma_c_i2 } => {
                apply_axis_bracket(base, &cav(Axis::Signal, gamma_c_s1), &cav(Axis::Idler, gamma_c_i2), |s, i| s + i)
            }
            Scheme::Fb { gamma_c_i1, gamma_c_i2 } => {
                let (a, b) = (cav(Axis::Idler, gamma_c_i1), cav(Axis::Idler, gamma_c_i2));
                let sum: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
                apply_axis_bracket(base, &ones(gs.points()), &sum, |_, i| i)
            }
            Scheme::Fc { phi, gamma_c, target } => {
                let e = unit_phase(phi);
                match target {
                    Axis::Idler => {
                        apply_axis_bracket(base, &ones(gs.points()), &cav(Axis::Idler, gamma_c), |_, i| e + i)
                    }
                    Axis::Signal => {
                        apply_axis_bracket(base, &cav(Axis::Signal, gamma_c), &ones(gi.points()), |s, _| e + s)
                    }
                }
            }
            Scheme::Fd { gamma_c_i2, gamma_c_s2 } => {
                apply_axis_bracket(base, &cav(Axis::Signal, gamma_c_s2), &cav(Axis::Idler, gamma_c_i2), |s, i| {
                    minus_one + i * s
                })
            }
            Scheme::Fe { gamma_c } => {
                apply_axis_bracket(base, &cav(Axis::Signal, gamma_c), &cav(Axis::Idler, gamma_c), |s, i| {
                    one - i - s + i * s
                })
            }
            Scheme::Fs { phi } => {
                let swapped = swap_arguments(base)?;
                let e = unit_phase(phi);
                let (a, b) = (base.amplitude(), swapped.amplitude());
                let amplitude = Mat::from_fn(gs.points(), gi.points(), |j, k| a[(j, k)] + e * b[(j, k)]);
                SpectralField::from_parts_unchecked(gs.clone(), gi.clone(), amplitude)
            }
            Scheme::Iterated { stages, gamma_c_i, gamma_c_s } => {
                let (ci, cs) = (cav(Axis::Idler, gamma_c_i), cav(Axis::Signal, gamma_c_s));
                let (one_s, one_i) = (ones(gs.points()), ones(gi.points()));
                let mut field = base.clone();
                for stage in 1..=stages {
                    field = if stage % 2 == 1 {
                        apply_axis_bracket(&field, &one_s, &ci, |_, i| minus_one + i)
                    } else {
                        apply_axis_bracket(&field, &cs, &one_i, |s, _| minus_one + s)
                    };
                }
                field
            }
        };
        Ok(out)
    }

    /// Builds the cascade amplitude and applies the scheme.
    pub fn build(
        &self,
        params: &PhysicalParams,
        grid_s: &FrequencyGrid,
        grid_i: &FrequencyGrid,
    ) -> Result<SpectralField> {
        self.apply(&base_spectral(params, grid_s, grid_i))
    }

    /// The scheme written in the modulation-network language; evaluates to
    /// the same samples as [`Scheme::build`].
    pub fn canonical_expr(&self) -> String {
        let n = crate::netlang::format_number;
        match *self {
            Scheme::Base => "base".to_string(),
            Scheme::Fa { gamma_c_s1, gamma_c_i2 } => {
                format!("base * (cav(s, {}) + cav(i, {}))", n(gamma_c_s1), n(gamma_c_i2))
            }
            Scheme::Fb { gamma_c_i1, gamma_c_i2 } => {
                format!("base * (cav(i, {}) + cav(i, {}))", n(gamma_c_i1), n(gamma_c_i2))
            }
            Scheme::Fc { phi, gamma_c, target } => {
                format!("base * (phase({}) + cav({}, {}))", n(phi), target, n(gamma_c))
            }
            Scheme::Fd { gamma_c_i2, gamma_c_s2 } => {
                format!("base * (phase(pi) + cav(i, {}) * cav(s, {}))", n(gamma_c_i2), n(gamma_c_s2))
            }
            Scheme::Fe { gamma_c } => {
                let g = n(gamma_c);
                format!("base * (1 - cav(i, {g}) - cav(s, {g}) + cav(i, {g}) * cav(s, {g}))")
            }
            Scheme::Fs { phi } => format!("base + phase({}) * swap(base)", n(phi)),
            Scheme::Iterated { stages, gamma_c_i, gamma_c_s } => {
                let mut s = "base".to_string();
                for stage in 1..=stages {
                    let (axis, g) = if stage % 2 == 1 { ("i", gamma_c_i) } else { ("s", gamma_c_s) };
                    s.push_str(&format!(" * (phase(pi) + cav({axis}, {}))", n(g)));
                }
                s
            }
        }
    }
}

/// Builds a named preset on the given grids.
pub fn build_preset(
    preset: &SchemePreset,
    params: &PhysicalParams,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<SpectralField> {
    preset.scheme()?.build(params, grid_s, grid_i)
}
