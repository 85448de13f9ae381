use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PhysicalParams};
use crate::modulation::{build_preset, SchemePreset};
use crate::netlang;
use crate::spectral::SpectralField;

/// How a spectral field is produced: a named preset or a network expression.
///
/// Expressions may contain `{name}` placeholders that sweeps fill in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    Preset(SchemePreset),
    Expr(String),
}

impl Pipeline {
    /// Sets a preset parameter or substitutes `{name}` in an expression.
    /// Expressions without the placeholder are returned unchanged.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Pipeline> {
        match self {
            Pipeline::Preset(p) => {
                let mut p = p.clone();
                p.set(name, value)?;
                Ok(Pipeline::Preset(p))
            }
            Pipeline::Expr(text) => {
                if !value.is_finite() {
                    return Err(Error::config(format!("cannot substitute non-finite {name} = {value}")));
                }
                let literal = netlang::format_number(value);
                // a negative value is only a valid literal inside phase()/cav()
                let literal = if value < 0.0 { format!("(0 - {})", &literal[1..]) } else { literal };
                let arg_literal = netlang::format_number(value);
                let key = format!("{{{name}}}");
                let mut out = String::with_capacity(text.len());
                let mut rest = text.as_str();
                while let Some(at) = rest.find(&key) {
                    let before = &rest[..at];
                    out.push_str(before);
                    let in_arg = before.trim_end().ends_with('(') || before.trim_end().ends_with(',');
                    out.push_str(if in_arg { &arg_literal } else { &literal });
                    rest = &rest[at + key.len()..];
                }
                out.push_str(rest);
                Ok(Pipeline::Expr(out))
            }
        }
    }

    /// Whether `name` changes the pipeline.
    pub fn uses_param(&self, name: &str) -> bool {
        match self {
            Pipeline::Preset(p) => p.resolve_key(name).is_ok(),
            Pipeline::Expr(text) => text.contains(&format!("{{{name}}}")),
        }
    }

    pub fn build(
        &self,
        params: &PhysicalParams,
        grid_s: &FrequencyGrid,
        grid_i: &FrequencyGrid,
    ) -> Result<SpectralField> {
        match self {
            Pipeline::Preset(p) => build_preset(p, params, grid_s, grid_i),
            Pipeline::Expr(text) => {
                let expr = netlang::parse(text)?;
                netlang::evaluate(&expr, params, grid_s, grid_i)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Pipeline::Preset(p) => {
                let mut s = p.kind.to_string();
                for (k, v) in &p.params {
                    s.push_str(&format!(" {k}={v}"));
                }
                if let Some(t) = p.target {
                    s.push_str(&format!(" target={t}"));
                }
                s
            }
            Pipeline::Expr(text) => text.clone(),
        }
    }
}

impl From<SchemePreset> for Pipeline {
    fn from(p: SchemePreset) -> Self {
        Pipeline::Preset(p)
    }
}

impl From<crate::modulation::Scheme> for Pipeline {
    fn from(s: crate::modulation::Scheme) -> Self {
        Pipeline::Preset(s.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::{PresetKind, Scheme};

    #[test]
    fn placeholder_substitution() {
        let p = Pipeline::Expr("base + phase({phi}) * swap(base)".into());
        assert!(p.uses_param("phi"));
        assert!(!p.uses_param("gamma_c"));
        let q = p.with_param("phi", 0.5).unwrap();
        assert_eq!(q, Pipeline::Expr("base + phase(0.5) * swap(base)".into()));
        let q = p.with_param("phi", std::f64::consts::PI).unwrap();
        assert_eq!(q, Pipeline::Expr("base + phase(pi) * swap(base)".into()));
        let q = p.with_param("phi", -1.5).unwrap();
        assert_eq!(q, Pipeline::Expr("base + phase(-1.5) * swap(base)".into()));
        let q = Pipeline::Expr("base * {k}".into()).with_param("k", -2.0).unwrap();
        assert_eq!(q, Pipeline::Expr("base * (0 - 2)".into()));
        assert_eq!(Pipeline::Expr("base".into()).with_param("phi", 1.0).unwrap(), Pipeline::Expr("base".into()));
    }

    #[test]
    fn preset_params() {
        let p: Pipeline = SchemePreset::new(PresetKind::Fs).into();
        assert!(p.uses_param("phi"));
        let built = p.with_param("phi", 0.0).unwrap();
        assert_eq!(built, Scheme::Fs { phi: 0.0 }.into());
        assert!(p.with_param("stages", 2.0).is_err());
    }

    #[test]
    fn unfilled_placeholder_is_a_parse_error() {
        let g = FrequencyGrid::new(10.0, 8).unwrap();
        let err = Pipeline::Expr("phase({phi})".into()).build(&PhysicalParams::default(), &g, &g).unwrap_err();
        assert!(err.is_config());
    }
}
