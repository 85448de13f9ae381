use std::f64::consts::PI;
use std::fmt;

use crate::modulation::Axis;

/// Parsed modulation network.
///
/// `Paren` records explicit grouping so that printing a parsed tree yields
/// text that parses back to the same tree.
#[derive(Clone, Debug, PartialEq)]
pub enum ModulationExpr {
    /// The cascade amplitude.
    Base,
    /// Exchange of signal and idler arguments.
    Swap(Box<ModulationExpr>),
    /// Cavity transfer on one axis.
    Cav {
        target: Axis,
        gamma_c: f64,
    },
    /// Constant `e^{iφ}`.
    Phase(f64),
    /// Complex constant.
    Scalar {
        re: f64,
        im: f64,
    },
    Sum(Box<ModulationExpr>, Box<ModulationExpr>),
    Diff(Box<ModulationExpr>, Box<ModulationExpr>),
    /// Pointwise product.
    Prod(Box<ModulationExpr>, Box<ModulationExpr>),
    Paren(Box<ModulationExpr>),
}

impl ModulationExpr {
    pub fn contains_base(&self) -> bool {
        use ModulationExpr::*;
        match self {
            Base => true,
            Cav { .. } | Phase(_) | Scalar { .. } => false,
            Swap(e) | Paren(e) => e.contains_base(),
            Sum(a, b) | Diff(a, b) | Prod(a, b) => a.contains_base() || b.contains_base(),
        }
    }

    pub fn contains_swap(&self) -> bool {
        use ModulationExpr::*;
        match self {
            Swap(_) => true,
            Base | Cav { .. } | Phase(_) | Scalar { .. } => false,
            Paren(e) => e.contains_swap(),
            Sum(a, b) | Diff(a, b) | Prod(a, b) => a.contains_swap() || b.contains_swap(),
        }
    }

    pub fn depth(&self) -> usize {
        use ModulationExpr::*;
        match self {
            Base | Cav { .. } | Phase(_) | Scalar { .. } => 1,
            Swap(e) | Paren(e) => 1 + e.depth(),
            Sum(a, b) | Diff(a, b) | Prod(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            ModulationExpr::Sum(..) | ModulationExpr::Diff(..) => 1,
            ModulationExpr::Prod(..) => 2,
            ModulationExpr::Scalar { im, .. } if *im != 0.0 => 1,
            _ => 3,
        }
    }
}

/// Number literal text: `pi` for π, otherwise the shortest round-trip decimal.
pub fn format_number(v: f64) -> String {
    if v == PI {
        "pi".to_string()
    } else if v == -PI {
        "-pi".to_string()
    } else {
        format!("{v}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &ModulationExpr, min_prec: u8) -> fmt::Result {
    if child.precedence() < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for ModulationExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ModulationExpr::*;
        match self {
            Base => f.write_str("base"),
            Swap(e) => write!(f, "swap({e})"),
            Cav { target, gamma_c } => write!(f, "cav({target}, {})", format_number(*gamma_c)),
            Phase(phi) => write!(f, "phase({})", format_number(*phi)),
            Scalar { re, im } if *im == 0.0 => f.write_str(&format_number(*re)),
            Scalar { re, im } => {
                write!(f, "{} + {} * phase({})", format_number(*re), format_number(*im), format_number(PI / 2.0))
            }
            Sum(a, b) | Diff(a, b) => {
                write_child(f, a, 1)?;
                f.write_str(if matches!(self, Sum(..)) { " + " } else { " - " })?;
                write_child(f, b, 2)
            }
            Prod(a, b) => {
                write_child(f, a, 2)?;
                f.write_str(" * ")?;
                write_child(f, b, 3)
            }
            Paren(e) => write!(f, "({e})"),
        }
    }
}
