use faer::Mat;
use num_complex::Complex64;

use super::ast::ModulationExpr;
use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, PhysicalParams};
use crate::modulation::{transfer, unit_phase, Axis};
use crate::spectral::{base_spectral, SpectralField};

// Factors depending on a single axis stay one-dimensional until they meet a
// factor on the other axis.
#[derive(Clone)]
enum Value {
    Const(Complex64),
    Signal(Vec<Complex64>),
    Idler(Vec<Complex64>),
    Dense(Mat<Complex64>),
}

#[derive(Clone, Copy)]
enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    #[inline]
    fn apply(self, a: Complex64, b: Complex64) -> Complex64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
        }
    }
}

struct Evaluator<'a> {
    params: &'a PhysicalParams,
    grid_s: &'a FrequencyGrid,
    grid_i: &'a FrequencyGrid,
    base: Option<Mat<Complex64>>,
}

impl Evaluator<'_> {
    fn eval(&mut self, expr: &ModulationExpr) -> Result<Value> {
        use ModulationExpr::*;
        Ok(match expr {
            Base => {
                let (params, gs, gi) = (self.params, self.grid_s, self.grid_i);
                let base = self.base.get_or_insert_with(|| base_spectral(params, gs, gi).into_amplitude());
                Value::Dense(base.clone())
            }
            Cav { target, gamma_c } => {
                crate::modulation::check_linewidth(*gamma_c)?;
                let grid = match target {
                    Axis::Signal => self.grid_s,
                    Axis::Idler => self.grid_i,
                };
                let v = grid.nodes().iter().map(|&w| transfer(w, *gamma_c)).collect();
                match target {
                    Axis::Signal => Value::Signal(v),
                    Axis::Idler => Value::Idler(v),
                }
            }
            Phase(phi) => Value::Const(unit_phase(*phi)),
            Scalar { re, im } => Value::Const(Complex64::new(*re, *im)),
            Paren(e) => self.eval(e)?,
            Swap(e) => {
                if !self.grid_s.same_axis(self.grid_i) {
                    return Err(Error::config("swap requires a shared detector axis (signal and idler grids differ)"));
                }
                match self.eval(e)? {
                    Value::Const(c) => Value::Const(c),
                    Value::Signal(v) => Value::Idler(v),
                    Value::Idler(v) => Value::Signal(v),
                    Value::Dense(m) => Value::Dense(m.transpose().to_owned()),
                }
            }
            Sum(a, b) => self.binary(a, b, Op::Add)?,
            Diff(a, b) => self.binary(a, b, Op::Sub)?,
            Prod(a, b) => self.binary(a, b, Op::Mul)?,
        })
    }

    fn binary(&mut self, a: &ModulationExpr, b: &ModulationExpr, op: Op) -> Result<Value> {
        let lhs = self.eval(a)?;
        let rhs = self.eval(b)?;
        Ok(combine(lhs, rhs, op))
    }
}

fn zip_vec(a: &[Complex64], b: &[Complex64], op: Op) -> Vec<Complex64> {
    a.iter().zip(b).map(|(&x, &y)| op.apply(x, y)).collect()
}

fn combine(lhs: Value, rhs: Value, op: Op) -> Value {
    use Value::*;
    match (lhs, rhs) {
        (Const(a), Const(b)) => Const(op.apply(a, b)),
        (Const(a), Signal(v)) => Signal(v.iter().map(|&y| op.apply(a, y)).collect()),
        (Signal(v), Const(b)) => Signal(v.iter().map(|&x| op.apply(x, b)).collect()),
        (Const(a), Idler(v)) => Idler(v.iter().map(|&y| op.apply(a, y)).collect()),
        (Idler(v), Const(b)) => Idler(v.iter().map(|&x| op.apply(x, b)).collect()),
        (Signal(a), Signal(b)) => Signal(zip_vec(&a, &b, op)),
        (Idler(a), Idler(b)) => Idler(zip_vec(&a, &b, op)),
        (Signal(s), Idler(i)) => Dense(Mat::from_fn(s.len(), i.len(), |j, k| op.apply(s[j], i[k]))),
        (Idler(i), Signal(s)) => Dense(Mat::from_fn(s.len(), i.len(), |j, k| op.apply(i[k], s[j]))),
        (Dense(m), Const(b)) => Dense(Mat::from_fn(m.nrows(), m.ncols(), |j, k| op.apply(m[(j, k)], b))),
        (Const(a), Dense(m)) => Dense(Mat::from_fn(m.nrows(), m.ncols(), |j, k| op.apply(a, m[(j, k)]))),
        (Dense(m), Signal(s)) => Dense(Mat::from_fn(m.nrows(), m.ncols(), |j, k| op.apply(m[(j, k)], s[j]))),
        (Signal(s), Dense(m)) => Dense(Mat::from_fn(m.nrows(), m.ncols(), |j, k| op.apply(s[j], m[(j, k)]))),
        (Dense(m), Idler(i)) => Dense(Mat::from_fn(m.nrows(), m.ncols(), |j, k| op.apply(m[(j, k)], i[k]))),
        (Idler(i), Dense(m)) => Dense(Mat::from_fn(m.nrows(), m.ncols(), |j, k| op.apply(i[k], m[(j, k)]))),
        (Dense(a), Dense(b)) => Dense(Mat::from_fn(a.nrows(), a.ncols(), |j, k| op.apply(a[(j, k)], b[(j, k)]))),
    }
}

/// Evaluates a parsed network on the grid pair.
///
/// An expression without `base` evaluates to a constant-shaped field; this is
/// allowed but logged as a warning.
pub fn evaluate(
    expr: &ModulationExpr,
    params: &PhysicalParams,
    grid_s: &FrequencyGrid,
    grid_i: &FrequencyGrid,
) -> Result<SpectralField> {
    if !expr.contains_base() {
        log::warn!("modulation expression '{expr}' does not reference base; the result is not a biphoton amplitude");
    }
    let mut ev = Evaluator { params, grid_s, grid_i, base: None };
    let (m, n) = (grid_s.points(), grid_i.points());
    let amplitude = match ev.eval(expr)? {
        Value::Const(c) => Mat::from_fn(m, n, |_, _| c),
        Value::Signal(s) => Mat::from_fn(m, n, |j, _| s[j]),
        Value::Idler(i) => Mat::from_fn(m, n, |_, k| i[k]),
        Value::Dense(d) => d,
    };
    SpectralField::new(grid_s.clone(), grid_i.clone(), amplitude)
}
