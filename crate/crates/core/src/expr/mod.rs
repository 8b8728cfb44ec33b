//! Expression trees over a restricted grammar with exact evaluation and
//! limiting-subdifferential extraction.
//!
//! The grammar (see [`parse::parse_expr`]) covers sums, products, integer
//! powers, `abs`, `max`, `min`, and Euclidean norms of affine maps, with the
//! restriction that every nonsmooth construct has smooth arguments and
//! nonsmooth subtrees combine only through sums, scalings, and negation.
//! Those restrictions are what make the subdifferential calculus of
//! [`subdiff`] computable, with an explicit exact-versus-superset ledger.

mod parse;
mod subdiff;

pub use parse::parse_expr;
pub use subdiff::{fd_gradient, limiting_subdiff, ACTIVITY_TOL};

use crate::error::{Error, Result};

/// Expression tree node. `Var(j)` is the variable `x{j+1}`; `Param` is the
/// constraint-family parameter `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Param,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Abs(Box<Expr>),
    Max(Vec<Expr>),
    Min(Vec<Expr>),
    Norm(Vec<Expr>),
}

impl Expr {
    /// Structurally smooth: contains no `abs`, `max`, `min`, or `norm`.
    pub fn is_smooth(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param => true,
            Expr::Neg(e) => e.is_smooth(),
            Expr::Add(a, b) | Expr::Mul(a, b) => a.is_smooth() && b.is_smooth(),
            Expr::Pow(b, _) => b.is_smooth(),
            Expr::Abs(_) | Expr::Max(_) | Expr::Min(_) | Expr::Norm(_) => false,
        }
    }

    /// Contains no `x` variable (constants and `t` only).
    pub fn is_x_free(&self) -> bool {
        self.var_mask() == 0
    }

    /// Bitmask of referenced variables.
    pub fn var_mask(&self) -> u64 {
        match self {
            Expr::Const(_) | Expr::Param => 0,
            Expr::Var(j) => 1u64 << j,
            Expr::Neg(e) => e.var_mask(),
            Expr::Add(a, b) | Expr::Mul(a, b) => a.var_mask() | b.var_mask(),
            Expr::Pow(b, _) => b.var_mask(),
            Expr::Abs(e) => e.var_mask(),
            Expr::Max(es) | Expr::Min(es) | Expr::Norm(es) => {
                es.iter().fold(0, |m, e| m | e.var_mask())
            }
        }
    }

    /// References the parameter `t`.
    pub fn uses_param(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Param => true,
            Expr::Neg(e) => e.uses_param(),
            Expr::Add(a, b) | Expr::Mul(a, b) => a.uses_param() || b.uses_param(),
            Expr::Pow(b, _) => b.uses_param(),
            Expr::Abs(e) => e.uses_param(),
            Expr::Max(es) | Expr::Min(es) | Expr::Norm(es) => es.iter().any(|e| e.uses_param()),
        }
    }

    /// Polynomial degree in `x` (None for nonsmooth nodes). Affine means
    /// degree at most one.
    fn degree(&self) -> Option<u32> {
        match self {
            Expr::Const(_) | Expr::Param => Some(0),
            Expr::Var(_) => Some(1),
            Expr::Neg(e) => e.degree(),
            Expr::Add(a, b) => Some(a.degree()?.max(b.degree()?)),
            Expr::Mul(a, b) => Some(a.degree()? + b.degree()?),
            Expr::Pow(b, k) => Some(b.degree()? * k),
            Expr::Abs(_) | Expr::Max(_) | Expr::Min(_) | Expr::Norm(_) => None,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.degree(), Some(d) if d <= 1)
    }

    fn eval_unchecked(&self, x: &[f64], t: Option<f64>) -> Result<f64> {
        Ok(match self {
            Expr::Const(v) => *v,
            Expr::Var(j) => {
                if *j >= x.len() {
                    return Err(Error::DimensionMismatch {
                        expected: *j + 1,
                        got: x.len(),
                    });
                }
                x[*j]
            }
            Expr::Param => t.ok_or_else(|| Error::MissingParameter("t".into()))?,
            Expr::Neg(e) => -e.eval_unchecked(x, t)?,
            Expr::Add(a, b) => a.eval_unchecked(x, t)? + b.eval_unchecked(x, t)?,
            Expr::Mul(a, b) => a.eval_unchecked(x, t)? * b.eval_unchecked(x, t)?,
            Expr::Pow(b, k) => b.eval_unchecked(x, t)?.powi(*k as i32),
            Expr::Abs(e) => e.eval_unchecked(x, t)?.abs(),
            Expr::Max(es) => {
                let mut m = f64::NEG_INFINITY;
                for e in es {
                    m = m.max(e.eval_unchecked(x, t)?);
                }
                m
            }
            Expr::Min(es) => {
                let mut m = f64::INFINITY;
                for e in es {
                    m = m.min(e.eval_unchecked(x, t)?);
                }
                m
            }
            Expr::Norm(es) => {
                let mut s = 0.0;
                for e in es {
                    let v = e.eval_unchecked(x, t)?;
                    s += v * v;
                }
                s.sqrt()
            }
        })
    }

    /// Exact recursive evaluation; errors on a non-finite result or a
    /// missing parameter.
    pub fn eval(&self, x: &[f64], t: Option<f64>) -> Result<f64> {
        let v = self.eval_unchecked(x, t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite)
        }
    }

    /// Value and gradient of a smooth subtree.
    pub(crate) fn eval_grad(&self, x: &[f64], t: Option<f64>) -> Result<(f64, Vec<f64>)> {
        let n = x.len();
        Ok(match self {
            Expr::Const(v) => (*v, vec![0.0; n]),
            Expr::Var(j) => {
                let mut g = vec![0.0; n];
                g[*j] = 1.0;
                (x[*j], g)
            }
            Expr::Param => (
                t.ok_or_else(|| Error::MissingParameter("t".into()))?,
                vec![0.0; n],
            ),
            Expr::Neg(e) => {
                let (v, mut g) = e.eval_grad(x, t)?;
                for c in &mut g {
                    *c = -*c;
                }
                (-v, g)
            }
            Expr::Add(a, b) => {
                let (va, mut ga) = a.eval_grad(x, t)?;
                let (vb, gb) = b.eval_grad(x, t)?;
                for (c, d) in ga.iter_mut().zip(&gb) {
                    *c += d;
                }
                (va + vb, ga)
            }
            Expr::Mul(a, b) => {
                let (va, ga) = a.eval_grad(x, t)?;
                let (vb, gb) = b.eval_grad(x, t)?;
                let g = ga
                    .iter()
                    .zip(&gb)
                    .map(|(da, db)| da * vb + va * db)
                    .collect();
                (va * vb, g)
            }
            Expr::Pow(b, k) => {
                let (vb, gb) = b.eval_grad(x, t)?;
                let k = *k;
                if k == 0 {
                    (1.0, vec![0.0; n])
                } else {
                    let pow_km1 = vb.powi(k as i32 - 1);
                    let coeff = k as f64 * pow_km1;
                    let g = gb.iter().map(|d| coeff * d).collect();
                    (vb * pow_km1, g)
                }
            }
            Expr::Abs(_) | Expr::Max(_) | Expr::Min(_) | Expr::Norm(_) => {
                unreachable!("eval_grad is only called on smooth subtrees")
            }
        })
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{}", v),
            Expr::Var(j) => write!(f, "x{}", j + 1),
            Expr::Param => write!(f, "t"),
            Expr::Neg(e) => write!(f, "-({})", e),
            Expr::Add(a, b) => write!(f, "({} + {})", a, b),
            Expr::Mul(a, b) => write!(f, "({} * {})", a, b),
            Expr::Pow(b, k) => write!(f, "({})^{}", b, k),
            Expr::Abs(e) => write!(f, "abs({})", e),
            Expr::Max(es) => {
                write!(f, "max(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, ")")
            }
            Expr::Min(es) => {
                write!(f, "min(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, ")")
            }
            Expr::Norm(es) => {
                write!(f, "norm(")?;
                for (i, e) in es.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", e)?;
                }
                write!(f, ")")
            }
        }
    }
}
