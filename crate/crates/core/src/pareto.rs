//! The four approximate quasi Pareto solution types, dominance witnesses,
//! and grid falsification.
//!
//! A feasible reference point is dominated (for a given type) when some
//! feasible `x` improves on the reference after shifting it down by
//! `E_i * ||x - xbar||`. Finding such an `x` refutes membership; scanning a
//! grid without finding one certifies the property relative to that grid
//! only, never as a proof.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::interval::{Interval, IntervalVector, LuMode};
use crate::problem::Problem;

/// The four solution concepts: type-1/2 quasi Pareto and their weak
/// variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionType {
    /// No feasible x with all components `<=_LU` and one `<_LU`.
    T1Q,
    /// No feasible x with all components `<=_LU` and one `<^s_LU`.
    T2Q,
    /// No feasible x with all components `<_LU`.
    T1QW,
    /// No feasible x with all components `<^s_LU`.
    T2QW,
}

impl SolutionType {
    pub const ALL: [SolutionType; 4] = [
        SolutionType::T1Q,
        SolutionType::T2Q,
        SolutionType::T1QW,
        SolutionType::T2QW,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionType::T1Q => "t1q",
            SolutionType::T2Q => "t2q",
            SolutionType::T1QW => "t1qw",
            SolutionType::T2QW => "t2qw",
        }
    }

    pub fn parse(s: &str) -> Option<SolutionType> {
        match s {
            "t1q" => Some(SolutionType::T1Q),
            "t2q" => Some(SolutionType::T2Q),
            "t1qw" => Some(SolutionType::T1QW),
            "t2qw" => Some(SolutionType::T2QW),
            _ => None,
        }
    }
}

/// Which LU relations held per component against the shifted reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRelation {
    pub leq: bool,
    pub lt: bool,
    pub lts: bool,
}

/// A dominating point together with its per-component relation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub stype: SolutionType,
    pub relations: Vec<ComponentRelation>,
}

/// `f_i(xbar) - E_i * ||x - xbar||` componentwise. With shift distance `r`,
/// component `i` becomes `[fL_i(xbar) - epsU_i * r, fU_i(xbar) - epsL_i * r]`.
pub fn shifted_reference(p: &Problem, xbar: &[f64], x: &[f64]) -> Result<IntervalVector> {
    if xbar.len() != p.n || x.len() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: xbar.len().max(x.len()),
        });
    }
    let r = norm_diff(x, xbar);
    let fbar = p.eval_objectives(xbar)?;
    let mut out = Vec::with_capacity(p.m());
    for i in 0..p.m() {
        let shift = p.epsilon.get(i).scale(r)?;
        out.push(fbar.get(i).sub(&shift)?);
    }
    IntervalVector::new(out)
}

fn norm_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn component_relations(
    fx: &IntervalVector,
    reference: &IntervalVector,
    margin: f64,
) -> Vec<ComponentRelation> {
    fx.components()
        .iter()
        .zip(reference.components())
        .map(|(a, b)| ComponentRelation {
            leq: a.lu_compare_margin(b, LuMode::Leq, margin),
            lt: a.lu_compare_margin(b, LuMode::Lt, margin),
            lts: a.lu_compare_margin(b, LuMode::Lts, margin),
        })
        .collect()
}

fn relations_satisfy(relations: &[ComponentRelation], stype: SolutionType) -> bool {
    match stype {
        SolutionType::T1Q => {
            relations.iter().all(|r| r.leq) && relations.iter().any(|r| r.lt)
        }
        SolutionType::T2Q => {
            relations.iter().all(|r| r.leq) && relations.iter().any(|r| r.lts)
        }
        SolutionType::T1QW => relations.iter().all(|r| r.lt),
        SolutionType::T2QW => relations.iter().all(|r| r.lts),
    }
}

/// Does feasible `x` dominate `xbar` in the sense of `stype`? Returns the
/// witness when it does. The caller guarantees feasibility of `x`.
pub fn beats(
    p: &Problem,
    xbar: &[f64],
    x: &[f64],
    stype: SolutionType,
    margin: f64,
) -> Result<Option<Witness>> {
    let fx = p.eval_objectives(x)?;
    let reference = shifted_reference(p, xbar, x)?;
    let relations = component_relations(&fx, &reference, margin);
    if relations_satisfy(&relations, stype) {
        Ok(Some(Witness {
            x: x.to_vec(),
            stype,
            relations,
        }))
    } else {
        Ok(None)
    }
}

/// Scan the feasible grid points (row-major), then any injected extra
/// points, and return the first witness. `None` certifies the property
/// relative to the scanned points only.
pub fn falsify_on_grid(
    p: &Problem,
    xbar: &[f64],
    stype: SolutionType,
    grid: &GridSpec,
    extra_points: &[Vec<f64>],
    margin: f64,
    feas_tol: f64,
) -> Result<Option<Witness>> {
    if grid.dim() != p.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            got: grid.dim(),
        });
    }
    let from_grid = (0..grid.len())
        .into_par_iter()
        .map(|i| grid.point(i))
        .find_first(|x| {
            p.is_feasible(x, feas_tol)
                && matches!(beats(p, xbar, x, stype, margin), Ok(Some(_)))
        });
    if let Some(x) = from_grid {
        return beats(p, xbar, &x, stype, margin);
    }
    for x in extra_points {
        if x.len() == p.n && p.is_feasible(x, feas_tol) {
            if let Some(w) = beats(p, xbar, x, stype, margin)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

/// Every solution type refuted by the witness, in canonical order. A witness
/// refutes each type whose dominance system it satisfies; the inclusion
/// lattice between the four types emerges from the relation implications.
pub fn inclusion_audit(
    p: &Problem,
    xbar: &[f64],
    w: &Witness,
    margin: f64,
) -> Result<Vec<SolutionType>> {
    let confirm = beats(p, xbar, &w.x, w.stype, margin)?;
    if confirm.is_none() {
        return Err(Error::MalformedWitness(format!(
            "point {:?} does not satisfy the {} dominance system",
            w.x,
            w.stype.as_str()
        )));
    }
    let fx = p.eval_objectives(&w.x)?;
    let reference = shifted_reference(p, xbar, &w.x)?;
    let relations = component_relations(&fx, &reference, margin);
    Ok(SolutionType::ALL
        .into_iter()
        .filter(|s| relations_satisfy(&relations, *s))
        .collect())
}
