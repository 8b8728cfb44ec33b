//! The max-type merit function anchored at a feasible reference point, its
//! subdifferential, a multistart subgradient minimizer, and a grid oracle
//! whose sign agrees pointwise with type-2 approximate weak dominance.
//!
//! With anchor `xbar` and `r = ||x - xbar||` the merit value is
//!
//! ```text
//! phi(x) = max_i { fL_i(x) - fL_i(xbar) + epsU_i * r,
//!                  fU_i(x) - fU_i(xbar) + epsL_i * r }
//! ```
//!
//! `phi(xbar) = 0`, and `phi(x) < 0` at a feasible point exactly when `x`
//! dominates `xbar` in the type-2 weak sense. The oracle decides sign by a
//! grid scan; descent is only a polish and never certifies nonnegativity.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{limiting_subdiff, ACTIVITY_TOL};
use crate::grid::GridSpec;
use crate::problem::Problem;
use crate::subdiff_set::{Exactness, SubdiffSet, SubdiffTerm};

/// A merit-function instance: the anchor and its cached objective values.
pub struct PhiInstance<'a> {
    pub problem: &'a Problem,
    pub xbar: Vec<f64>,
    fl_bar: Vec<f64>,
    fu_bar: Vec<f64>,
}

/// Result of the grid oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum QwOracle {
    /// No feasible grid point has `phi < -margin`.
    Consistent,
    /// This feasible grid point is a type-2 weak dominator.
    Witness(Vec<f64>),
}

impl<'a> PhiInstance<'a> {
    /// Build the instance; the anchor must be feasible.
    pub fn new(problem: &'a Problem, xbar: Vec<f64>, feas_tol: f64) -> Result<Self> {
        if xbar.len() != problem.n {
            return Err(Error::DimensionMismatch {
                expected: problem.n,
                got: xbar.len(),
            });
        }
        if !problem.is_feasible(&xbar, feas_tol) {
            return Err(Error::Validation("anchor point is infeasible".into()));
        }
        let fbar = problem.eval_objectives(&xbar)?;
        let fl_bar = fbar.components().iter().map(|c| c.lo()).collect();
        let fu_bar = fbar.components().iter().map(|c| c.hi()).collect();
        Ok(PhiInstance {
            problem,
            xbar,
            fl_bar,
            fu_bar,
        })
    }

    fn norm_to_anchor(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.xbar)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// The 2m branch values at `x`, ordered `(i, L), (i, U)` per objective.
    pub fn branch_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let r = self.norm_to_anchor(x);
        let m = self.problem.m();
        let mut out = Vec::with_capacity(2 * m);
        for i in 0..m {
            let (lower, upper) = &self.problem.objectives[i];
            let eps = self.problem.epsilon.get(i);
            out.push(lower.eval(x, None)? - self.fl_bar[i] + eps.hi() * r);
            out.push(upper.eval(x, None)? - self.fu_bar[i] + eps.lo() * r);
        }
        Ok(out)
    }

    /// Exact max over the 2m branches.
    pub fn phi_value(&self, x: &[f64]) -> Result<f64> {
        Ok(self
            .branch_values(x)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Index of the largest branch (smallest index on ties).
    pub fn active_branch(&self, x: &[f64]) -> Result<usize> {
        let values = self.branch_values(x)?;
        let mut best = 0;
        for (i, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Subdifferential enclosure of the merit function at `x`.
    ///
    /// Away from the anchor, the max rule over active branches applies with
    /// the norm contributing its gradient. At the anchor every branch is
    /// active and each returned term is one branch set fattened by its
    /// approximation radius; the max-rule superset is the convex hull of the
    /// union of the returned terms.
    pub fn phi_subdiff(&self, x: &[f64]) -> Result<SubdiffSet> {
        let r = self.norm_to_anchor(x);
        let m = self.problem.m();
        if r <= ACTIVITY_TOL {
            // anchor: all 2m branches are active with value 0
            let mut terms = Vec::new();
            let mut exact_singletons = true;
            for i in 0..m {
                let (lower, upper) = &self.problem.objectives[i];
                let eps = self.problem.epsilon.get(i);
                for (expr, radius) in [(lower, eps.hi()), (upper, eps.lo())] {
                    let sd = limiting_subdiff(expr, x, None)?;
                    if !(sd.is_singleton() && sd.exactness.is_exact()) {
                        exact_singletons = false;
                    }
                    for t in &sd.terms {
                        terms.push(SubdiffTerm {
                            vertices: t.vertices.clone(),
                            ball_radius: t.ball_radius + radius,
                        });
                    }
                }
            }
            let mut out = SubdiffSet {
                terms,
                exactness: if exact_singletons {
                    Exactness::Exact
                } else {
                    Exactness::Superset
                },
            };
            out.normalize();
            return Ok(out);
        }

        // away from the anchor: norm gradient (x - xbar)/r per branch
        let values = self.branch_values(x)?;
        let top = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let norm_grad: Vec<f64> = x
            .iter()
            .zip(&self.xbar)
            .map(|(a, b)| (a - b) / r)
            .collect();

        let mut active_sets: Vec<SubdiffSet> = Vec::new();
        for i in 0..m {
            let (lower, upper) = &self.problem.objectives[i];
            let eps = self.problem.epsilon.get(i);
            for (branch, expr, coeff) in [(2 * i, lower, eps.hi()), (2 * i + 1, upper, eps.lo())] {
                if values[branch] < top - ACTIVITY_TOL {
                    continue;
                }
                let sd = limiting_subdiff(expr, x, None)?;
                let shift = SubdiffSet::singleton(
                    norm_grad.iter().map(|g| coeff * g).collect(),
                );
                active_sets.push(sd.minkowski(&shift, true));
            }
        }

        if active_sets.len() == 1 {
            let mut only = active_sets.pop().expect("one active set");
            only.normalize();
            return Ok(only);
        }

        // max of possibly nonsmooth branches: convex enclosure of the union
        let all_singletons = active_sets
            .iter()
            .all(|s| s.is_singleton() && s.exactness.is_exact());
        let mut vertices = Vec::new();
        let mut radius: f64 = 0.0;
        for s in &active_sets {
            for t in &s.terms {
                vertices.extend(t.vertices.iter().cloned());
                radius = radius.max(t.ball_radius);
            }
        }
        let mut out = SubdiffSet {
            terms: vec![SubdiffTerm {
                vertices,
                ball_radius: radius,
            }],
            exactness: if all_singletons {
                Exactness::Exact
            } else {
                Exactness::Superset
            },
        };
        out.normalize();
        Ok(out)
    }

    /// Deterministic subgradient selection: the lexicographically smallest
    /// vertex of the first term.
    fn select_subgradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let sd = self.phi_subdiff(x)?;
        let term = &sd.terms[0];
        let mut best = &term.vertices[0];
        for v in &term.vertices[1..] {
            if v.partial_cmp(best) == Some(std::cmp::Ordering::Less) {
                best = v;
            }
        }
        Ok(best.clone())
    }

    /// Multistart projected subgradient descent with diminishing steps
    /// `1/k`; candidate steps that violate the constraint family are
    /// rejected. Deterministic given the starts and budget, and never worse
    /// than the best start.
    pub fn minimize_phi(
        &self,
        starts: &[Vec<f64>],
        budget: usize,
        feas_tol: f64,
    ) -> Result<(Vec<f64>, f64)> {
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut any_feasible = false;
        for start in starts {
            if start.len() != self.problem.n || !self.problem.is_feasible(start, feas_tol) {
                continue;
            }
            any_feasible = true;
            let mut x = start.clone();
            let mut value = self.phi_value(&x)?;
            record_best(&mut best, &x, value);
            for k in 1..=budget {
                let g = self.select_subgradient(&x)?;
                let gnorm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
                if gnorm <= 1e-14 {
                    break;
                }
                let step = 1.0 / k as f64;
                let candidate: Vec<f64> = x
                    .iter()
                    .zip(&g)
                    .map(|(xi, gi)| xi - step * gi / gnorm)
                    .collect();
                let candidate = self.problem.omega.project(&candidate);
                if !self.problem.is_feasible(&candidate, feas_tol) {
                    continue;
                }
                x = candidate;
                value = self.phi_value(&x)?;
                record_best(&mut best, &x, value);
            }
        }
        if !any_feasible {
            return Err(Error::NoFeasibleStart);
        }
        Ok(best.expect("at least one feasible start recorded"))
    }

    /// Grid scan of the merit sign: the first feasible grid point with
    /// `phi < -margin` is a type-2 weak dominator.
    pub fn qw_oracle(&self, grid: &GridSpec, margin: f64, feas_tol: f64) -> Result<QwOracle> {
        if grid.dim() != self.problem.n {
            return Err(Error::DimensionMismatch {
                expected: self.problem.n,
                got: grid.dim(),
            });
        }
        let hit = (0..grid.len())
            .into_par_iter()
            .map(|i| grid.point(i))
            .find_first(|x| {
                self.problem.is_feasible(x, feas_tol)
                    && matches!(self.phi_value(x), Ok(v) if v < -margin)
            });
        Ok(match hit {
            Some(x) => QwOracle::Witness(x),
            None => QwOracle::Consistent,
        })
    }
}

fn record_best(best: &mut Option<(Vec<f64>, f64)>, x: &[f64], value: f64) {
    let replace = match best {
        None => true,
        Some((bx, bv)) => {
            value < *bv - 0.0
                || (value == *bv && x.partial_cmp(bx.as_slice()) == Some(std::cmp::Ordering::Less))
        }
    };
    if replace {
        *best = Some((x.to_vec(), value));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pareto::{beats, SolutionType};
    use crate::problem::problem_from_json;

    const EX41: &str = r#"{
        "n": 1,
        "objectives": [{"lower": "1/3*x1^3", "upper": "1/3*x1^3 + 1"}],
        "constraint": {"param": "t", "T": {"range": [0, 1], "grid": 101}, "expr": "-t*x1"},
        "omega": {"type": "all"},
        "epsilon": [[0.2, 0.25]]
    }"#;

    const EX31: &str = r#"{
        "n": 2,
        "objectives": [
            {"lower": "x1^2 + (x1*x2 - 1)^2", "upper": "2*x1^2 + (x1*x2 - 1)^2"},
            {"lower": "x1^2 + (x1*x2 - 1)^2", "upper": "2*x1^2 + (x1*x2 - 1)^2"}
        ],
        "constraint": {"param": "t", "T": {"range": [0, 1], "grid": 101}, "expr": "-t*abs(x1) - t*abs(x2)"},
        "omega": {"type": "all"},
        "epsilon": [[1, 2], [1, 2]]
    }"#;

    #[test]
    fn phi_zero_at_anchor() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        assert_eq!(inst.phi_value(&[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn phi_branches_cubic_anchor() {
        // branches at x=0 from anchor 1: {0 - 1/3 + 1/4, 1 - 4/3 + 1/5}
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        let b = inst.branch_values(&[0.0]).unwrap();
        assert!((b[0] - (-1.0 / 12.0)).abs() <= 1e-15);
        assert!((b[1] - (-2.0 / 15.0)).abs() <= 1e-15);
        let phi = inst.phi_value(&[0.0]).unwrap();
        assert!((phi - (-1.0 / 12.0)).abs() <= 1e-15);
    }

    #[test]
    fn phi_is_norm_when_objectives_vanish() {
        let json = r#"{
            "n": 1,
            "objectives": [{"lower": "0", "upper": "0"}],
            "constraint": {"param": "t", "T": {"list": [0.0]}, "expr": "0*t"},
            "omega": {"type": "all"},
            "epsilon": [[1, 1]]
        }"#;
        let (p, _) = problem_from_json(json).unwrap();
        let inst = PhiInstance::new(&p, vec![0.0], 1e-9).unwrap();
        for x in [-2.0, -0.5, 0.0, 1.5] {
            assert!((inst.phi_value(&[x]).unwrap() - x.abs()).abs() <= 1e-15);
        }
        // subdifferential at the anchor is the full unit ball
        let sd = inst.phi_subdiff(&[0.0]).unwrap();
        assert_eq!(sd.terms.len(), 1);
        assert_eq!(sd.terms[0].ball_radius, 1.0);
        assert_eq!(sd.terms[0].vertices, vec![vec![0.0]]);
    }

    #[test]
    fn phi_subdiff_anchor_branch_terms() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        let sd = inst.phi_subdiff(&[1.0]).unwrap();
        // two branches, both smooth with derivative 1, radii 0.25 and 0.2
        assert_eq!(sd.terms.len(), 2);
        let mut radii: Vec<f64> = sd.terms.iter().map(|t| t.ball_radius).collect();
        radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(radii, vec![0.2, 0.25]);
        for t in &sd.terms {
            assert!((t.vertices[0][0] - 1.0).abs() <= 1e-12);
        }
        assert_eq!(sd.exactness, Exactness::Exact);
    }

    #[test]
    fn phi_subdiff_smooth_point_single_branch() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        // at x = 2 the L-branch dominates: value x^3/3 - 1/3 + 0.25 * 1
        let sd = inst.phi_subdiff(&[2.0]).unwrap();
        let v = sd.singleton_vertex().unwrap();
        // derivative x^2 + epsU * sign(x - xbar) = 4 + 0.25
        assert!((v[0] - 4.25).abs() <= 1e-12);
    }

    #[test]
    fn oracle_consistent_at_certified_anchor() {
        let (p, _) = problem_from_json(EX31).unwrap();
        let inst = PhiInstance::new(&p, vec![0.0, 0.0], 1e-9).unwrap();
        let grid = GridSpec::cube(2, -3.0, 3.0, 31).unwrap();
        assert_eq!(inst.qw_oracle(&grid, 0.0, 1e-9).unwrap(), QwOracle::Consistent);
    }

    #[test]
    fn oracle_agrees_with_dominance() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        let grid = GridSpec::cube(1, -3.0, 3.0, 61).unwrap();
        for x in grid.points() {
            if !p.is_feasible(&x, 1e-9) {
                continue;
            }
            let phi_neg = inst.phi_value(&x).unwrap() < 0.0;
            let dominated = beats(&p, &[1.0], &x, SolutionType::T2QW, 0.0)
                .unwrap()
                .is_some();
            assert_eq!(phi_neg, dominated, "disagreement at {:?}", x);
        }
    }

    #[test]
    fn oracle_with_huge_epsilon_is_consistent() {
        let huge = EX41.replace("[[0.2, 0.25]]", "[[1000000.0, 1000000.0]]");
        let (p, _) = problem_from_json(&huge).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        let grid = GridSpec::cube(1, -3.0, 3.0, 61).unwrap();
        assert_eq!(inst.qw_oracle(&grid, 0.0, 1e-9).unwrap(), QwOracle::Consistent);
    }

    #[test]
    fn minimize_never_exceeds_best_start() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        let starts = vec![vec![2.0], vec![0.5], vec![1.0]];
        let best_start = starts
            .iter()
            .map(|s| inst.phi_value(s).unwrap())
            .fold(f64::INFINITY, f64::min);
        let (_, value) = inst.minimize_phi(&starts, 200, 1e-9).unwrap();
        assert!(value <= best_start);
        // anchor among the starts forces value <= 0
        assert!(value <= 0.0);
    }

    #[test]
    fn minimize_requires_feasible_start() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let inst = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        assert!(matches!(
            inst.minimize_phi(&[vec![-5.0]], 10, 1e-9),
            Err(Error::NoFeasibleStart)
        ));
    }

    #[test]
    fn epsilon_scaling_is_monotone() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let doubled = EX41.replace("[[0.2, 0.25]]", "[[0.4, 0.5]]");
        let (p2, _) = problem_from_json(&doubled).unwrap();
        let a = PhiInstance::new(&p, vec![1.0], 1e-9).unwrap();
        let b = PhiInstance::new(&p2, vec![1.0], 1e-9).unwrap();
        for x in GridSpec::cube(1, -2.0, 2.0, 41).unwrap().points() {
            assert!(b.phi_value(&x).unwrap() >= a.phi_value(&x).unwrap() - 1e-12);
        }
    }
}
