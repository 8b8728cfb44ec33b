//! The problem instance: interval-valued objectives, a parametrized
//! semi-infinite constraint family over a discretized index set, the closed
//! region omega, and the approximation vector.
//!
//! Problem files are UTF-8 JSON:
//!
//! ```json
//! {
//!   "n": 2,
//!   "objectives": [{"lower": "x1^2", "upper": "2*x1^2"}],
//!   "constraint": {"param": "t", "T": {"range": [0, 1], "grid": 101}, "expr": "-t*x1"},
//!   "omega": {"type": "all"},
//!   "epsilon": [[1, 2]]
//! }
//! ```
//!
//! `T` may also be `{"list": [...]}`. Box bounds accept numbers or the
//! strings `"inf"` / `"-inf"`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr};
use crate::grid::linspace;
use crate::interval::{Interval, IntervalVector};

/// Default feasibility and activity tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Index-set descriptor before discretization.
#[derive(Debug, Clone, PartialEq)]
pub enum TDescriptor {
    FiniteList(Vec<f64>),
    Range { lo: f64, hi: f64, grid_count: usize },
}

/// Supported omega classes. Box bounds may be infinite per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaSet {
    WholeSpace,
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

/// Per-coordinate factor of a product cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordCone {
    /// Only the origin.
    Zero,
    /// The nonpositive ray.
    NonposRay,
    /// The nonnegative ray.
    NonnegRay,
    /// The whole line.
    Line,
}

impl CoordCone {
    fn contains(self, v: f64, tol: f64) -> bool {
        match self {
            CoordCone::Zero => v.abs() <= tol,
            CoordCone::NonposRay => v <= tol,
            CoordCone::NonnegRay => v >= -tol,
            CoordCone::Line => true,
        }
    }

    fn project(self, v: f64) -> f64 {
        match self {
            CoordCone::Zero => 0.0,
            CoordCone::NonposRay => v.min(0.0),
            CoordCone::NonnegRay => v.max(0.0),
            CoordCone::Line => v,
        }
    }

    fn polar(self) -> CoordCone {
        match self {
            CoordCone::Zero => CoordCone::Line,
            CoordCone::NonposRay => CoordCone::NonnegRay,
            CoordCone::NonnegRay => CoordCone::NonposRay,
            CoordCone::Line => CoordCone::Zero,
        }
    }
}

/// A product of per-coordinate cones, supporting membership tests,
/// projection, and the polar cone. Normal cones of the supported omega
/// classes all have this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDescriptor {
    pub coords: Vec<CoordCone>,
}

impl ConeDescriptor {
    pub fn zero(n: usize) -> Self {
        ConeDescriptor {
            coords: vec![CoordCone::Zero; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        v.len() == self.coords.len()
            && self.coords.iter().zip(v).all(|(c, &x)| c.contains(x, tol))
    }

    /// Euclidean projection onto the cone (coordinatewise).
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        self.coords.iter().zip(v).map(|(c, &x)| c.project(x)).collect()
    }

    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter()
            .zip(&p)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// The polar cone (also a coordinate product for these cones).
    pub fn polar(&self) -> ConeDescriptor {
        ConeDescriptor {
            coords: self.coords.iter().map(|c| c.polar()).collect(),
        }
    }

    /// True when the cone is the trivial `{0}`.
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == CoordCone::Zero)
    }
}

impl OmegaSet {
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            OmegaSet::WholeSpace => true,
            OmegaSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(&v, (&l, &h))| v >= l - tol && v <= h + tol),
        }
    }

    /// Euclidean projection onto omega (keeps descent iterates inside).
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            OmegaSet::WholeSpace => x.to_vec(),
            OmegaSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&l, &h))| v.max(l).min(h))
                .collect(),
        }
    }

    /// The limiting normal cone at `x` as a coordinate product.
    pub fn normal_cone(&self, x: &[f64], tol: f64) -> Result<ConeDescriptor> {
        if !self.contains(x, tol) {
            return Err(Error::PointOutsideOmega);
        }
        match self {
            OmegaSet::WholeSpace => Ok(ConeDescriptor::zero(x.len())),
            OmegaSet::Box { lo, hi } => {
                let coords = x
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(&v, (&l, &h))| {
                        let at_lo = (v - l).abs() <= tol;
                        let at_hi = (v - h).abs() <= tol;
                        match (at_lo, at_hi) {
                            (true, true) => CoordCone::Line,
                            (true, false) => CoordCone::NonposRay,
                            (false, true) => CoordCone::NonnegRay,
                            (false, false) => CoordCone::Zero,
                        }
                    })
                    .collect();
                Ok(ConeDescriptor { coords })
            }
        }
    }
}

/// A loaded, validated problem instance. Immutable after load; all queries
/// are pure.
#[derive(Debug, Clone)]
pub struct Problem {
    pub n: usize,
    pub objectives: Vec<(Expr, Expr)>,
    pub constraint_param: String,
    pub t_desc: TDescriptor,
    pub t_grid: Vec<f64>,
    pub g: Expr,
    pub omega: OmegaSet,
    pub epsilon: IntervalVector,
}

/// Default grid count for `Range` index sets.
pub const DEFAULT_T_GRID: usize = 101;

#[derive(Deserialize)]
struct ObjectiveFile {
    lower: String,
    upper: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TFile {
    Range {
        range: [f64; 2],
        grid: Option<usize>,
    },
    List {
        list: Vec<f64>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundFile {
    Num(f64),
    Word(String),
}

#[derive(Deserialize)]
#[serde(tag = "type")]
enum OmegaFile {
    #[serde(rename = "all")]
    All,
    #[serde(rename = "box")]
    Box { lo: Vec<BoundFile>, hi: Vec<BoundFile> },
}

#[derive(Deserialize)]
struct ConstraintFile {
    param: String,
    #[serde(rename = "T")]
    t: TFile,
    expr: String,
}

#[derive(Deserialize)]
struct ProblemFile {
    n: usize,
    objectives: Vec<ObjectiveFile>,
    constraint: ConstraintFile,
    omega: OmegaFile,
    epsilon: Vec<[f64; 2]>,
}

fn bound_value(b: &BoundFile, sign_hint: f64) -> Result<f64> {
    match b {
        BoundFile::Num(v) => Ok(*v),
        BoundFile::Word(w) => match w.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => Err(Error::Validation(format!(
                "box bound must be a number or \"inf\"/\"-inf\", got \"{}\" (hint sign {})",
                w, sign_hint
            ))),
        },
    }
}

/// Load and validate a problem file. Returns the problem together with any
/// standing-assumption warnings (the sampled `lower <= upper` check warns
/// rather than fails).
pub fn load_problem(path: impl AsRef<Path>) -> Result<(Problem, Vec<String>)> {
    let text = std::fs::read_to_string(path)?;
    problem_from_json(&text)
}

/// Parse a problem from JSON text.
pub fn problem_from_json(text: &str) -> Result<(Problem, Vec<String>)> {
    let pf: ProblemFile = serde_json::from_str(text)?;
    build_problem(pf)
}

fn build_problem(pf: ProblemFile) -> Result<(Problem, Vec<String>)> {
    let n = pf.n;
    if n == 0 || n > 64 {
        return Err(Error::Validation("dimension must be in 1..=64".into()));
    }
    if pf.objectives.is_empty() {
        return Err(Error::Validation("at least one objective is required".into()));
    }
    if pf.epsilon.len() != pf.objectives.len() {
        return Err(Error::Validation(format!(
            "epsilon has {} entries for {} objectives",
            pf.epsilon.len(),
            pf.objectives.len()
        )));
    }

    let mut objectives = Vec::with_capacity(pf.objectives.len());
    for (i, o) in pf.objectives.iter().enumerate() {
        let lower = parse_expr(&o.lower, n)
            .map_err(|e| Error::Validation(format!("objective {} lower: {}", i + 1, e)))?;
        let upper = parse_expr(&o.upper, n)
            .map_err(|e| Error::Validation(format!("objective {} upper: {}", i + 1, e)))?;
        if lower.uses_param() || upper.uses_param() {
            return Err(Error::Validation(format!(
                "objective {} must not reference the constraint parameter",
                i + 1
            )));
        }
        objectives.push((lower, upper));
    }

    if pf.constraint.param != "t" {
        return Err(Error::Validation(format!(
            "constraint parameter must be named `t`, got `{}`",
            pf.constraint.param
        )));
    }
    let g = parse_expr(&pf.constraint.expr, n)
        .map_err(|e| Error::Validation(format!("constraint expr: {}", e)))?;

    let (t_desc, t_grid) = match pf.constraint.t {
        TFile::Range { range, grid } => {
            let [lo, hi] = range;
            let k = grid.unwrap_or(DEFAULT_T_GRID);
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Validation("T range must be finite with lo <= hi".into()));
            }
            if k < 2 {
                return Err(Error::Validation("T range grid must have at least 2 points".into()));
            }
            (TDescriptor::Range { lo, hi, grid_count: k }, linspace(lo, hi, k))
        }
        TFile::List { list } => {
            if list.is_empty() {
                return Err(Error::Validation("T list must be nonempty".into()));
            }
            let mut sorted = list.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            sorted.dedup();
            if sorted.len() != list.len() {
                return Err(Error::Validation("T list values must be distinct".into()));
            }
            (TDescriptor::FiniteList(sorted.clone()), sorted)
        }
    };

    let omega = match pf.omega {
        OmegaFile::All => OmegaSet::WholeSpace,
        OmegaFile::Box { lo, hi } => {
            if lo.len() != n || hi.len() != n {
                return Err(Error::Validation("box bounds must have length n".into()));
            }
            let lo: Vec<f64> = lo
                .iter()
                .map(|b| bound_value(b, -1.0))
                .collect::<Result<_>>()?;
            let hi: Vec<f64> = hi
                .iter()
                .map(|b| bound_value(b, 1.0))
                .collect::<Result<_>>()?;
            for (l, h) in lo.iter().zip(&hi) {
                if l > h {
                    return Err(Error::Validation("box must satisfy lo <= hi".into()));
                }
            }
            OmegaSet::Box { lo, hi }
        }
    };

    let mut eps = Vec::with_capacity(pf.epsilon.len());
    for (i, [lo, hi]) in pf.epsilon.iter().enumerate() {
        if !(*lo >= 0.0 && lo <= hi) {
            return Err(Error::Validation(format!(
                "epsilon {} must satisfy 0 <= lo <= hi, got [{}, {}]",
                i + 1,
                lo,
                hi
            )));
        }
        eps.push(Interval::new(*lo, *hi)?);
    }
    let epsilon = IntervalVector::new(eps)?;

    let problem = Problem {
        n,
        objectives,
        constraint_param: pf.constraint.param,
        t_desc,
        t_grid,
        g,
        omega,
        epsilon,
    };
    let warnings = problem.standing_assumption_warnings();
    Ok((problem, warnings))
}

impl Problem {
    /// Number of objectives.
    pub fn m(&self) -> usize {
        self.objectives.len()
    }

    /// Sampled check of the standing assumption `lower_i <= upper_i`.
    /// Violations are reported as warnings, not errors.
    fn standing_assumption_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        let per_axis: usize = match self.n {
            1 => 33,
            2 => 9,
            3 => 5,
            _ => 3,
        };
        let grid = crate::grid::GridSpec::cube(self.n, -5.0, 5.0, per_axis)
            .expect("static bounds");
        'outer: for (i, (lower, upper)) in self.objectives.iter().enumerate() {
            for x in grid.points() {
                let (lv, uv) = match (lower.eval(&x, None), upper.eval(&x, None)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue,
                };
                if lv > uv + 1e-12 {
                    warnings.push(format!(
                        "objective {}: lower({:?}) = {} exceeds upper = {}",
                        i + 1,
                        x,
                        lv,
                        uv
                    ));
                    continue 'outer;
                }
            }
        }
        warnings
    }

    /// `x` in omega and `g_t(x) <= tol` on the discretized index set.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.n || !self.omega.contains(x, tol) {
            return false;
        }
        self.t_grid.iter().all(|&t| {
            self.g
                .eval(x, Some(t))
                .map(|v| v <= tol)
                .unwrap_or(false)
        })
    }

    /// Discretized indices with `|g_t(x)| <= tol`; positive multipliers are
    /// only admitted on these.
    pub fn active_indices(&self, x: &[f64], tol: f64) -> Vec<f64> {
        self.t_grid
            .iter()
            .copied()
            .filter(|&t| {
                self.g
                    .eval(x, Some(t))
                    .map(|v| v.abs() <= tol)
                    .unwrap_or(false)
            })
            .collect()
    }

    /// Componentwise objective intervals at `x`.
    pub fn eval_objectives(&self, x: &[f64]) -> Result<IntervalVector> {
        let mut out = Vec::with_capacity(self.m());
        for (lower, upper) in &self.objectives {
            let lv = lower.eval(x, None)?;
            let uv = upper.eval(x, None)?;
            if lv > uv {
                return Err(Error::IntervalOrderViolated { lower: lv, upper: uv });
            }
            out.push(Interval::new(lv, uv)?);
        }
        IntervalVector::new(out)
    }

    /// Copy with the approximation vector set to zero (exact-Pareto mode).
    pub fn with_epsilon_zero(&self) -> Problem {
        let zeros = vec![Interval::new(0.0, 0.0).unwrap(); self.m()];
        Problem {
            epsilon: IntervalVector::new(zeros).unwrap(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EX41: &str = r#"{
        "n": 1,
        "objectives": [{"lower": "1/3*x1^3", "upper": "1/3*x1^3 + 1"}],
        "constraint": {"param": "t", "T": {"range": [0, 1], "grid": 101}, "expr": "-t*x1"},
        "omega": {"type": "all"},
        "epsilon": [[0.2, 0.25]]
    }"#;

    #[test]
    fn loads_cubic_example() {
        let (p, warnings) = problem_from_json(EX41).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(p.n, 1);
        assert_eq!(p.m(), 1);
        assert_eq!(p.t_grid.len(), 101);
        assert_eq!(p.epsilon.get(0).lo(), 0.2);
        assert_eq!(p.epsilon.get(0).hi(), 0.25);

        let f0 = p.eval_objectives(&[0.0]).unwrap();
        assert_eq!(f0.get(0).lo(), 0.0);
        assert_eq!(f0.get(0).hi(), 1.0);
        let f1 = p.eval_objectives(&[1.0]).unwrap();
        assert!((f1.get(0).lo() - 1.0 / 3.0).abs() <= 1e-15);
        assert!((f1.get(0).hi() - 4.0 / 3.0).abs() <= 1e-15);
    }

    #[test]
    fn feasibility_and_active_set() {
        let (p, _) = problem_from_json(EX41).unwrap();
        // g_t(x) = -t x: x = -1 violates at t = 1
        assert!(!p.is_feasible(&[-1.0], 1e-9));
        assert!(p.is_feasible(&[1.0], 1e-9));
        assert!(p.is_feasible(&[0.0], 1e-9));

        let all = p.active_indices(&[0.0], 1e-9);
        assert_eq!(all.len(), 101);
        let at_one = p.active_indices(&[1.0], 1e-9);
        assert_eq!(at_one, vec![0.0]);
    }

    #[test]
    fn rejects_bad_epsilon() {
        let bad = EX41.replace("[[0.2, 0.25]]", "[[0.3, 0.25]]");
        assert!(problem_from_json(&bad).is_err());
        let neg = EX41.replace("[[0.2, 0.25]]", "[[-0.1, 0.25]]");
        assert!(problem_from_json(&neg).is_err());
    }

    #[test]
    fn standing_assumption_warns() {
        let swapped = EX41
            .replace(
                r#""lower": "1/3*x1^3", "upper": "1/3*x1^3 + 1""#,
                r#""lower": "1/3*x1^3 + 1", "upper": "1/3*x1^3""#,
            );
        let (_, warnings) = problem_from_json(&swapped).unwrap();
        assert!(!warnings.is_empty());
    }

    #[test]
    fn box_omega_and_cones() {
        let boxed = EX41.replace(
            r#"{"type": "all"}"#,
            r#"{"type": "box", "lo": [0], "hi": ["inf"]}"#,
        );
        let (p, _) = problem_from_json(&boxed).unwrap();
        assert!(!p.is_feasible(&[-1.0], 1e-9));

        let cone = p.omega.normal_cone(&[0.0], 1e-9).unwrap();
        assert_eq!(cone.coords, vec![CoordCone::NonposRay]);
        assert!(cone.contains(&[-2.0], 0.0));
        assert!(!cone.contains(&[0.5], 1e-9));
        let polar = cone.polar();
        assert_eq!(polar.coords, vec![CoordCone::NonnegRay]);

        let interior = p.omega.normal_cone(&[3.0], 1e-9).unwrap();
        assert!(interior.is_zero());
        assert!(p.omega.normal_cone(&[-1.0], 1e-9).is_err());
    }

    #[test]
    fn whole_space_cone_is_zero() {
        let (p, _) = problem_from_json(EX41).unwrap();
        let cone = p.omega.normal_cone(&[5.0], 1e-9).unwrap();
        assert!(cone.is_zero());
        assert_eq!(cone.distance(&[1.0]), 1.0);
        assert!(cone.polar().contains(&[123.0], 0.0));
    }

    #[test]
    fn t_grid_refinement_keeps_infeasibility() {
        let coarse = EX41.replace(r#"{"range": [0, 1], "grid": 101}"#, r#"{"list": [0.0, 0.5, 1.0]}"#);
        let fine = EX41.replace(
            r#"{"range": [0, 1], "grid": 101}"#,
            r#"{"list": [0.0, 0.25, 0.5, 0.75, 1.0]}"#,
        );
        let (pc, _) = problem_from_json(&coarse).unwrap();
        let (pf, _) = problem_from_json(&fine).unwrap();
        for x in [-2.0, -0.5, -0.01] {
            if !pc.is_feasible(&[x], 1e-9) {
                assert!(!pf.is_feasible(&[x], 1e-9));
            }
        }
    }
}
