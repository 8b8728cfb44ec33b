//! Limiting-subdifferential extraction for the restricted grammar.
//!
//! The calculus walks the expression tree and applies, per node:
//!
//! * smooth subtrees: the gradient singleton;
//! * `max` of smooth branches: the convex hull of active gradients;
//! * `min` of smooth branches: the union of active gradients (the limiting
//!   subdifferential of a transversal crossing is nonconvex);
//! * sums: Minkowski sums of the summand sets;
//! * nonnegative scalings: scaled sets; negative scalings rewrite through
//!   negation (`-max` becomes `min` of negations, `-abs(u)` becomes
//!   `min(u, -u)`) so that the nonconvexity of limiting subdifferentials is
//!   preserved;
//! * `norm` of an affine map: the gradient away from the kernel, a ball term
//!   at it.
//!
//! Every result carries an exactness tag. Exact cases: smooth nodes, max of
//! smooth, min of smooth at transversal ties, sums whose nonsmooth summands
//! reference disjoint variable sets, and a norm at its center when the
//! affine map carries the unit ball onto a ball. Everything else is a
//! calculated superset.

use super::Expr;
use crate::error::Result;
use crate::subdiff_set::{Exactness, SubdiffSet, SubdiffTerm};

/// Branch `l` of a max/min counts as active when its value is within this
/// tolerance of the extreme value.
pub const ACTIVITY_TOL: f64 = 1e-9;

/// Two active min-branch gradients closer than this count as a degenerate
/// (tangential) tie.
const COINCIDENCE_TOL: f64 = 1e-9;

/// The limiting subdifferential of `e` at `x`, or a flagged superset of it.
pub fn limiting_subdiff(e: &Expr, x: &[f64], t: Option<f64>) -> Result<SubdiffSet> {
    let mut s = subdiff_rec(e, x, t, false)?;
    s.normalize();
    Ok(s)
}

/// Central-difference gradient `(e(x + h u_j) - e(x - h u_j)) / 2h`.
pub fn fd_gradient(e: &Expr, x: &[f64], h: f64, t: Option<f64>) -> Result<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let fp = e.eval(&xp, t)?;
        xp[j] = x[j] - h;
        let fm = e.eval(&xp, t)?;
        xp[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

fn neg_grad(mut g: Vec<f64>) -> Vec<f64> {
    for c in &mut g {
        *c = -*c;
    }
    g
}

/// Subdifferential of `e` (or of `-e` when `negate`).
fn subdiff_rec(e: &Expr, x: &[f64], t: Option<f64>, negate: bool) -> Result<SubdiffSet> {
    let n = x.len();
    if e.is_x_free() {
        return Ok(SubdiffSet::zero(n));
    }
    if e.is_smooth() {
        let (_, g) = e.eval_grad(x, t)?;
        return Ok(SubdiffSet::singleton(if negate { neg_grad(g) } else { g }));
    }
    match e {
        Expr::Neg(u) => subdiff_rec(u, x, t, !negate),
        Expr::Abs(u) => {
            let (v, g) = u.eval_grad(x, t)?;
            let branches = vec![(v, g.clone()), (-v, neg_grad(g))];
            if negate {
                // -|u| = min(u, -u)
                Ok(min_rule(flip(branches)))
            } else {
                Ok(max_rule(branches))
            }
        }
        Expr::Max(es) => {
            let branches = branch_values(es, x, t)?;
            if negate {
                Ok(min_rule(flip(branches)))
            } else {
                Ok(max_rule(branches))
            }
        }
        Expr::Min(es) => {
            let branches = branch_values(es, x, t)?;
            if negate {
                Ok(max_rule(flip(branches)))
            } else {
                Ok(min_rule(branches))
            }
        }
        Expr::Add(_, _) => sum_rule(e, x, t, negate),
        Expr::Mul(a, b) => {
            // validated: one factor is x-free (both-smooth is caught above)
            let (coeff_expr, inner) = if a.is_x_free() {
                (a, b)
            } else {
                (b, a)
            };
            let c = coeff_expr.eval(x, t)?;
            let k = if negate { -c } else { c };
            scale_signed(k, inner, x, t)
        }
        Expr::Norm(es) => norm_subdiff(es, x, t, negate),
        Expr::Const(_) | Expr::Var(_) | Expr::Param | Expr::Pow(_, _) => {
            unreachable!("handled by the smooth/x-free cases")
        }
        Expr::Abs(_) => unreachable!(),
    }
}

fn flip(branches: Vec<(f64, Vec<f64>)>) -> Vec<(f64, Vec<f64>)> {
    branches
        .into_iter()
        .map(|(v, g)| (-v, neg_grad(g)))
        .collect()
}

fn branch_values(es: &[Expr], x: &[f64], t: Option<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
    es.iter().map(|e| e.eval_grad(x, t)).collect()
}

/// Convex hull of active gradients, one polytope term.
fn max_rule(branches: Vec<(f64, Vec<f64>)>) -> SubdiffSet {
    let top = branches
        .iter()
        .map(|(v, _)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let vertices: Vec<Vec<f64>> = branches
        .into_iter()
        .filter(|(v, _)| *v >= top - ACTIVITY_TOL)
        .map(|(_, g)| g)
        .collect();
    SubdiffSet {
        terms: vec![SubdiffTerm {
            vertices,
            ball_radius: 0.0,
        }],
        exactness: Exactness::Exact,
    }
}

/// Union of active gradients; a degenerate tie (coincident active gradients)
/// downgrades to a superset tag.
fn min_rule(branches: Vec<(f64, Vec<f64>)>) -> SubdiffSet {
    let bottom = branches
        .iter()
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min);
    let active: Vec<Vec<f64>> = branches
        .into_iter()
        .filter(|(v, _)| *v <= bottom + ACTIVITY_TOL)
        .map(|(_, g)| g)
        .collect();
    let mut exactness = Exactness::Exact;
    for i in 0..active.len() {
        for j in i + 1..active.len() {
            let coincide = active[i]
                .iter()
                .zip(&active[j])
                .all(|(a, b)| (a - b).abs() <= COINCIDENCE_TOL);
            if coincide {
                exactness = Exactness::Superset;
            }
        }
    }
    SubdiffSet {
        terms: active.into_iter().map(SubdiffTerm::singleton).collect(),
        exactness,
    }
}

fn scale_signed(k: f64, e: &Expr, x: &[f64], t: Option<f64>) -> Result<SubdiffSet> {
    if k == 0.0 {
        return Ok(SubdiffSet::zero(x.len()));
    }
    if k > 0.0 {
        Ok(subdiff_rec(e, x, t, false)?.scale(k))
    } else {
        Ok(subdiff_rec(e, x, t, true)?.scale(-k))
    }
}

/// Flatten a sum into signed summands, walking through nested sums and
/// negations.
fn flatten_sum<'a>(e: &'a Expr, neg: bool, out: &mut Vec<(&'a Expr, bool)>) {
    match e {
        Expr::Add(a, b) => {
            flatten_sum(a, neg, out);
            flatten_sum(b, neg, out);
        }
        Expr::Neg(u) => flatten_sum(u, !neg, out),
        _ => out.push((e, neg)),
    }
}

fn sum_rule(e: &Expr, x: &[f64], t: Option<f64>, negate: bool) -> Result<SubdiffSet> {
    let n = x.len();
    let mut summands = Vec::new();
    flatten_sum(e, negate, &mut summands);

    let mut smooth_grad = vec![0.0; n];
    let mut nonsmooth: Vec<(&Expr, SubdiffSet)> = Vec::new();
    for (s, neg) in summands {
        if s.is_x_free() {
            continue;
        }
        if s.is_smooth() {
            let (_, g) = s.eval_grad(x, t)?;
            let sign = if neg { -1.0 } else { 1.0 };
            for (acc, c) in smooth_grad.iter_mut().zip(&g) {
                *acc += sign * c;
            }
        } else {
            let set = subdiff_rec(s, x, t, neg)?;
            nonsmooth.push((s, set));
        }
    }

    // The sum rule is exact when at most one summand is effectively
    // nonsmooth at x, or when the nonsmooth summands reference pairwise
    // disjoint variables (separable sums factor).
    let effective: Vec<&(&Expr, SubdiffSet)> = nonsmooth
        .iter()
        .filter(|(_, set)| !set.is_singleton())
        .collect();
    let mut rule_exact = true;
    if effective.len() > 1 {
        for i in 0..effective.len() {
            for j in i + 1..effective.len() {
                if effective[i].0.var_mask() & effective[j].0.var_mask() != 0 {
                    rule_exact = false;
                }
            }
        }
    }

    let mut acc = SubdiffSet::singleton(smooth_grad);
    for (_, set) in &nonsmooth {
        acc = acc.minkowski(set, true);
    }
    if !rule_exact {
        acc.exactness = Exactness::Superset;
    }
    Ok(acc)
}

fn norm_subdiff(es: &[Expr], x: &[f64], t: Option<f64>, negate: bool) -> Result<SubdiffSet> {
    let n = x.len();
    let mut vals = Vec::with_capacity(es.len());
    let mut grads = Vec::with_capacity(es.len());
    for e in es {
        let (v, g) = e.eval_grad(x, t)?;
        vals.push(v);
        grads.push(g);
    }
    let norm = vals.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > ACTIVITY_TOL {
        // smooth point: gradient J^T u / ||u||
        let mut g = vec![0.0; n];
        for (v, gr) in vals.iter().zip(&grads) {
            for (acc, c) in g.iter_mut().zip(gr) {
                *acc += v * c / norm;
            }
        }
        return Ok(SubdiffSet::singleton(if negate { neg_grad(g) } else { g }));
    }

    // At the center the subdifferential is the image of the unit ball under
    // J^T. H = sum of g_l g_l^T; the image is a ball exactly when H is a
    // multiple of the identity.
    let mut h = vec![vec![0.0; n]; n];
    for g in &grads {
        for p in 0..n {
            for q in 0..n {
                h[p][q] += g[p] * g[q];
            }
        }
    }
    let trace: f64 = (0..n).map(|p| h[p][p]).sum();
    let sigma2 = trace / n as f64;
    let mut isotropic = true;
    for p in 0..n {
        for q in 0..n {
            let target = if p == q { sigma2 } else { 0.0 };
            if (h[p][q] - target).abs() > 1e-12 * sigma2.max(1.0) {
                isotropic = false;
            }
        }
    }
    let (radius, exactness) = if isotropic && !negate {
        (sigma2.sqrt(), Exactness::Exact)
    } else if isotropic {
        // the negated norm has the sphere, a strict subset of the ball
        (sigma2.sqrt(), Exactness::Superset)
    } else {
        (trace.sqrt(), Exactness::Superset)
    };
    Ok(SubdiffSet {
        terms: vec![SubdiffTerm {
            vertices: vec![vec![0.0; n]],
            ball_radius: radius,
        }],
        exactness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn sd(text: &str, n: usize, x: &[f64], t: Option<f64>) -> SubdiffSet {
        limiting_subdiff(&parse_expr(text, n).unwrap(), x, t).unwrap()
    }

    #[test]
    fn abs_at_kink_is_segment() {
        let s = sd("abs(x1)", 1, &[0.0], None);
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[0].vertices, vec![vec![-1.0], vec![1.0]]);
        assert_eq!(s.terms[0].ball_radius, 0.0);
    }

    #[test]
    fn min_of_linears_is_two_points() {
        // matches the two-slope lower bound in the worked examples
        let s = sd("min(1/2*x1, 2/3*x1)", 1, &[0.0], None);
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 2);
        let mut verts: Vec<f64> = s.terms.iter().map(|t| t.vertices[0][0]).collect();
        verts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(verts, vec![0.5, 2.0 / 3.0]);
    }

    #[test]
    fn max_of_linears_is_hull() {
        let s = sd("max(1/2*x1, 2/3*x1)", 1, &[0.0], None);
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[0].vertices, vec![vec![0.5], vec![2.0 / 3.0]]);
    }

    #[test]
    fn negated_abs_is_two_points() {
        let s = sd("-abs(x1)", 1, &[0.0], None);
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 2);
        let mut verts: Vec<f64> = s.terms.iter().map(|t| t.vertices[0][0]).collect();
        verts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(verts, vec![-1.0, 1.0]);
    }

    #[test]
    fn smooth_point_matches_symbolic_derivative() {
        let s = sd("1/3*x1^3", 1, &[1.0], None);
        let v = s.singleton_vertex().unwrap();
        assert!((v[0] - 1.0).abs() <= 1e-12);
        let g = fd_gradient(&parse_expr("1/3*x1^3", 1).unwrap(), &[1.0], 1e-6, None).unwrap();
        assert!((g[0] - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn fd_gradient_at_origin() {
        let e = parse_expr("x1^2 + (x1*x2 - 1)^2", 2).unwrap();
        let g = fd_gradient(&e, &[0.0, 0.0], 1e-6, None).unwrap();
        assert!(g[0].abs() <= 1e-5 && g[1].abs() <= 1e-5);
        let e2 = parse_expr("7", 2).unwrap();
        assert_eq!(fd_gradient(&e2, &[1.0, 2.0], 1e-6, None).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn disjoint_sum_is_exact_cartesian() {
        let s = sd("abs(x1) + abs(x2)", 2, &[0.0, 0.0], None);
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[0].vertices.len(), 4);
    }

    #[test]
    fn shared_variable_sum_is_superset() {
        let s = sd("abs(x1) + 2*abs(x1)", 1, &[0.0], None);
        assert_eq!(s.exactness, Exactness::Superset);
    }

    #[test]
    fn scaled_negated_abs_pair() {
        // constraint family of the first worked example at the origin
        let s = sd("-t*abs(x1) - t*abs(x2)", 2, &[0.0, 0.0], Some(0.5));
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 4);
        for term in &s.terms {
            assert_eq!(term.vertices.len(), 1);
            for c in &term.vertices[0] {
                assert!((c.abs() - 0.5).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn zero_scaling_annihilates() {
        let s = sd("-t*abs(x1) - t*abs(x2)", 2, &[0.0, 0.0], Some(0.0));
        assert!(s.is_singleton());
        assert_eq!(s.singleton_vertex().unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn norm_at_center_is_unit_ball() {
        let s = sd("norm(x1, x2)", 2, &[0.0, 0.0], None);
        assert_eq!(s.exactness, Exactness::Exact);
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[0].ball_radius, 1.0);
        assert_eq!(s.terms[0].vertices, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn norm_off_center_is_gradient() {
        let s = sd("norm(x1, x2)", 2, &[3.0, 4.0], None);
        let v = s.singleton_vertex().unwrap();
        assert!((v[0] - 0.6).abs() <= 1e-12 && (v[1] - 0.8).abs() <= 1e-12);
    }

    #[test]
    fn anisotropic_norm_is_superset() {
        let s = sd("norm(2*x1, x2)", 2, &[0.0, 0.0], None);
        assert_eq!(s.exactness, Exactness::Superset);
        assert!(s.terms[0].ball_radius >= 2.0);
    }

    #[test]
    fn min_with_coincident_gradients_flags_superset() {
        let s = sd("min(x1^2, 2*x1^2)", 1, &[0.0], None);
        assert_eq!(s.exactness, Exactness::Superset);
    }
}
