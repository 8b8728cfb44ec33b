//! Dense two-phase simplex for the small linear programs behind the
//! certificate solver and the convexity audits.
//!
//! Problems have the form
//!
//! ```text
//! minimize c'x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
//! ```
//!
//! Bland's rule guards against cycling. Dual values follow the convention
//! `c + A_ub' y_ub + A_eq' y_eq >= 0` with `y_ub >= 0`, so the optimal value
//! equals `-(y_ub' b_ub + y_eq' b_eq)`. For infeasible problems the returned
//! multipliers form a Farkas certificate: `A_ub' y_ub + A_eq' y_eq >= 0`
//! componentwise with `y_ub >= 0` and `y_ub' b_ub + y_eq' b_eq < 0`.

#[derive(Debug, Clone)]
pub struct Lp {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub y_ub: Vec<f64>,
    pub y_eq: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 50_000;

enum RowKind {
    Ub { index: usize, flipped: bool },
    Eq { index: usize, flipped: bool },
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    kinds: Vec<RowKind>,
    init_col: Vec<usize>,
    n_struct: usize,
    n_art: usize,
    banned: Vec<bool>,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.n_struct + self.n_art
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let ncols = self.ncols();
        let mut z = vec![0.0; ncols];
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..ncols {
                    z[j] += cb * row[j];
                }
            }
        }
        (0..ncols).map(|j| cost[j] - z[j]).collect()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][c];
            if factor != 0.0 {
                for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                self.rhs[i] -= factor * pivot_rhs;
            }
        }
        self.basis[r] = c;
    }

    /// Bland-rule simplex on a given cost vector. Returns false on
    /// unboundedness.
    fn run(&mut self, cost: &[f64]) -> bool {
        for _ in 0..MAX_ITERS {
            let r = self.reduced_costs(cost);
            let entering = (0..self.ncols())
                .find(|&j| !self.banned[j] && r[j] < -COST_TOL);
            let Some(col) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return false;
            };
            self.pivot(row, col);
        }
        true
    }

    /// Duals of the tableau rows for a cost vector, via the columns that
    /// started as the identity basis.
    fn row_duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.rows.len();
        let mut y = vec![0.0; m];
        for i in 0..m {
            let col = self.init_col[i];
            let mut v = 0.0;
            for k in 0..m {
                let cb = cost[self.basis[k]];
                if cb != 0.0 {
                    v += cb * self.rows[k][col];
                }
            }
            y[i] = v;
        }
        y
    }
}

pub fn solve(lp: &Lp) -> LpResult {
    let nv = lp.c.len();
    let n_ub = lp.a_ub.len();
    let n_eq = lp.a_eq.len();

    // Column layout: structural vars, then one slack/surplus per ub row,
    // then artificials.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n_ub + n_eq);
    let mut rhs = Vec::with_capacity(n_ub + n_eq);
    let mut kinds = Vec::with_capacity(n_ub + n_eq);
    let n_struct = nv + n_ub;
    let mut n_art = 0;
    for i in 0..n_ub {
        let flip = lp.b_ub[i] < 0.0;
        kinds.push(RowKind::Ub { index: i, flipped: flip });
        if flip {
            n_art += 1;
        }
    }
    for i in 0..n_eq {
        let flip = lp.b_eq[i] < 0.0;
        kinds.push(RowKind::Eq { index: i, flipped: flip });
        n_art += 1;
    }

    let ncols = n_struct + n_art;
    let mut basis = Vec::with_capacity(kinds.len());
    let mut init_col = Vec::with_capacity(kinds.len());
    let mut art_cursor = n_struct;
    for kind in &kinds {
        let mut row = vec![0.0; ncols];
        match kind {
            RowKind::Ub { index, flipped } => {
                let sign = if *flipped { -1.0 } else { 1.0 };
                for j in 0..nv {
                    row[j] = sign * lp.a_ub[*index][j];
                }
                // slack (+1) when kept, surplus (-1) when flipped
                row[nv + index] = if *flipped { -1.0 } else { 1.0 };
                rhs.push(sign * lp.b_ub[*index]);
                if *flipped {
                    row[art_cursor] = 1.0;
                    basis.push(art_cursor);
                    init_col.push(art_cursor);
                    art_cursor += 1;
                } else {
                    basis.push(nv + index);
                    init_col.push(nv + index);
                }
            }
            RowKind::Eq { index, flipped } => {
                let sign = if *flipped { -1.0 } else { 1.0 };
                for j in 0..nv {
                    row[j] = sign * lp.a_eq[*index][j];
                }
                rhs.push(sign * lp.b_eq[*index]);
                row[art_cursor] = 1.0;
                basis.push(art_cursor);
                init_col.push(art_cursor);
                art_cursor += 1;
            }
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        rhs,
        basis,
        kinds,
        init_col,
        n_struct,
        n_art,
        banned: vec![false; ncols],
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; ncols];
    for j in n_struct..ncols {
        phase1_cost[j] = 1.0;
    }
    if t.n_art > 0 {
        t.run(&phase1_cost);
        let w: f64 = t
            .basis
            .iter()
            .zip(&t.rhs)
            .filter(|(b, _)| **b >= n_struct)
            .map(|(_, v)| v)
            .sum();
        if w > 1e-7 {
            // Infeasible; the phase-1 duals are the Farkas certificate.
            let y = t.row_duals(&phase1_cost);
            let (y_ub, y_eq) = map_duals(&t, &y);
            return LpResult {
                status: LpStatus::Infeasible,
                x: vec![0.0; nv],
                objective: f64::INFINITY,
                y_ub,
                y_eq,
            };
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..t.rows.len() {
            if t.basis[i] >= n_struct {
                if let Some(j) = (0..n_struct).find(|&j| t.rows[i][j].abs() > PIVOT_TOL) {
                    t.pivot(i, j);
                }
            }
        }
        for j in n_struct..ncols {
            t.banned[j] = true;
        }
    }

    // Phase 2.
    let mut cost = vec![0.0; ncols];
    cost[..nv].copy_from_slice(&lp.c);
    let bounded = t.run(&cost);
    if !bounded {
        return LpResult {
            status: LpStatus::Unbounded,
            x: vec![0.0; nv],
            objective: f64::NEG_INFINITY,
            y_ub: vec![0.0; n_ub],
            y_eq: vec![0.0; n_eq],
        };
    }

    let mut x = vec![0.0; nv];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < nv {
            x[b] = t.rhs[i];
        }
    }
    let objective = lp.c.iter().zip(&x).map(|(c, v)| c * v).sum();
    let y = t.row_duals(&cost);
    let (y_ub, y_eq) = map_duals(&t, &y);
    LpResult {
        status: LpStatus::Optimal,
        x,
        objective,
        y_ub,
        y_eq,
    }
}

/// Map tableau-row duals back to original rows under the convention in the
/// module docs (`y_hat = -y_tab`, undoing row flips).
fn map_duals(t: &Tableau, y_tab: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n_ub = t
        .kinds
        .iter()
        .filter(|k| matches!(k, RowKind::Ub { .. }))
        .count();
    let n_eq = t.kinds.len() - n_ub;
    let mut y_ub = vec![0.0; n_ub];
    let mut y_eq = vec![0.0; n_eq];
    for (i, kind) in t.kinds.iter().enumerate() {
        let y_hat = -y_tab[i];
        match kind {
            RowKind::Ub { index, flipped } => {
                y_ub[*index] = if *flipped { -y_hat } else { y_hat };
            }
            RowKind::Eq { index, flipped } => {
                y_eq[*index] = if *flipped { -y_hat } else { y_hat };
            }
        }
    }
    (y_ub, y_eq)
}

/// Componentwise stationarity residual `min(0, c + A_ub' y_ub + A_eq' y_eq)`
/// plus dual-sign violations; near zero at a verified optimum or Farkas
/// certificate (with `c = 0`).
pub fn dual_residual(lp: &Lp, res: &LpResult, farkas: bool) -> f64 {
    let nv = lp.c.len();
    let mut worst: f64 = 0.0;
    for j in 0..nv {
        let mut v = if farkas { 0.0 } else { lp.c[j] };
        for (row, y) in lp.a_ub.iter().zip(&res.y_ub) {
            v += row[j] * y;
        }
        for (row, y) in lp.a_eq.iter().zip(&res.y_eq) {
            v += row[j] * y;
        }
        worst = worst.max((-v).max(0.0));
    }
    for y in &res.y_ub {
        worst = worst.max((-y).max(0.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, a_ub: Vec<Vec<f64>>, b_ub: Vec<f64>, a_eq: Vec<Vec<f64>>, b_eq: Vec<f64>) -> Lp {
        Lp { c, a_ub, b_ub, a_eq, b_eq }
    }

    #[test]
    fn simple_optimum_and_duals() {
        // min -x1 - 2 x2 s.t. x1 + x2 <= 4, x2 <= 3, x >= 0
        let p = lp(
            vec![-1.0, -2.0],
            vec![vec![1.0, 1.0], vec![0.0, 1.0]],
            vec![4.0, 3.0],
            vec![],
            vec![],
        );
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - (-7.0)).abs() <= 1e-9);
        assert!((r.x[0] - 1.0).abs() <= 1e-9 && (r.x[1] - 3.0).abs() <= 1e-9);
        // strong duality: objective == -(y'b)
        let yb: f64 = r.y_ub[0] * 4.0 + r.y_ub[1] * 3.0;
        assert!((r.objective + yb).abs() <= 1e-8);
        assert!(dual_residual(&p, &r, false) <= 1e-8);
    }

    #[test]
    fn equality_rows() {
        // min x1 + x2 s.t. x1 + 2 x2 = 2
        let p = lp(vec![1.0, 1.0], vec![], vec![], vec![vec![1.0, 2.0]], vec![2.0]);
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 1.0).abs() <= 1e-9);
        assert!((r.x[1] - 1.0).abs() <= 1e-9);
        assert!(dual_residual(&p, &r, false) <= 1e-8);
    }

    #[test]
    fn infeasible_with_farkas() {
        // x1 <= -1 with x1 >= 0 is empty
        let p = lp(vec![0.0], vec![vec![1.0]], vec![-1.0], vec![], vec![]);
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Infeasible);
        // Farkas: y >= 0, A' y >= 0, y'b < 0
        assert!(r.y_ub[0] >= -1e-12);
        assert!(r.y_ub[0] * (-1.0) < -1e-8);
        assert!(dual_residual(&p, &r, true) <= 1e-8);
    }

    #[test]
    fn infeasible_conflicting_inequalities() {
        // x1 <= 1 and -x1 <= -2 (x1 >= 2)
        let p = lp(
            vec![0.0],
            vec![vec![1.0], vec![-1.0]],
            vec![1.0, -2.0],
            vec![],
            vec![],
        );
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Infeasible);
        let yb = r.y_ub[0] * 1.0 + r.y_ub[1] * (-2.0);
        assert!(yb < -1e-8);
        assert!(dual_residual(&p, &r, true) <= 1e-8);
    }

    #[test]
    fn unbounded_detected() {
        let p = lp(vec![-1.0], vec![], vec![], vec![], vec![]);
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_does_not_cycle() {
        // classic degenerate corner
        let p = lp(
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![
                vec![0.25, -60.0, -0.04, 9.0],
                vec![0.5, -90.0, -0.02, 3.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![0.0, 0.0, 1.0],
            vec![],
            vec![],
        );
        let r = solve(&p);
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - (-0.05)).abs() <= 1e-6);
    }
}
