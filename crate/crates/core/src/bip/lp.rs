//! Dense bounded-variable primal simplex used for LP relaxations.
//!
//! Solves `min c.x` subject to rows `a.x <= b` or `a.x = b` with
//! `0 <= x_j <= upper_j`. Two phases with artificial variables; Dantzig
//! pricing that falls back to Bland's rule after a run of degenerate pivots.

const EPS: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-7;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub terms: Vec<(usize, f64)>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    /// Iteration limit hit; should not happen on bounded problems.
    Stalled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced costs.
    d: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<ColState>,
    upper: Vec<f64>,
}

impl Tableau {
    fn value_of_nonbasic(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Upper => self.upper[j],
            _ => 0.0,
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dj, &t) in self.d.iter_mut().zip(row.iter()) {
                    *dj -= cb * t;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.rows[r][j];
        for t in self.rows[r].iter_mut() {
            *t /= p;
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f.abs() > 0.0 {
                for (t, &pr) in row.iter_mut().zip(pivot_row.iter()) {
                    *t -= f * pr;
                }
                row[j] = 0.0;
            }
        }
        let f = self.d[j];
        if f != 0.0 {
            for (t, &pr) in self.d.iter_mut().zip(pivot_row.iter()) {
                *t -= f * pr;
            }
            self.d[j] = 0.0;
        }
        self.rows[r] = pivot_row;
        self.state[self.basis[r]] = ColState::Lower; // caller fixes the real state
        self.basis[r] = j;
        self.state[j] = ColState::Basic;
    }

    /// Dual simplex from a dual feasible basis. Some(true) at a primal
    /// feasible basis, Some(false) when the rows are infeasible, None on
    /// the iteration limit.
    fn dual_optimize(&mut self, max_iter: usize) -> Option<bool> {
        for _ in 0..max_iter {
            // leaving row: largest bound violation, lowest index on ties
            let mut leave: Option<(usize, f64, bool)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let (viol, to_upper) = if self.beta[i] < -FEAS_EPS {
                    (-self.beta[i], false)
                } else if self.beta[i] > self.upper[b] + FEAS_EPS {
                    (self.beta[i] - self.upper[b], true)
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, v, _)| viol > v) {
                    leave = Some((i, viol, to_upper));
                }
            }
            let Some((r, _, to_upper)) = leave else { return Some(true) };
            let target = if to_upper { self.upper[self.basis[r]] } else { 0.0 };
            // x_B(r) moves by -alpha * dx_j; it must rise unless leaving at upper
            let rise = if to_upper { -1.0 } else { 1.0 };
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.d.len() {
                let alpha = self.rows[r][j];
                if alpha.abs() <= PIVOT_EPS {
                    continue;
                }
                let dir = match self.state[j] {
                    ColState::Basic => continue,
                    ColState::Lower if self.upper[j] > 0.0 => 1.0,
                    ColState::Upper => -1.0,
                    _ => continue,
                };
                if -alpha * dir * rise <= 0.0 {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                let better = match entering {
                    None => true,
                    Some((_, best, best_alpha)) => {
                        ratio < best - 1e-12 || (ratio <= best + 1e-12 && alpha.abs() > best_alpha)
                    }
                };
                if better {
                    entering = Some((j, ratio, alpha.abs()));
                }
            }
            let Some((j, _, _)) = entering else { return Some(false) };
            let alpha = self.rows[r][j];
            let step = (self.beta[r] - target) / alpha;
            for (i, row) in self.rows.iter().enumerate() {
                self.beta[i] -= row[j] * step;
            }
            let entering_value = self.value_of_nonbasic(j) + step;
            let leaving = self.basis[r];
            self.pivot(r, j);
            self.state[leaving] = if to_upper { ColState::Upper } else { ColState::Lower };
            self.beta[r] = entering_value;
        }
        None
    }

    /// Runs simplex iterations on the current cost row. Returns false if the
    /// iteration limit was hit.
    fn optimize(&mut self, max_iter: usize) -> bool {
        let ncols = self.d.len();
        let mut degenerate = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..ncols {
                let dj = self.d[j];
                let score = match self.state[j] {
                    ColState::Basic => continue,
                    ColState::Lower if dj < -EPS && self.upper[j] > 0.0 => -dj,
                    ColState::Upper if dj > EPS => dj,
                    _ => continue,
                };
                if bland {
                    entering = Some(j);
                    break;
                }
                if score > best {
                    best = score;
                    entering = Some(j);
                }
            }
            let Some(j) = entering else { return true };
            let dir = if self.state[j] == ColState::Lower { 1.0 } else { -1.0 };

            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None; // (row, leaves at upper)
            for (i, row) in self.rows.iter().enumerate() {
                let alpha = row[j] * dir;
                let b = self.basis[i];
                let limit = if alpha > PIVOT_EPS {
                    (self.beta[i].max(0.0) / alpha, false)
                } else if alpha < -PIVOT_EPS && self.upper[b].is_finite() {
                    (((self.upper[b] - self.beta[i]).max(0.0)) / -alpha, true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit.0 < theta,
                    Some((li, _)) => {
                        limit.0 < theta - 1e-12 || (limit.0 <= theta + 1e-12 && b < self.basis[li])
                    }
                };
                if better {
                    theta = limit.0;
                    leave = Some((i, limit.1));
                }
            }
            if !theta.is_finite() {
                return false;
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for (i, row) in self.rows.iter().enumerate() {
                self.beta[i] -= row[j] * dir * theta;
            }
            match leave {
                None => {
                    self.state[j] = if dir > 0.0 { ColState::Upper } else { ColState::Lower };
                }
                Some((r, at_upper)) => {
                    let entering_value = self.value_of_nonbasic(j) + dir * theta;
                    let leaving = self.basis[r];
                    self.pivot(r, j);
                    self.state[leaving] = if at_upper { ColState::Upper } else { ColState::Lower };
                    self.beta[r] = entering_value;
                }
            }
        }
        false
    }
}

/// Solves the LP. `upper` gives each structural variable's upper bound.
#[cfg(test)]
pub(crate) fn solve_lp(cost: &[f64], upper: &[f64], rows: &[LpRow]) -> LpOutcome {
    LpSolver::new(cost, upper, rows).0
}

/// An optimal tableau kept for re-solving after rows are added.
pub(crate) struct LpSolver {
    tab: Tableau,
    n: usize,
    cost: Vec<f64>,
}

impl LpSolver {
    /// Solves from scratch; the solver is returned only at an optimum.
    pub(crate) fn new(cost: &[f64], upper: &[f64], rows: &[LpRow]) -> (LpOutcome, Option<LpSolver>) {
        let n = cost.len();
        let m = rows.len();
        // column layout: structural | one slack per Le row | one artificial per row needing it
        let slack_of: Vec<Option<usize>> = {
            let mut next = n;
            rows.iter()
                .map(|r| {
                    (r.kind == RowKind::Le).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let n_slack = slack_of.iter().flatten().count();
        let needs_art: Vec<bool> = rows.iter().map(|r| r.kind == RowKind::Eq || r.rhs < 0.0).collect();
        let n_art = needs_art.iter().filter(|&&b| b).count();
        let ncols = n + n_slack + n_art;
        let mut tab = Tableau {
            rows: vec![vec![0.0; ncols]; m],
            d: vec![0.0; ncols],
            beta: vec![0.0; m],
            basis: vec![0; m],
            state: vec![ColState::Lower; ncols],
            upper: vec![f64::INFINITY; ncols],
        };
        tab.upper[..n].copy_from_slice(upper);
        let mut art_col = n + n_slack;
        let mut art_cols = Vec::with_capacity(n_art);
        for (i, row) in rows.iter().enumerate() {
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            for &(j, a) in &row.terms {
                tab.rows[i][j] += sign * a;
            }
            if let Some(s) = slack_of[i] {
                tab.rows[i][s] = sign;
            }
            tab.beta[i] = sign * row.rhs;
            if needs_art[i] {
                tab.rows[i][art_col] = 1.0;
                tab.basis[i] = art_col;
                art_cols.push(art_col);
                art_col += 1;
            } else {
                tab.basis[i] = slack_of[i].unwrap();
            }
            tab.state[tab.basis[i]] = ColState::Basic;
        }
        let max_iter = 50 * (ncols + m) + 1000;
        if n_art > 0 {
            let mut phase1 = vec![0.0; ncols];
            for &a in &art_cols {
                phase1[a] = 1.0;
            }
            tab.set_costs(&phase1);
            if !tab.optimize(max_iter) {
                return (LpOutcome::Stalled, None);
            }
            let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n + n_slack).map(|i| tab.beta[i]).sum();
            if infeas > FEAS_EPS {
                return (LpOutcome::Infeasible, None);
            }
            // drive zero-valued artificials out of the basis where possible
            for i in 0..m {
                if tab.basis[i] < n + n_slack {
                    continue;
                }
                if let Some(j) = (0..n + n_slack)
                    .find(|&j| tab.state[j] != ColState::Basic && tab.rows[i][j].abs() > 1e-7)
                {
                    let entering_value = tab.value_of_nonbasic(j);
                    let leaving = tab.basis[i];
                    tab.pivot(i, j);
                    tab.state[leaving] = ColState::Lower;
                    tab.beta[i] = entering_value;
                }
            }
            for &a in &art_cols {
                tab.upper[a] = 0.0;
            }
        }
        let mut full_cost = vec![0.0; ncols];
        full_cost[..n].copy_from_slice(cost);
        tab.set_costs(&full_cost);
        if !tab.optimize(max_iter) {
            return (LpOutcome::Stalled, None);
        }
        let solver = LpSolver { tab, n, cost: cost.to_vec() };
        (solver.outcome(), Some(solver))
    }

    fn outcome(&self) -> LpOutcome {
        let x = self.values();
        let value = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        LpOutcome::Optimal { x, value }
    }

    /// Structural variable values.
    fn values(&self) -> Vec<f64> {
        let tab = &self.tab;
        let mut x: Vec<f64> = (0..self.n).map(|j| tab.value_of_nonbasic(j)).collect();
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < self.n {
                x[b] = tab.beta[i].clamp(0.0, tab.upper[b]);
            }
        }
        x
    }

    /// Adds `<=` rows to an optimal tableau and restores optimality with
    /// dual simplex. The solver must not be used again after a non-optimal
    /// outcome.
    pub(crate) fn add_rows(&mut self, rows: &[LpRow]) -> LpOutcome {
        let x = self.values();
        for row in rows {
            debug_assert!(row.kind == RowKind::Le);
            let tab = &mut self.tab;
            let s = tab.d.len();
            for r in tab.rows.iter_mut() {
                r.push(0.0);
            }
            tab.d.push(0.0);
            tab.upper.push(f64::INFINITY);
            tab.state.push(ColState::Basic);
            let mut new_row = vec![0.0; s + 1];
            for &(j, a) in &row.terms {
                new_row[j] += a;
            }
            new_row[s] = 1.0;
            for (i, r) in tab.rows.iter().enumerate() {
                let c = new_row[tab.basis[i]];
                if c != 0.0 {
                    for (t, &v) in new_row.iter_mut().zip(r.iter()) {
                        *t -= c * v;
                    }
                    new_row[tab.basis[i]] = 0.0;
                }
            }
            let activity: f64 = row.terms.iter().map(|&(j, a)| a * x[j]).sum();
            tab.rows.push(new_row);
            tab.beta.push(row.rhs - activity);
            tab.basis.push(s);
        }
        let max_iter = 50 * (self.tab.d.len() + self.tab.rows.len()) + 1000;
        match self.tab.dual_optimize(max_iter) {
            Some(true) => {}
            Some(false) => return LpOutcome::Infeasible,
            None => return LpOutcome::Stalled,
        }
        if !self.tab.optimize(max_iter) {
            return LpOutcome::Stalled;
        }
        self.outcome()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(terms: &[(usize, f64)], rhs: f64) -> LpRow {
        LpRow { terms: terms.to_vec(), kind: RowKind::Le, rhs }
    }

    fn optimal(out: LpOutcome) -> (Vec<f64>, f64) {
        match out {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn box_only() {
        let (x, v) = optimal(solve_lp(&[-1.0, 2.0], &[1.0, 1.0], &[]));
        assert_eq!(x, vec![1.0, 0.0]);
        assert_eq!(v, -1.0);
    }

    #[test]
    fn covering_row() {
        // min x + y, x + y >= 1
        let (_, v) = optimal(solve_lp(&[1.0, 1.0], &[1.0, 1.0], &[le(&[(0, -1.0), (1, -1.0)], -1.0)]));
        assert!((v - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_optimum() {
        // max x + y + z with pairwise x + y <= 1 etc: optimum 1.5 at 1/2
        let rows = vec![le(&[(0, 1.0), (1, 1.0)], 1.0), le(&[(1, 1.0), (2, 1.0)], 1.0), le(&[(0, 1.0), (2, 1.0)], 1.0)];
        let (x, v) = optimal(solve_lp(&[-1.0, -1.0, -1.0], &[1.0; 3], &rows));
        assert!((v + 1.5).abs() < 1e-9, "{x:?}");
    }

    #[test]
    fn equality_and_infeasible() {
        let rows = vec![LpRow { terms: vec![(0, 1.0), (1, 1.0)], kind: RowKind::Eq, rhs: 1.5 }];
        let (x, v) = optimal(solve_lp(&[1.0, 3.0], &[1.0, 1.0], &rows));
        assert!((v - 2.5).abs() < 1e-9, "{x:?}");
        let rows = vec![LpRow { terms: vec![(0, 1.0), (1, 1.0)], kind: RowKind::Eq, rhs: 3.0 }];
        assert_eq!(solve_lp(&[1.0, 1.0], &[1.0, 1.0], &rows), LpOutcome::Infeasible);
    }

    #[test]
    fn added_rows_match_fresh_solve() {
        // max sum x over a 5-cycle of pair rows, then tighten with cuts
        let cost = [-1.0, -1.0, -1.0, -1.0, -1.0];
        let cycle: Vec<LpRow> = (0..5).map(|i| le(&[(i, 1.0), ((i + 1) % 5, 1.0)], 1.0)).collect();
        let cuts = vec![le(&[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0)], 2.0), le(&[(0, 1.0), (2, -1.0)], -0.5)];
        let (first, solver) = LpSolver::new(&cost, &[1.0; 5], &cycle);
        assert!((optimal(first).1 + 2.5).abs() < 1e-9);
        let mut solver = solver.unwrap();
        let (_, warm) = optimal(solver.add_rows(&cuts));
        let all: Vec<LpRow> = cycle.iter().chain(&cuts).cloned().collect();
        let (_, fresh) = optimal(solve_lp(&cost, &[1.0; 5], &all));
        assert!((warm - fresh).abs() < 1e-9, "{warm} vs {fresh}");
        assert!((warm + 2.0).abs() < 1e-9);
        let infeasible = vec![le(&[(0, 1.0)], -1.0)];
        assert_eq!(solver.add_rows(&infeasible), LpOutcome::Infeasible);
    }
}
