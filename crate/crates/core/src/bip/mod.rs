//! Exact solver for linear programs over 0/1 variables.
//!
//! Depth-first branch-and-bound. Each node propagates activity bounds over
//! every constraint, then bounds the subtree with the LP relaxation of the
//! remaining free variables. Large programs keep only the rows that have
//! been violated so far in the relaxation and add more on demand, which
//! yields the same bound as the full relaxation. Branching picks the most
//! fractional variable (lowest index on ties), rounded side first.

mod lp;

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::{Result, ToroError};
use lp::{LpOutcome, LpRow, LpSolver, RowKind};

/// Constraint satisfaction tolerance.
const CHECK_TOL: f64 = 1e-7;
const INTEGRAL_TOL: f64 = 1e-6;
/// Programs with more (normalized) rows than this use lazy row activation.
const LAZY_ROW_THRESHOLD: usize = 300;
const ROWS_PER_ROUND: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(Var, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    fn activity(&self, x: &[bool]) -> f64 {
        self.terms.iter().filter(|(v, _)| x[v.0]).map(|(_, a)| a).sum()
    }

    fn holds(&self, x: &[bool]) -> bool {
        let act = self.activity(x);
        match self.relation {
            Relation::Le => act <= self.rhs + CHECK_TOL,
            Relation::Ge => act >= self.rhs - CHECK_TOL,
            Relation::Eq => (act - self.rhs).abs() <= CHECK_TOL,
        }
    }
}

/// A linear program whose variables are all binary.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProgram {
    names: Vec<String>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    offset: f64,
    sense: Sense,
}

impl BinaryProgram {
    pub fn new(sense: Sense) -> Self {
        BinaryProgram { names: Vec::new(), constraints: Vec::new(), objective: Vec::new(), offset: 0.0, sense }
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Var {
        self.names.push(name.into());
        self.objective.push(0.0);
        Var(self.names.len() - 1)
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn name(&self, v: Var) -> &str {
        &self.names[v.0]
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Adds `sum(terms) relation rhs`. Repeated variables are merged.
    pub fn add_constraint(&mut self, terms: &[(Var, f64)], relation: Relation, rhs: f64) -> Result<()> {
        let mut merged: Vec<(Var, f64)> = Vec::with_capacity(terms.len());
        for &(v, a) in terms {
            if v.0 >= self.names.len() {
                return Err(ToroError::InvalidParameter(format!("undeclared variable {}", v.0)));
            }
            if !a.is_finite() {
                return Err(ToroError::InvalidParameter(format!("non-finite coefficient on {}", self.names[v.0])));
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, c)) => *c += a,
                None => merged.push((v, a)),
            }
        }
        if !rhs.is_finite() {
            return Err(ToroError::InvalidParameter("non-finite right-hand side".into()));
        }
        merged.retain(|(_, a)| *a != 0.0);
        self.constraints.push(Constraint { terms: merged, relation, rhs });
        Ok(())
    }

    pub fn set_objective_coef(&mut self, v: Var, coef: f64) {
        self.objective[v.0] = coef;
    }

    pub fn add_objective_coef(&mut self, v: Var, coef: f64) {
        self.objective[v.0] += coef;
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.offset = offset;
    }

    pub fn objective_value(&self, x: &[bool]) -> f64 {
        self.offset + self.objective.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum::<f64>()
    }

    /// Index of the first violated constraint, if any.
    pub fn first_violation(&self, x: &[bool]) -> Option<usize> {
        if x.len() != self.names.len() {
            return Some(usize::MAX);
        }
        self.constraints.iter().position(|c| !c.holds(x))
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        self.first_violation(x).is_none()
    }

    /// CPLEX LP text format, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let var = |v: usize| sanitize(&self.names[v], v);
        let expr = |terms: &mut dyn Iterator<Item = (usize, f64)>| -> String {
            let mut s = String::new();
            for (k, (v, a)) in terms.enumerate() {
                let sign = match (k, a < 0.0) {
                    (0, false) => "",
                    (0, true) => "- ",
                    (_, false) => " + ",
                    (_, true) => " - ",
                };
                write!(s, "{sign}{} {}", a.abs(), var(v)).unwrap();
            }
            if s.is_empty() {
                s.push('0');
            }
            s
        };
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "Minimize\n",
            Sense::Maximize => "Maximize\n",
        });
        let mut obj_terms = self.objective.iter().copied().enumerate().filter(|(_, c)| *c != 0.0);
        writeln!(out, " obj: {}", expr(&mut obj_terms)).unwrap();
        out.push_str("Subject To\n");
        for (k, c) in self.constraints.iter().enumerate() {
            let mut terms = c.terms.iter().map(|(v, a)| (v.0, *a));
            writeln!(out, " c{k}: {} {} {}", expr(&mut terms), c.relation.symbol(), c.rhs).unwrap();
        }
        out.push_str("Binary\n");
        for v in 0..self.names.len() {
            writeln!(out, " {}", var(v)).unwrap();
        }
        out.push_str("End\n");
        out
    }
}

fn sanitize(name: &str, index: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.".contains(c) { c } else { '_' })
        .collect();
    if cleaned.is_empty() || cleaned.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("x{index}_{cleaned}")
    } else {
        cleaned
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    TimeoutWithIncumbent,
    TimeoutWithoutIncumbent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// Empty unless an assignment was found.
    pub assignment: Vec<bool>,
    pub objective_value: f64,
    pub status: Status,
    pub nodes: usize,
}

impl Solution {
    pub fn value(&self, v: Var) -> bool {
        self.assignment[v.0]
    }

    pub fn has_assignment(&self) -> bool {
        matches!(self.status, Status::Optimal | Status::TimeoutWithIncumbent)
    }
}

/// A `<=` row over variable indices, used internally.
#[derive(Debug, Clone)]
struct Row {
    terms: Vec<(usize, f64)>,
    rhs: f64,
    /// Rows produced from an equality come in pairs and are kept active together.
    eq_pair: bool,
}

struct Search<'a> {
    program: &'a BinaryProgram,
    /// Minimization costs (negated for maximization).
    cost: Vec<f64>,
    integral_costs: bool,
    rows: Vec<Row>,
    var_rows: Vec<Vec<usize>>,
    active: Vec<bool>,
    lazy: bool,
    best: Option<(Vec<bool>, f64)>,
    deadline: Instant,
    nodes: usize,
}

/// Fixings per variable: -1 free, 0 or 1 fixed.
type Fixing = Vec<i8>;

impl<'a> Search<'a> {
    fn new(program: &'a BinaryProgram, budget: Duration) -> Self {
        let sign = if program.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let cost: Vec<f64> = program.objective.iter().map(|c| sign * c).collect();
        let integral_costs = cost.iter().all(|c| c.fract() == 0.0);
        let mut rows = Vec::new();
        for c in &program.constraints {
            let terms: Vec<(usize, f64)> = c.terms.iter().map(|(v, a)| (v.0, *a)).collect();
            let neg: Vec<(usize, f64)> = terms.iter().map(|(v, a)| (*v, -a)).collect();
            match c.relation {
                Relation::Le => rows.push(Row { terms, rhs: c.rhs, eq_pair: false }),
                Relation::Ge => rows.push(Row { terms: neg, rhs: -c.rhs, eq_pair: false }),
                Relation::Eq => {
                    rows.push(Row { terms, rhs: c.rhs, eq_pair: true });
                    rows.push(Row { terms: neg, rhs: -c.rhs, eq_pair: true });
                }
            }
        }
        let mut var_rows = vec![Vec::new(); program.num_vars()];
        for (r, row) in rows.iter().enumerate() {
            for &(v, _) in &row.terms {
                var_rows[v].push(r);
            }
        }
        let lazy = rows.len() > LAZY_ROW_THRESHOLD;
        let active = rows.iter().map(|r| !lazy || r.eq_pair).collect();
        Search {
            program,
            cost,
            integral_costs,
            rows,
            var_rows,
            active,
            lazy,
            best: None,
            deadline: Instant::now() + budget,
            nodes: 0,
        }
    }

    /// Activity-bound propagation to a fixpoint. False on infeasibility.
    fn propagate(&self, fix: &mut Fixing) -> bool {
        let mut queue: Vec<usize> = (0..self.rows.len()).collect();
        let mut queued = vec![true; self.rows.len()];
        while let Some(r) = queue.pop() {
            queued[r] = false;
            let row = &self.rows[r];
            let mut min_act = 0.0;
            for &(v, a) in &row.terms {
                let lo = match fix[v] {
                    -1 => {
                        if a < 0.0 {
                            a
                        } else {
                            0.0
                        }
                    }
                    f => a * f as f64,
                };
                min_act += lo;
            }
            if min_act > row.rhs + CHECK_TOL {
                return false;
            }
            for &(v, a) in &row.terms {
                if fix[v] != -1 {
                    continue;
                }
                let forced = if a > 0.0 && min_act + a > row.rhs + CHECK_TOL {
                    Some(0)
                } else if a < 0.0 && min_act - a > row.rhs + CHECK_TOL {
                    Some(1)
                } else {
                    None
                };
                if let Some(val) = forced {
                    fix[v] = val;
                    // min_act is unchanged: the variable already sat at its minimizing value
                    for &r2 in &self.var_rows[v] {
                        if !queued[r2] {
                            queued[r2] = true;
                            queue.push(r2);
                        }
                    }
                }
            }
        }
        true
    }

    fn fixed_cost(&self, fix: &Fixing) -> f64 {
        fix.iter().zip(&self.cost).filter(|(f, _)| **f == 1).map(|(_, c)| c).sum()
    }

    /// Row `r` restricted to the free variables, or None if no free
    /// variable remains in it.
    fn free_row(&self, r: usize, fix: &Fixing, index: &[usize]) -> Option<LpRow> {
        let row = &self.rows[r];
        let mut rhs = row.rhs;
        let mut terms = Vec::new();
        for &(v, a) in &row.terms {
            match fix[v] {
                -1 => terms.push((index[v], a)),
                1 => rhs -= a,
                _ => {}
            }
        }
        let kind = if row.eq_pair { RowKind::Eq } else { RowKind::Le };
        (!terms.is_empty()).then_some(LpRow { terms, kind, rhs })
    }

    /// LP relaxation over the free variables. Returns (bound, values) with
    /// values for every variable (fixed ones as 0/1). Rows activated lazily
    /// are appended to the solved tableau and re-optimized by dual simplex.
    fn relax(&mut self, fix: &Fixing) -> Option<(f64, Vec<f64>)> {
        let free: Vec<usize> = (0..fix.len()).filter(|&v| fix[v] == -1).collect();
        let mut index = vec![usize::MAX; fix.len()];
        for (k, &v) in free.iter().enumerate() {
            index[v] = k;
        }
        let cost: Vec<f64> = free.iter().map(|&v| self.cost[v]).collect();
        let upper = vec![1.0; free.len()];
        let base = self.fixed_cost(fix);
        let stalled = |fix: &Fixing| {
            // fall back to the trivial box bound
            let bound = base + cost.iter().filter(|c| **c < 0.0).sum::<f64>();
            let values = fix.iter().map(|&f| if f == -1 { 0.5 } else { f as f64 }).collect();
            Some((bound, values))
        };
        let mut lp: Option<LpSolver> = None;
        let mut pending: Vec<usize> = Vec::new();
        loop {
            let outcome = match lp.as_mut() {
                Some(solver) => {
                    let rows: Vec<LpRow> = pending.iter().filter_map(|&r| self.free_row(r, fix, &index)).collect();
                    solver.add_rows(&rows)
                }
                None => {
                    let mut lp_rows = Vec::new();
                    let mut i = 0;
                    while i < self.rows.len() {
                        if self.active[i] {
                            lp_rows.extend(self.free_row(i, fix, &index));
                        }
                        i += if self.rows[i].eq_pair { 2 } else { 1 };
                    }
                    let (outcome, solver) = LpSolver::new(&cost, &upper, &lp_rows);
                    lp = solver;
                    outcome
                }
            };
            let x_free = match outcome {
                LpOutcome::Optimal { x, .. } => x,
                LpOutcome::Infeasible => return None,
                LpOutcome::Stalled => return stalled(fix),
            };
            let values: Vec<f64> =
                (0..fix.len()).map(|v| if fix[v] == -1 { x_free[index[v]] } else { fix[v] as f64 }).collect();
            if self.lazy {
                let mut violated: Vec<(f64, usize)> = self
                    .rows
                    .iter()
                    .enumerate()
                    .filter(|(r, _)| !self.active[*r])
                    .filter_map(|(r, row)| {
                        let act: f64 = row.terms.iter().map(|&(v, a)| a * values[v]).sum();
                        (act > row.rhs + CHECK_TOL).then_some((act - row.rhs, r))
                    })
                    .collect();
                if !violated.is_empty() {
                    violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
                    pending.clear();
                    for &(_, r) in violated.iter().take(ROWS_PER_ROUND) {
                        self.active[r] = true;
                        pending.push(r);
                    }
                    continue;
                }
            }
            let bound = base + cost.iter().zip(&x_free).map(|(c, x)| c * x).sum::<f64>();
            return Some((bound, values));
        }
    }

    fn prunes(&self, bound: f64) -> bool {
        let Some((_, best)) = &self.best else { return false };
        if self.integral_costs {
            (bound - 1e-6).ceil() >= *best - 1e-9
        } else {
            bound >= *best - 1e-9
        }
    }

    fn consider(&mut self, x: Vec<bool>) {
        if !self.program.is_feasible(&x) {
            return;
        }
        let value: f64 = x.iter().zip(&self.cost).filter(|(b, _)| **b).map(|(_, c)| c).sum();
        if self.best.as_ref().map_or(true, |(_, b)| value < *b - 1e-9) {
            self.best = Some((x, value));
        }
    }

    fn run(&mut self) -> bool {
        let n = self.program.num_vars();
        let mut stack: Vec<Fixing> = vec![vec![-1; n]];
        while let Some(mut fix) = stack.pop() {
            if Instant::now() >= self.deadline {
                return false;
            }
            self.nodes += 1;
            if !self.propagate(&mut fix) {
                continue;
            }
            let Some((bound, values)) = self.relax(&fix) else { continue };
            if self.prunes(bound) {
                continue;
            }
            let branch = (0..n)
                .filter(|&v| fix[v] == -1)
                .map(|v| (v, (values[v] - 0.5).abs()))
                .filter(|(_, d)| *d < 0.5 - INTEGRAL_TOL)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            match branch {
                None => {
                    let x: Vec<bool> = values.iter().map(|&v| v > 0.5).collect();
                    let feasible = self.program.is_feasible(&x);
                    self.consider(x);
                    if !feasible {
                        // numerically integral but infeasible: branch on the first free variable
                        if let Some(v) = (0..n).find(|&v| fix[v] == -1) {
                            for val in [0, 1] {
                                let mut child = fix.clone();
                                child[v] = val;
                                stack.push(child);
                            }
                        }
                    }
                }
                Some((v, _)) => {
                    let preferred = if values[v] >= 0.5 { 1 } else { 0 };
                    let mut other = fix.clone();
                    other[v] = 1 - preferred;
                    fix[v] = preferred;
                    stack.push(other);
                    stack.push(fix);
                }
            }
        }
        true
    }
}

/// Solves the program to proven optimality, or returns the best assignment
/// found when `budget` runs out.
pub fn solve(program: &BinaryProgram, budget: Duration) -> Solution {
    solve_with_start(program, budget, None)
}

/// Like [`solve`], seeded with a known assignment. An infeasible or
/// wrongly sized start is ignored.
pub fn solve_with_start(program: &BinaryProgram, budget: Duration, start: Option<&[bool]>) -> Solution {
    let mut search = Search::new(program, budget);
    if let Some(x) = start.filter(|x| x.len() == program.num_vars()) {
        search.consider(x.to_vec());
    }
    let finished = search.run();
    let nodes = search.nodes;
    match (search.best.take(), finished) {
        (Some((x, _)), finished) => Solution {
            objective_value: program.objective_value(&x),
            assignment: x,
            status: if finished { Status::Optimal } else { Status::TimeoutWithIncumbent },
            nodes,
        },
        (None, true) => Solution { assignment: Vec::new(), objective_value: f64::NAN, status: Status::Infeasible, nodes },
        (None, false) => {
            Solution { assignment: Vec::new(), objective_value: f64::NAN, status: Status::TimeoutWithoutIncumbent, nodes }
        }
    }
}
