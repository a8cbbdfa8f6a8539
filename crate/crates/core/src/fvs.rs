//! Minimum feedback vertex sets of dependency graphs.
//!
//! Exact methods solve each cyclic strongly connected component with a 0/1
//! program: an ordering model over the vertex-split graph
//! ([`fvs_ilp_constraint`]) or a cycle-covering model over all simple
//! cycles ([`fvs_ilp_enumerate`]). Three greedy heuristics delete one vertex
//! at a time until the graph is acyclic. Every result is checked to leave
//! the graph acyclic before it is returned.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use crate::bip::{self, BinaryProgram, Relation, Sense, Status, Var};
use crate::depgraph::{
    build_dep_graph, cyclic_sccs, is_acyclic, simple_cycles, topological_order, DepGraph, DEFAULT_CYCLE_CAP,
};
use crate::error::{Result, ToroError};
use crate::model::Instance;

/// Largest graph accepted by [`fvs_brute_force`].
pub const BRUTE_FORCE_MAX_VERTICES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FvsMethod {
    IlpConstraint,
    IlpEnumerate,
    Msch,
    Mch,
    Mdh,
    BruteForce,
}

impl FvsMethod {
    pub const ALL: [FvsMethod; 6] = [
        FvsMethod::IlpConstraint,
        FvsMethod::IlpEnumerate,
        FvsMethod::Msch,
        FvsMethod::Mch,
        FvsMethod::Mdh,
        FvsMethod::BruteForce,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FvsMethod::IlpConstraint => "ilp-c",
            FvsMethod::IlpEnumerate => "ilp-e",
            FvsMethod::Msch => "msch",
            FvsMethod::Mch => "mch",
            FvsMethod::Mdh => "mdh",
            FvsMethod::BruteForce => "brute",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, FvsMethod::IlpConstraint | FvsMethod::IlpEnumerate | FvsMethod::BruteForce)
    }
}

impl fmt::Display for FvsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FvsMethod {
    type Err = ToroError;

    fn from_str(s: &str) -> Result<Self> {
        FvsMethod::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| ToroError::InvalidParameter(format!("unknown FVS method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FvsResult {
    /// Sorted ascending.
    pub vertices: Vec<usize>,
    pub method: FvsMethod,
    pub proven_optimal: bool,
}

impl FvsResult {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// Limits for the exact solvers.
#[derive(Debug, Clone, Copy)]
pub struct FvsOptions {
    /// Budget per component solve.
    pub time_budget: Duration,
    pub cycle_cap: usize,
}

impl Default for FvsOptions {
    fn default() -> Self {
        FvsOptions { time_budget: Duration::from_secs(60), cycle_cap: DEFAULT_CYCLE_CAP }
    }
}

fn finish(g: &DepGraph, mut vertices: Vec<usize>, method: FvsMethod) -> Result<FvsResult> {
    vertices.sort_unstable();
    vertices.dedup();
    if !is_acyclic(&g.without(&vertices)) {
        return Err(ToroError::Solver(format!("{method} produced a set that leaves a cycle")));
    }
    Ok(FvsResult { vertices, proven_optimal: method.is_exact(), method })
}

/// Runs `solve` on every cyclic component and maps the answers back.
fn per_component(
    g: &DepGraph,
    mut solve: impl FnMut(&DepGraph) -> Result<Vec<usize>>,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for comp in cyclic_sccs(g) {
        let sub = g.induced(&comp);
        out.extend(solve(&sub)?.into_iter().map(|k| comp[k]));
    }
    Ok(out)
}

pub fn solve_fvs(g: &DepGraph, method: FvsMethod) -> Result<FvsResult> {
    solve_fvs_with(g, method, &FvsOptions::default())
}

pub fn solve_fvs_with(g: &DepGraph, method: FvsMethod, opts: &FvsOptions) -> Result<FvsResult> {
    match method {
        FvsMethod::IlpConstraint => fvs_ilp_constraint_with(g, opts),
        FvsMethod::IlpEnumerate => fvs_ilp_enumerate_with(g, opts),
        FvsMethod::Msch => fvs_msch_with(g, opts.cycle_cap),
        FvsMethod::Mch => fvs_mch(g),
        FvsMethod::Mdh => fvs_mdh(g),
        FvsMethod::BruteForce => fvs_brute_force(g),
    }
}

/// Acyclicity test on adjacency bitmasks restricted to `alive`.
fn acyclic_mask(succ: &[u32], alive: u32) -> bool {
    let mut remaining = alive;
    loop {
        // a vertex with no successor among the remaining ones can go last
        let mut sinks = 0u32;
        let mut bits = remaining;
        while bits != 0 {
            let v = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            if succ[v] & remaining == 0 {
                sinks |= 1 << v;
            }
        }
        if sinks == 0 {
            return remaining == 0;
        }
        remaining &= !sinks;
    }
}

fn adjacency_masks(g: &DepGraph) -> Vec<u32> {
    (0..g.n()).map(|v| g.successors(v).iter().fold(0u32, |m, &w| m | 1 << w)).collect()
}

/// Next k-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Subset enumeration by increasing size; the lexicographically smallest
/// minimum set wins.
pub fn fvs_brute_force(g: &DepGraph) -> Result<FvsResult> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(ToroError::TooLarge(format!(
            "brute-force FVS handles at most {BRUTE_FORCE_MAX_VERTICES} vertices, got {n}"
        )));
    }
    let succ = adjacency_masks(g);
    let all: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for k in 0..=n {
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let removed = comb.iter().fold(0u32, |m, &v| m | 1 << v);
            if acyclic_mask(&succ, all & !removed) {
                return finish(g, comb, FvsMethod::BruteForce);
            }
            if !next_combination(&mut comb, n) {
                break;
            }
        }
    }
    unreachable!("removing every vertex leaves an acyclic graph")
}

/// Every minimum feedback vertex set by exhaustive subset enumeration.
/// Test oracle; same size guard as [`fvs_brute_force`].
pub fn all_minimum_fvs_brute_force(g: &DepGraph) -> Result<Vec<Vec<usize>>> {
    let k = fvs_brute_force(g)?.len();
    let n = g.n();
    let succ = adjacency_masks(g);
    let all: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut out = Vec::new();
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        let removed = comb.iter().fold(0u32, |m, &v| m | 1 << v);
        if acyclic_mask(&succ, all & !removed) {
            out.push(comb.clone());
        }
        if !next_combination(&mut comb, n) {
            break;
        }
    }
    Ok(out)
}

fn run_program(p: &BinaryProgram, budget: Duration) -> Result<bip::Solution> {
    run_program_from(p, budget, None)
}

fn run_program_from(p: &BinaryProgram, budget: Duration, start: Option<&[bool]>) -> Result<bip::Solution> {
    let sol = bip::solve_with_start(p, budget, start);
    match sol.status {
        Status::Optimal => Ok(sol),
        Status::Infeasible => Err(ToroError::Solver("FVS program reported infeasible".into())),
        Status::TimeoutWithIncumbent | Status::TimeoutWithoutIncumbent => Err(ToroError::Timeout(None)),
    }
}

pub fn fvs_ilp_constraint(g: &DepGraph) -> Result<FvsResult> {
    fvs_ilp_constraint_with(g, &FvsOptions::default())
}

/// Ordering model on the vertex-split graph.
///
/// Vertex `v` becomes `v_in = 2v` and `v_out = 2v + 1` joined by an internal
/// arc; arc `(v, w)` becomes `v_out -> w_in`. Variable `y[a][b]` (a < b) is 1
/// when `b` precedes `a`. Minimizing the number of backward arcs of a linear
/// order gives a minimum feedback arc set of the split graph; each backward
/// arc is charged to the vertex whose internal arc it can be swapped for.
pub fn fvs_ilp_constraint_with(g: &DepGraph, opts: &FvsOptions) -> Result<FvsResult> {
    let mut incumbent_sets: Vec<usize> = Vec::new();
    let result = per_component(g, |sub| {
        let (program, y) = ordering_program(sub);
        let m = 2 * sub.n();
        let start = ordering_start(sub, &fvs_msch_with(sub, opts.cycle_cap).or_else(|_| fvs_mdh(sub))?.vertices, &y);
        let sol = run_program_from(&program, opts.time_budget, Some(&start)).map_err(|e| match e {
            ToroError::Timeout(_) => ToroError::Timeout(Some(incumbent_sets.clone())),
            other => other,
        })?;
        // position of each node = number of nodes preceding it
        let precedes = |a: usize, b: usize| -> bool {
            if a < b {
                !sol.value(y[a][b].unwrap())
            } else {
                sol.value(y[b][a].unwrap())
            }
        };
        let mut vertices = Vec::new();
        for (a, b) in split_arcs(sub) {
            debug_assert!(a < m && b < m);
            if precedes(b, a) {
                // backward arc: charge the tail vertex (b may also be v_out of the same vertex)
                vertices.push(a / 2);
            }
        }
        vertices.sort_unstable();
        vertices.dedup();
        incumbent_sets.extend(vertices.iter().copied());
        Ok(vertices)
    })?;
    finish(g, result, FvsMethod::IlpConstraint)
}

/// Ordering of the split graph with exactly `|fvs|` backward arcs: `v_out`
/// of every removed vertex first, the rest in topological order, then the
/// removed `v_in`.
fn ordering_start(g: &DepGraph, fvs: &[usize], y: &[Vec<Option<Var>>]) -> Vec<bool> {
    let m = 2 * g.n();
    let mut order: Vec<usize> = fvs.iter().map(|&v| 2 * v + 1).collect();
    let rest = g.without(fvs);
    if let Some(topo) = topological_order(&rest) {
        order.extend(topo.into_iter().filter(|v| !fvs.contains(v)).flat_map(|v| [2 * v, 2 * v + 1]));
    }
    order.extend(fvs.iter().map(|&v| 2 * v));
    let mut pos = vec![0; m];
    for (k, &a) in order.iter().enumerate() {
        pos[a] = k;
    }
    let mut x = vec![false; y.iter().flatten().flatten().count()];
    for a in 0..m {
        for b in a + 1..m {
            // y = 1 when b precedes a
            x[y[a][b].unwrap().0] = pos[b] < pos[a];
        }
    }
    x
}

fn split_arcs(g: &DepGraph) -> Vec<(usize, usize)> {
    let mut arcs: Vec<(usize, usize)> = (0..g.n()).map(|v| (2 * v, 2 * v + 1)).collect();
    arcs.extend(g.arcs().into_iter().map(|(v, w)| (2 * v + 1, 2 * w)));
    arcs
}

/// The linear-ordering program for [`fvs_ilp_constraint`]; exposed so its
/// optimum can be checked directly.
pub fn ordering_program(g: &DepGraph) -> (BinaryProgram, Vec<Vec<Option<Var>>>) {
    let m = 2 * g.n();
    let mut p = BinaryProgram::new(Sense::Minimize);
    let mut y = vec![vec![None; m]; m];
    for a in 0..m {
        for b in a + 1..m {
            y[a][b] = Some(p.add_var(format!("y_{a}_{b}")));
        }
    }
    let mut offset = 0.0;
    for (a, b) in split_arcs(g) {
        if a < b {
            p.add_objective_coef(y[a][b].unwrap(), 1.0);
        } else {
            // backward iff b precedes a iff y[b][a] = 0
            offset += 1.0;
            p.add_objective_coef(y[b][a].unwrap(), -1.0);
        }
    }
    p.set_objective_offset(offset);
    for a in 0..m {
        for b in a + 1..m {
            for c in b + 1..m {
                let (ab, bc, ac) = (y[a][b].unwrap(), y[b][c].unwrap(), y[a][c].unwrap());
                p.add_constraint(&[(ab, 1.0), (bc, 1.0), (ac, -1.0)], Relation::Le, 1.0).unwrap();
                p.add_constraint(&[(ab, -1.0), (bc, -1.0), (ac, 1.0)], Relation::Le, 0.0).unwrap();
            }
        }
    }
    (p, y)
}

pub fn fvs_ilp_enumerate(g: &DepGraph) -> Result<FvsResult> {
    fvs_ilp_enumerate_with(g, &FvsOptions::default())
}

/// Cycle-covering model: keep as many vertices as possible while every
/// simple cycle loses at least one.
pub fn fvs_ilp_enumerate_with(g: &DepGraph, opts: &FvsOptions) -> Result<FvsResult> {
    let result = per_component(g, |sub| {
        let (program, keep) = covering_program(sub, opts.cycle_cap)?;
        let sol = run_program(&program, opts.time_budget)?;
        Ok((0..sub.n()).filter(|&v| !sol.value(keep[v])).collect())
    })?;
    finish(g, result, FvsMethod::IlpEnumerate)
}

/// The cycle-covering program; `keep[v]` is 1 when `v` stays in the graph.
pub fn covering_program(g: &DepGraph, cycle_cap: usize) -> Result<(BinaryProgram, Vec<Var>)> {
    let cycles = simple_cycles(g, cycle_cap)?;
    if cycles.capped {
        return Err(ToroError::CycleCapExceeded(cycle_cap));
    }
    let mut p = BinaryProgram::new(Sense::Maximize);
    let keep: Vec<Var> = (0..g.n()).map(|v| p.add_var(format!("v_{v}"))).collect();
    for &v in &keep {
        p.set_objective_coef(v, 1.0);
    }
    for c in &cycles.cycles {
        let terms: Vec<(Var, f64)> = c.iter().map(|&v| (keep[v], 1.0)).collect();
        p.add_constraint(&terms, Relation::Le, c.len() as f64 - 1.0)?;
    }
    Ok((p, keep))
}

pub fn fvs_msch(g: &DepGraph) -> Result<FvsResult> {
    fvs_msch_with(g, DEFAULT_CYCLE_CAP)
}

/// Repeatedly deletes the vertex lying on the most simple cycles.
pub fn fvs_msch_with(g: &DepGraph, cycle_cap: usize) -> Result<FvsResult> {
    let mut removed = Vec::new();
    let mut current = g.clone();
    loop {
        let found = simple_cycles(&current, cycle_cap)?;
        if found.capped {
            return Err(ToroError::CycleCapExceeded(cycle_cap));
        }
        if found.cycles.is_empty() {
            break;
        }
        let mut count = vec![0usize; g.n()];
        for c in &found.cycles {
            for &v in c {
                count[v] += 1;
            }
        }
        let v = argmax_lowest(&count);
        removed.push(v);
        current = g.without(&removed);
    }
    finish(g, removed, FvsMethod::Msch)
}

/// Index of the largest value; lowest index on ties.
fn argmax_lowest(values: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn reaches(g: &DepGraph, from: usize, to: usize, seen: &mut [bool]) -> bool {
    seen.iter_mut().for_each(|s| *s = false);
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(v) = stack.pop() {
        if v == to {
            return true;
        }
        for &w in g.successors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Cycle count of a vertex: out-arcs `(v, w)` that close a cycle back to
/// `v`. Each cycle found marks the arc leaving `v`, so every out-arc counts
/// at most once. Deletes the highest-count vertex and recounts.
pub fn fvs_mch(g: &DepGraph) -> Result<FvsResult> {
    let mut removed = Vec::new();
    let mut current = g.clone();
    let mut seen = vec![false; g.n()];
    while !is_acyclic(&current) {
        let count: Vec<usize> = (0..g.n())
            .map(|v| current.successors(v).iter().filter(|&&w| reaches(&current, w, v, &mut seen)).count())
            .collect();
        removed.push(argmax_lowest(&count));
        current = g.without(&removed);
    }
    finish(g, removed, FvsMethod::Mch)
}

/// Deletes the cyclic vertex with the largest in-degree times out-degree.
pub fn fvs_mdh(g: &DepGraph) -> Result<FvsResult> {
    let mut removed = Vec::new();
    let mut current = g.clone();
    loop {
        let comps = cyclic_sccs(&current);
        if comps.is_empty() {
            break;
        }
        let mut score = vec![0usize; g.n()];
        let mut on_cycle = vec![false; g.n()];
        for v in comps.into_iter().flatten() {
            on_cycle[v] = true;
            score[v] = current.in_degree(v) * current.out_degree(v);
        }
        let v = (0..g.n())
            .filter(|&v| on_cycle[v])
            .fold(None::<usize>, |best, v| match best {
                Some(b) if score[b] >= score[v] => Some(b),
                _ => Some(v),
            })
            .unwrap();
        removed.push(v);
        current = g.without(&removed);
    }
    finish(g, removed, FvsMethod::Mdh)
}

/// All minimum feedback vertex sets found by repeated exact solves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimalFvsSets {
    /// Sorted lexicographically; all of one size.
    pub sets: Vec<FvsResult>,
    /// The cap stopped the enumeration early.
    pub capped: bool,
}

/// Enumerates minimum feedback vertex sets up to `cap`.
///
/// Each cyclic component is solved with the cycle-covering program; after
/// each optimum, a constraint forbidding exactly that vertex set is added and
/// the program is solved again, until the optimum gets worse. The full sets
/// are the products of the per-component sets.
pub fn enumerate_optimal_fvs(g: &DepGraph, cap: usize) -> Result<OptimalFvsSets> {
    enumerate_optimal_fvs_with(g, cap, &FvsOptions::default())
}

pub fn enumerate_optimal_fvs_with(g: &DepGraph, cap: usize, opts: &FvsOptions) -> Result<OptimalFvsSets> {
    if cap == 0 {
        return Err(ToroError::InvalidParameter("enumeration cap must be positive".into()));
    }
    let mut capped = false;
    let mut combined: Vec<Vec<usize>> = vec![Vec::new()];
    for comp in cyclic_sccs(g) {
        let sub = g.induced(&comp);
        let (mut program, keep) = covering_program(&sub, opts.cycle_cap)?;
        let mut local: Vec<Vec<usize>> = Vec::new();
        let mut optimum = None;
        loop {
            if local.len() == cap {
                capped = true;
                break;
            }
            let sol = bip::solve(&program, opts.time_budget);
            match sol.status {
                Status::Optimal => {}
                Status::Infeasible => break,
                _ => return Err(ToroError::Timeout(None)),
            }
            let kept = sol.objective_value.round() as usize;
            match optimum {
                None => optimum = Some(kept),
                Some(k) if kept < k => break,
                _ => {}
            }
            let set: Vec<usize> = (0..sub.n()).filter(|&v| !sol.value(keep[v])).collect();
            // forbid exactly this set: sum_{v in S} keep_v + sum_{v not in S} (1 - keep_v) >= 1
            let terms: Vec<(Var, f64)> = (0..sub.n())
                .map(|v| (keep[v], if set.contains(&v) { 1.0 } else { -1.0 }))
                .collect();
            let outside = (sub.n() - set.len()) as f64;
            program.add_constraint(&terms, Relation::Ge, 1.0 - outside)?;
            local.push(set.into_iter().map(|k| comp[k]).collect());
        }
        let mut next = Vec::new();
        'outer: for base in &combined {
            for add in &local {
                if next.len() == cap {
                    capped = true;
                    break 'outer;
                }
                let mut s = base.clone();
                s.extend_from_slice(add);
                next.push(s);
            }
        }
        combined = next;
    }
    let mut sets = combined
        .into_iter()
        .map(|v| finish(g, v, FvsMethod::IlpEnumerate))
        .collect::<Result<Vec<_>>>()?;
    sets.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    Ok(OptimalFvsSets { sets, capped })
}

/// Minimum feedback vertex set, falling back to the ordering model when
/// there are too many cycles to list.
pub fn exact_fvs(g: &DepGraph, opts: &FvsOptions) -> Result<FvsResult> {
    match fvs_ilp_enumerate_with(g, opts) {
        Err(ToroError::CycleCapExceeded(_)) => fvs_ilp_constraint_with(g, opts),
        other => other,
    }
}

/// Fewest grasps any plan for a labeled instance needs: one per object that
/// is not already at its goal, plus one per buffered object.
pub fn min_grasps(inst: &Instance) -> Result<usize> {
    let g = build_dep_graph(inst)?;
    let fvs = exact_fvs(&g, &FvsOptions::default())?;
    Ok(inst.n() - inst.stationary_count() + fvs.len())
}
