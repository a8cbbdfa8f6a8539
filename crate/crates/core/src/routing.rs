//! Tours for non-overlapping instances.
//!
//! When no goal overlaps any start, every object moves straight to its goal
//! and only the visiting order matters. The order is a Hamiltonian cycle in
//! a tour graph over rest, start and goal vertices: [`build_g_no`] for
//! labeled objects and [`build_g_uno`] for unlabeled ones. Both reduce to a
//! path problem over "cities", solved exactly by subset dynamic programming
//! or heuristically by nearest neighbor plus 2-opt and or-opt.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ToroError};
use crate::geometry::{dist, Point2};
use crate::model::Instance;

/// Largest labeled instance [`solve_tour_exact`] accepts by default.
pub const NO_EXACT_MAX: usize = 16;
/// Largest unlabeled instance [`solve_tour_exact`] accepts by default.
pub const UNO_EXACT_MAX: usize = 10;

const HEURISTIC_RESTARTS: usize = 8;
const IMPROVE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TourVertex {
    RestStart,
    RestGoal,
    /// `u_0`, joining the two rest poses.
    RestLink,
    Start(usize),
    Goal(usize),
    /// `u_i`, joining start and goal of object `i` (labeled only).
    Link(usize),
}

impl fmt::Display for TourVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TourVertex::RestStart => write!(f, "s_M"),
            TourVertex::RestGoal => write!(f, "g_M"),
            TourVertex::RestLink => write!(f, "u_0"),
            TourVertex::Start(i) => write!(f, "s_{i}"),
            TourVertex::Goal(i) => write!(f, "g_{i}"),
            TourVertex::Link(i) => write!(f, "u_{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TourKind {
    Labeled,
    Unlabeled,
}

/// Undirected weighted graph whose Hamiltonian cycles are object visiting
/// orders. Missing edges stand for forbidden (infinite) transitions.
#[derive(Debug, Clone)]
pub struct TourGraph {
    pub kind: TourKind,
    starts: Vec<Point2>,
    goals: Vec<Point2>,
    rest_start: Point2,
    rest_goal: Point2,
    edges: BTreeMap<(TourVertex, TourVertex), f64>,
}

fn key(a: TourVertex, b: TourVertex) -> (TourVertex, TourVertex) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TourGraph {
    /// Number of objects.
    pub fn n(&self) -> usize {
        self.starts.len()
    }

    pub fn vertices(&self) -> Vec<TourVertex> {
        let mut v = vec![TourVertex::RestStart, TourVertex::RestGoal, TourVertex::RestLink];
        for i in 0..self.n() {
            v.push(TourVertex::Start(i));
            v.push(TourVertex::Goal(i));
            if self.kind == TourKind::Labeled {
                v.push(TourVertex::Link(i));
            }
        }
        v.sort();
        v
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (TourVertex, TourVertex, f64)> + '_ {
        self.edges.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// Edge weight, `None` when the edge is absent.
    pub fn weight(&self, a: TourVertex, b: TourVertex) -> Option<f64> {
        self.edges.get(&key(a, b)).copied()
    }

    /// Sum of `dist(s_i, g_i)`: travel while carrying, which tour weights in
    /// the labeled graph leave out because `s_i u_i g_i` costs nothing.
    pub fn carry_distance(&self) -> f64 {
        self.starts.iter().zip(&self.goals).map(|(s, g)| dist(*s, *g)).sum()
    }

    fn add(&mut self, a: TourVertex, b: TourVertex, w: f64) {
        self.edges.insert(key(a, b), w);
    }
}

fn require_non_overlapping(inst: &Instance) -> Result<()> {
    if inst.is_non_overlapping() {
        Ok(())
    } else {
        Err(ToroError::OverlappingInstance)
    }
}

fn bare_graph(inst: &Instance, kind: TourKind) -> TourGraph {
    let mut g = TourGraph {
        kind,
        starts: inst.start.poses.clone(),
        goals: inst.goal.poses.clone(),
        rest_start: inst.rest_start,
        rest_goal: inst.rest_goal,
        edges: BTreeMap::new(),
    };
    g.add(TourVertex::RestStart, TourVertex::RestLink, 0.0);
    g.add(TourVertex::RestGoal, TourVertex::RestLink, 0.0);
    for i in 0..inst.n() {
        g.add(TourVertex::RestStart, TourVertex::Start(i), dist(inst.rest_start, inst.start_pose(i)));
        g.add(TourVertex::RestGoal, TourVertex::Goal(i), dist(inst.rest_goal, inst.goal_pose(i)));
    }
    g
}

/// Tour graph for labeled objects.
pub fn build_g_no(inst: &Instance) -> Result<TourGraph> {
    if !inst.labeled {
        return Err(ToroError::InvalidInstance("labeled tour graph needs a labeled instance".into()));
    }
    require_non_overlapping(inst)?;
    let mut g = bare_graph(inst, TourKind::Labeled);
    let n = inst.n();
    for i in 0..n {
        g.add(TourVertex::Start(i), TourVertex::Link(i), 0.0);
        g.add(TourVertex::Link(i), TourVertex::Goal(i), 0.0);
        for j in (0..n).filter(|&j| j != i) {
            g.add(TourVertex::Start(i), TourVertex::Goal(j), dist(inst.start_pose(i), inst.goal_pose(j)));
        }
    }
    Ok(g)
}

/// Tour graph for unlabeled objects: any start may feed any goal.
pub fn build_g_uno(inst: &Instance) -> Result<TourGraph> {
    require_non_overlapping(inst)?;
    let mut g = bare_graph(inst, TourKind::Unlabeled);
    let n = inst.n();
    for i in 0..n {
        for j in 0..n {
            g.add(TourVertex::Start(i), TourVertex::Goal(j), dist(inst.start_pose(i), inst.goal_pose(j)));
        }
    }
    Ok(g)
}

/// Hamiltonian cycle written from `s_M`, ending with `g_M, u_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub kind: TourKind,
    pub vertices: Vec<TourVertex>,
    pub weight: f64,
}

impl Tour {
    /// Same cycle traversed the other way, still written from `s_M`.
    pub fn reversed(&self) -> Tour {
        let mut vertices = vec![self.vertices[0]];
        vertices.extend(self.vertices[1..].iter().rev());
        Tour { kind: self.kind, vertices, weight: self.weight }
    }
}

/// Checks that `t` is a Hamiltonian cycle of `g` and returns its weight.
pub fn tour_weight(g: &TourGraph, t: &Tour) -> Result<f64> {
    let expected: BTreeSet<TourVertex> = g.vertices().into_iter().collect();
    let seen: BTreeSet<TourVertex> = t.vertices.iter().copied().collect();
    if seen.len() != t.vertices.len() || seen != expected {
        return Err(ToroError::Solver("tour does not visit every vertex exactly once".into()));
    }
    let m = t.vertices.len();
    let mut total = 0.0;
    for k in 0..m {
        let (a, b) = (t.vertices[k], t.vertices[(k + 1) % m]);
        total += g
            .weight(a, b)
            .ok_or_else(|| ToroError::Solver(format!("tour uses missing edge {a}-{b}")))?;
    }
    Ok(total)
}

/// Generic open path problem: visit every item once, starting after and
/// ending before a rest node. Index `m` in `cost` is the rest node.
struct PathProblem {
    m: usize,
    cost: Vec<Vec<f64>>,
}

impl PathProblem {
    fn c(&self, a: usize, b: usize) -> f64 {
        self.cost[a][b]
    }

    /// Route cost with the rest node at both ends implied.
    fn route_cost(&self, route: &[usize]) -> f64 {
        let rest = self.m;
        let mut total = 0.0;
        let mut prev = rest;
        for &x in route {
            total += self.c(prev, x);
            prev = x;
        }
        total + self.c(prev, rest)
    }
}

/// Labeled: cities are objects; leaving `i` means standing at `g_i`.
fn labeled_problem(g: &TourGraph) -> PathProblem {
    let n = g.n();
    let mut cost = vec![vec![f64::INFINITY; n + 1]; n + 1];
    for i in 0..n {
        cost[n][i] = dist(g.rest_start, g.starts[i]);
        cost[i][n] = dist(g.goals[i], g.rest_goal);
        for j in (0..n).filter(|&j| j != i) {
            cost[i][j] = dist(g.goals[i], g.starts[j]);
        }
    }
    PathProblem { m: n, cost }
}

/// Unlabeled: cities `0..n` are starts, `n..2n` are goals.
fn unlabeled_problem(g: &TourGraph) -> PathProblem {
    let n = g.n();
    let m = 2 * n;
    let mut cost = vec![vec![f64::INFINITY; m + 1]; m + 1];
    for i in 0..n {
        cost[m][i] = dist(g.rest_start, g.starts[i]);
        cost[n + i][m] = dist(g.goals[i], g.rest_goal);
        for j in 0..n {
            let d = dist(g.starts[i], g.goals[j]);
            cost[i][n + j] = d;
            cost[n + j][i] = d;
        }
    }
    PathProblem { m, cost }
}

fn tour_from_route(g: &TourGraph, route: &[usize]) -> Result<Tour> {
    let n = g.n();
    let mut vertices = vec![TourVertex::RestStart];
    match g.kind {
        TourKind::Labeled => {
            for &i in route {
                vertices.extend([TourVertex::Start(i), TourVertex::Link(i), TourVertex::Goal(i)]);
            }
        }
        TourKind::Unlabeled => {
            for &x in route {
                vertices.push(if x < n { TourVertex::Start(x) } else { TourVertex::Goal(x - n) });
            }
        }
    }
    vertices.extend([TourVertex::RestGoal, TourVertex::RestLink]);
    let mut tour = Tour { kind: g.kind, vertices, weight: 0.0 };
    tour.weight = tour_weight(g, &tour)?;
    Ok(tour)
}

/// Exact tour with the default size guards.
pub fn solve_tour_exact(g: &TourGraph) -> Result<Tour> {
    let limit = match g.kind {
        TourKind::Labeled => NO_EXACT_MAX,
        TourKind::Unlabeled => UNO_EXACT_MAX,
    };
    solve_tour_exact_with(g, limit)
}

/// Exact tour for instances with at most `max_objects` objects.
pub fn solve_tour_exact_with(g: &TourGraph, max_objects: usize) -> Result<Tour> {
    if g.n() > max_objects {
        return Err(ToroError::TooLarge(format!(
            "exact tour limited to {max_objects} objects, got {}; use the heuristic",
            g.n()
        )));
    }
    let route = match g.kind {
        TourKind::Labeled => held_karp(&labeled_problem(g)),
        TourKind::Unlabeled => alternating_dp(g),
    };
    tour_from_route(g, &route)
}

/// Held-Karp over all items of the path problem.
fn held_karp(p: &PathProblem) -> Vec<usize> {
    let m = p.m;
    if m == 0 {
        return Vec::new();
    }
    let full = (1usize << m) - 1;
    let mut best = vec![f64::INFINITY; (1 << m) * m];
    let mut parent = vec![usize::MAX; (1 << m) * m];
    for j in 0..m {
        best[(1 << j) * m + j] = p.c(m, j);
    }
    for mask in 1..=full {
        for last in 0..m {
            let here = best[mask * m + last];
            if mask & (1 << last) == 0 || !here.is_finite() {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let cand = here + p.c(last, next);
                let slot = (mask | 1 << next) * m + next;
                if cand < best[slot] {
                    best[slot] = cand;
                    parent[slot] = last;
                }
            }
        }
    }
    let mut last = (0..m)
        .min_by(|&a, &b| {
            (best[full * m + a] + p.c(a, m)).total_cmp(&(best[full * m + b] + p.c(b, m)))
        })
        .unwrap();
    let mut mask = full;
    let mut route = Vec::with_capacity(m);
    loop {
        route.push(last);
        let prev = parent[mask * m + last];
        mask &= !(1 << last);
        if prev == usize::MAX {
            break;
        }
        last = prev;
    }
    route.reverse();
    route
}

/// Layered subset DP for unlabeled tours, split into half steps: a pick
/// layer (k starts used, k - 1 goals filled, standing at a start) and a
/// place layer (k and k, standing at a goal). Subsets are stored densely by
/// their rank among subsets of the same size.
fn alternating_dp(g: &TourGraph) -> Vec<usize> {
    const REST: u8 = u8::MAX;
    let n = g.n();
    if n == 0 {
        return Vec::new();
    }
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    let mut rank = vec![0usize; 1 << n];
    for mask in 0..1usize << n {
        let k = mask.count_ones() as usize;
        rank[mask] = by_size[k].len();
        by_size[k].push(mask);
    }
    let carry: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| dist(g.starts[i], g.goals[j])).collect()).collect();
    let hop: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| dist(g.goals[j], g.starts[i])).collect()).collect();
    let idx = |s: usize, g_: usize, at: usize, gsize: usize| (rank[s] * by_size[gsize].len() + rank[g_]) * n + at;

    // picks[k] / places[k]: (cost, parent position) for layer k = 1..=n
    let mut picks: Vec<Vec<(f64, u8)>> = vec![Vec::new(); n + 1];
    let mut places: Vec<Vec<(f64, u8)>> = vec![Vec::new(); n + 1];
    for k in 1..=n {
        let mut pick = vec![(f64::INFINITY, REST); by_size[k].len() * by_size[k - 1].len() * n];
        if k == 1 {
            for i in 0..n {
                pick[idx(1 << i, 0, i, 0)] = (dist(g.rest_start, g.starts[i]), REST);
            }
        } else {
            let prev = &places[k - 1];
            for &s in &by_size[k - 1] {
                for &gm in &by_size[k - 1] {
                    for j in (0..n).filter(|&j| gm >> j & 1 == 1) {
                        let here = prev[idx(s, gm, j, k - 1)].0;
                        if !here.is_finite() {
                            continue;
                        }
                        for i in (0..n).filter(|&i| s >> i & 1 == 0) {
                            let slot = &mut pick[idx(s | 1 << i, gm, i, k - 1)];
                            let c = here + hop[j][i];
                            if c < slot.0 {
                                *slot = (c, j as u8);
                            }
                        }
                    }
                }
            }
        }
        let mut place = vec![(f64::INFINITY, REST); by_size[k].len() * by_size[k].len() * n];
        for &s in &by_size[k] {
            for &gm in &by_size[k - 1] {
                for i in (0..n).filter(|&i| s >> i & 1 == 1) {
                    let here = pick[idx(s, gm, i, k - 1)].0;
                    if !here.is_finite() {
                        continue;
                    }
                    for j in (0..n).filter(|&j| gm >> j & 1 == 0) {
                        let slot = &mut place[idx(s, gm | 1 << j, j, k)];
                        let c = here + carry[i][j];
                        if c < slot.0 {
                            *slot = (c, i as u8);
                        }
                    }
                }
            }
        }
        picks[k] = pick;
        places[k] = place;
    }
    let full = (1usize << n) - 1;
    let mut at = (0..n)
        .min_by(|&a, &b| {
            let ca = places[n][idx(full, full, a, n)].0 + dist(g.goals[a], g.rest_goal);
            let cb = places[n][idx(full, full, b, n)].0 + dist(g.goals[b], g.rest_goal);
            ca.total_cmp(&cb)
        })
        .unwrap();
    let (mut s, mut gm) = (full, full);
    let mut route = Vec::with_capacity(2 * n);
    for k in (1..=n).rev() {
        route.push(n + at);
        let i = places[k][idx(s, gm, at, k)].1 as usize;
        gm &= !(1 << at);
        route.push(i);
        let j = picks[k][idx(s, gm, i, k - 1)].1;
        s &= !(1 << i);
        at = j as usize;
    }
    route.reverse();
    route
}

/// Heuristic tour: nearest-neighbor starts refined by 2-opt and or-opt.
/// Deterministic for a given seed.
pub fn solve_tour_heuristic(g: &TourGraph, seed: u64) -> Result<Tour> {
    let p = match g.kind {
        TourKind::Labeled => labeled_problem(g),
        TourKind::Unlabeled => unlabeled_problem(g),
    };
    if p.m == 0 {
        return tour_from_route(g, &[]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut firsts: Vec<usize> = (0..p.m).filter(|&x| p.c(p.m, x).is_finite()).collect();
    firsts.shuffle(&mut rng);
    let mut candidates = vec![None];
    candidates.extend(firsts.into_iter().take(HEURISTIC_RESTARTS - 1).map(Some));
    let mut best: Option<(f64, Vec<usize>)> = None;
    for first in candidates {
        let mut route = nearest_neighbor(&p, first);
        local_search(&p, &mut route);
        let c = p.route_cost(&route);
        if best.as_ref().map_or(true, |(b, _)| c < *b - IMPROVE_EPS) {
            best = Some((c, route));
        }
    }
    let (_, route) = best.unwrap();
    tour_from_route(g, &route)
}

/// Exact when within the default guards, heuristic otherwise.
pub fn solve_tour(g: &TourGraph, seed: u64) -> Result<Tour> {
    match solve_tour_exact(g) {
        Err(ToroError::TooLarge(_)) => solve_tour_heuristic(g, seed),
        other => other,
    }
}

fn nearest_neighbor(p: &PathProblem, first: Option<usize>) -> Vec<usize> {
    let m = p.m;
    let mut used = vec![false; m];
    let mut route = Vec::with_capacity(m);
    let mut at = m;
    if let Some(f) = first {
        used[f] = true;
        route.push(f);
        at = f;
    }
    while route.len() < m {
        let next = (0..m)
            .filter(|&x| !used[x] && p.c(at, x).is_finite())
            .min_by(|&a, &b| p.c(at, a).total_cmp(&p.c(at, b)))
            .expect("alternating structure always leaves a feasible next city");
        used[next] = true;
        route.push(next);
        at = next;
    }
    route
}

fn local_search(p: &PathProblem, route: &mut Vec<usize>) {
    loop {
        let a = two_opt(p, route);
        let b = or_opt(p, route);
        if !a && !b {
            break;
        }
    }
}

/// One pass of segment reversals; true if anything improved.
fn two_opt(p: &PathProblem, route: &mut [usize]) -> bool {
    let rest = p.m;
    let len = route.len();
    let mut improved = false;
    let mut fwd = vec![0.0; len];
    let mut bwd = vec![0.0; len];
    let recompute = |route: &[usize], fwd: &mut [f64], bwd: &mut [f64]| {
        for k in 1..route.len() {
            fwd[k] = fwd[k - 1] + p.c(route[k - 1], route[k]);
            bwd[k] = bwd[k - 1] + p.c(route[k], route[k - 1]);
        }
    };
    recompute(route, &mut fwd, &mut bwd);
    for i in 0..len {
        for j in i + 1..len {
            let before = if i == 0 { rest } else { route[i - 1] };
            let after = if j + 1 == len { rest } else { route[j + 1] };
            let new_in = p.c(before, route[j]) + p.c(route[i], after);
            if !new_in.is_finite() {
                continue;
            }
            let old = p.c(before, route[i]) + p.c(route[j], after) + (fwd[j] - fwd[i]);
            let new = new_in + (bwd[j] - bwd[i]);
            if new < old - IMPROVE_EPS {
                route[i..=j].reverse();
                recompute(route, &mut fwd, &mut bwd);
                improved = true;
            }
        }
    }
    improved
}

/// One pass of moving segments of up to three cities elsewhere.
fn or_opt(p: &PathProblem, route: &mut Vec<usize>) -> bool {
    let rest = p.m;
    let mut improved = false;
    for seg in 1..=3usize {
        let mut i = 0;
        while i + seg <= route.len() {
            let len = route.len();
            let at = |k: isize, r: &Vec<usize>| if k < 0 || k as usize >= len { rest } else { r[k as usize] };
            let (s0, s1) = (route[i], route[i + seg - 1]);
            let (a, b) = (at(i as isize - 1, route), at((i + seg) as isize, route));
            let removal_gain = p.c(a, s0) + p.c(s1, b) - p.c(a, b);
            let mut best: Option<(f64, usize)> = None;
            // insert between positions k-1 and k of the route without the segment
            let rest_route: Vec<usize> = route[..i].iter().chain(&route[i + seg..]).copied().collect();
            for k in 0..=rest_route.len() {
                if k == i {
                    continue;
                }
                let x = if k == 0 { rest } else { rest_route[k - 1] };
                let y = if k == rest_route.len() { rest } else { rest_route[k] };
                let added = p.c(x, s0) + p.c(s1, y) - p.c(x, y);
                let delta = added - removal_gain;
                if delta.is_finite() && delta < -IMPROVE_EPS && best.map_or(true, |(d, _)| delta < d) {
                    best = Some((delta, k));
                }
            }
            if let Some((_, k)) = best {
                let segment: Vec<usize> = route[i..i + seg].to_vec();
                let mut next = rest_route;
                next.splice(k..k, segment);
                *route = next;
                improved = true;
            }
            i += 1;
        }
    }
    improved
}

/// Pick and place pairs of a tour, in execution order.
pub fn tour_to_order(t: &Tour) -> Result<Vec<(TourVertex, TourVertex)>> {
    let bad = |msg: &str| ToroError::Solver(format!("malformed tour: {msg}"));
    let m = t.vertices.len();
    let at = t
        .vertices
        .iter()
        .position(|&v| v == TourVertex::RestStart)
        .ok_or_else(|| bad("no s_M"))?;
    let mut seq: Vec<TourVertex> = (0..m).map(|k| t.vertices[(at + k) % m]).collect();
    if seq.get(1) == Some(&TourVertex::RestLink) {
        seq[1..].reverse();
    }
    if seq.len() < 3 || seq[m - 2] != TourVertex::RestGoal || seq[m - 1] != TourVertex::RestLink {
        return Err(bad("rest vertices out of place"));
    }
    let body = &seq[1..m - 2];
    let mut pairs = Vec::new();
    match t.kind {
        TourKind::Labeled => {
            if body.len() % 3 != 0 {
                return Err(bad("object segments incomplete"));
            }
            for c in body.chunks(3) {
                match (c[0], c[1], c[2]) {
                    (TourVertex::Start(i), TourVertex::Link(k), TourVertex::Goal(j)) if i == k && k == j => {
                        pairs.push((c[0], c[2]))
                    }
                    _ => return Err(bad("expected s_i u_i g_i")),
                }
            }
        }
        TourKind::Unlabeled => {
            if body.len() % 2 != 0 {
                return Err(bad("unpaired vertex"));
            }
            for c in body.chunks(2) {
                match (c[0], c[1]) {
                    (TourVertex::Start(_), TourVertex::Goal(_)) => pairs.push((c[0], c[1])),
                    _ => return Err(bad("expected alternating starts and goals")),
                }
            }
        }
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::model::CostModel;
    use proptest::prelude::*;
    use rand::Rng;

    /// Starts on the bottom band, goals on the top band: never overlapping.
    fn random_instance(n: usize, labeled: bool, rng: &mut ChaCha8Rng) -> Instance {
        let r = 0.05;
        let mut place = |lo: f64, hi: f64| {
            let mut pts: Vec<Point2> = Vec::new();
            while pts.len() < n {
                let p = Point2::new(rng.gen_range(0.1..9.9), rng.gen_range(lo..hi));
                if pts.iter().all(|q| dist(*q, p) > 2.0 * r + 1e-6) {
                    pts.push(p);
                }
            }
            pts
        };
        let starts = place(0.1, 4.9);
        let goals = place(5.1, 9.9);
        Instance::new(
            starts,
            goals,
            r,
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 10.0),
            labeled,
            CostModel::default(),
            Rect::new(0.0, 0.0, 10.0, 10.0),
        )
        .unwrap()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for k in 0..=p.len() {
                let mut q = p.clone();
                q.insert(k, n - 1);
                out.push(q);
            }
        }
        out
    }

    /// Labeled oracle: every object order, G_NO weight only.
    fn brute_labeled(inst: &Instance) -> f64 {
        permutations(inst.n())
            .into_iter()
            .map(|order| {
                let mut at = inst.rest_start;
                let mut total = 0.0;
                for &i in &order {
                    total += dist(at, inst.start_pose(i));
                    at = inst.goal_pose(i);
                }
                total + dist(at, inst.rest_goal)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Unlabeled oracle: depth-first search over pick/place sequences with
    /// partial-cost pruning.
    fn brute_unlabeled(inst: &Instance) -> f64 {
        fn go(inst: &Instance, at: Point2, used_s: u32, used_g: u32, cost: f64, best: &mut f64) {
            let n = inst.n();
            if cost >= *best {
                return;
            }
            if used_s.count_ones() as usize == n {
                *best = best.min(cost + dist(at, inst.rest_goal));
                return;
            }
            for i in (0..n).filter(|&i| used_s & (1 << i) == 0) {
                for j in (0..n).filter(|&j| used_g & (1 << j) == 0) {
                    let s = inst.start_pose(i);
                    let g = inst.goal_pose(j);
                    go(inst, g, used_s | 1 << i, used_g | 1 << j, cost + dist(at, s) + dist(s, g), best);
                }
            }
        }
        let mut best = f64::INFINITY;
        go(inst, inst.rest_start, 0, 0, 0.0, &mut best);
        best
    }

    fn instance_from(starts: Vec<Point2>, goals: Vec<Point2>, rs: Point2, rg: Point2, labeled: bool) -> Instance {
        Instance::new(starts, goals, 0.1, rs, rg, labeled, CostModel::default(), Rect::new(-5.0, -5.0, 20.0, 20.0))
            .unwrap()
    }

    #[test]
    fn labeled_graph_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = random_instance(2, true, &mut rng);
        let g = build_g_no(&inst).unwrap();
        assert_eq!(g.vertices().len(), 9);
        assert_eq!(g.edge_count(), 12);
        for (a, b, w) in g.edges() {
            let touches_link = [a, b]
                .iter()
                .any(|v| matches!(v, TourVertex::Link(_) | TourVertex::RestLink));
            assert_eq!(w == 0.0, touches_link, "{a}-{b}");
        }
        assert_eq!(
            g.weight(TourVertex::Start(0), TourVertex::Goal(1)),
            Some(dist(inst.start_pose(0), inst.goal_pose(1)))
        );
        assert_eq!(g.weight(TourVertex::Start(0), TourVertex::Goal(0)), None);
        assert_eq!(g.weight(TourVertex::Start(0), TourVertex::Start(1)), None);
    }

    #[test]
    fn unlabeled_graph_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst = random_instance(2, false, &mut rng);
        let g = build_g_uno(&inst).unwrap();
        assert_eq!(g.vertices().len(), 7);
        // 2 rest links, 2 + 2 rest edges, 4 start-goal edges
        assert_eq!(g.edge_count(), 10);
        assert!(g.weight(TourVertex::Start(1), TourVertex::Goal(1)).is_some());
        assert!(g.vertices().iter().all(|v| !matches!(v, TourVertex::Link(_))));
    }

    #[test]
    fn overlapping_instance_rejected() {
        let inst = crate::model::fixtures::swap_instance();
        assert_eq!(build_g_no(&inst).unwrap_err(), ToroError::OverlappingInstance);
        assert_eq!(build_g_uno(&inst).unwrap_err(), ToroError::OverlappingInstance);
    }

    #[test]
    fn single_object_forced_tour() {
        let inst = crate::model::fixtures::single_object();
        let g = build_g_no(&inst).unwrap();
        for t in [solve_tour_exact(&g).unwrap(), solve_tour_heuristic(&g, 3).unwrap()] {
            use TourVertex::*;
            assert_eq!(t.vertices, vec![RestStart, Start(0), Link(0), Goal(0), RestGoal, RestLink]);
            assert_eq!(tour_to_order(&t).unwrap(), vec![(Start(0), Goal(0))]);
        }
    }

    #[test]
    fn exact_matches_order_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=8 {
            let inst = random_instance(n, true, &mut rng);
            let t = solve_tour_exact(&build_g_no(&inst).unwrap()).unwrap();
            assert!((t.weight - brute_labeled(&inst)).abs() < 1e-9, "n={n}");
        }
        for n in 1..=6 {
            let inst = random_instance(n, false, &mut rng);
            let t = solve_tour_exact(&build_g_uno(&inst).unwrap()).unwrap();
            assert!((t.weight - brute_unlabeled(&inst)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn exact_beats_sweep_on_collinear_row() {
        let n = 6;
        let starts: Vec<Point2> = (0..n).map(|i| Point2::new(i as f64, 0.0)).collect();
        let goals: Vec<Point2> = (0..n).map(|i| Point2::new(i as f64, 1.0)).collect();
        let rest = Point2::new(0.0, -1.0);
        let inst = instance_from(starts, goals, rest, rest, true);
        let g = build_g_no(&inst).unwrap();
        let sweep = tour_from_route(&g, &(0..n).collect::<Vec<_>>()).unwrap();
        assert!(solve_tour_exact(&g).unwrap().weight <= sweep.weight + 1e-12);
    }

    #[test]
    fn reflection_keeps_unlabeled_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = random_instance(5, false, &mut rng);
        let flip = |p: &Point2| Point2::new(10.0 - p.x, p.y);
        let mirrored = Instance::new(
            inst.start.poses.iter().map(flip).collect(),
            inst.goal.poses.iter().map(flip).collect(),
            inst.radius(),
            flip(&inst.rest_start),
            flip(&inst.rest_goal),
            false,
            CostModel::default(),
            inst.workspace,
        )
        .unwrap();
        let a = solve_tour_exact(&build_g_uno(&inst).unwrap()).unwrap().weight;
        let b = solve_tour_exact(&build_g_uno(&mirrored).unwrap()).unwrap().weight;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn size_guards() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let inst = random_instance(11, false, &mut rng);
        let g = build_g_uno(&inst).unwrap();
        assert!(matches!(solve_tour_exact(&g), Err(ToroError::TooLarge(_))));
        assert!(solve_tour(&g, 0).is_ok());
    }

    #[test]
    fn heuristic_close_to_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut ratio_sum = 0.0;
        for trial in 0..100 {
            let n = 2 + trial % 7;
            let labeled = trial % 2 == 0;
            let inst = random_instance(n, labeled, &mut rng);
            let g = if labeled { build_g_no(&inst) } else { build_g_uno(&inst) }.unwrap();
            let exact = solve_tour_exact(&g).unwrap().weight;
            let heur = solve_tour_heuristic(&g, trial as u64).unwrap().weight;
            assert!(heur >= exact - 1e-9);
            ratio_sum += heur / exact;
        }
        assert!(ratio_sum / 100.0 <= 1.2);
    }

    #[test]
    fn heuristic_handles_two_hundred_objects() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for labeled in [true, false] {
            let inst = random_instance(200, labeled, &mut rng);
            let g = if labeled { build_g_no(&inst) } else { build_g_uno(&inst) }.unwrap();
            let t = solve_tour_heuristic(&g, 1).unwrap();
            assert_eq!(tour_to_order(&t).unwrap().len(), 200);
            assert_eq!(t, solve_tour_heuristic(&g, 1).unwrap());
        }
    }

    #[test]
    fn order_extraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let inst = random_instance(5, true, &mut rng);
        let t = solve_tour_exact(&build_g_no(&inst).unwrap()).unwrap();
        let pairs = tour_to_order(&t).unwrap();
        for &(s, g) in &pairs {
            match (s, g) {
                (TourVertex::Start(i), TourVertex::Goal(j)) => assert_eq!(i, j),
                _ => panic!("bad pair"),
            }
        }
        assert_eq!(tour_to_order(&t.reversed()).unwrap(), pairs);
        let u = random_instance(4, false, &mut rng);
        let tu = solve_tour_exact(&build_g_uno(&u).unwrap()).unwrap();
        assert_eq!(tour_to_order(&tu.reversed()).unwrap(), tour_to_order(&tu).unwrap());
    }

    #[test]
    fn malformed_tour_rejected() {
        let t = Tour {
            kind: TourKind::Labeled,
            vertices: vec![TourVertex::RestStart, TourVertex::Goal(0), TourVertex::RestGoal, TourVertex::RestLink],
            weight: 0.0,
        };
        assert!(tour_to_order(&t).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn exact_no_worse_than_any_order(seed in any::<u64>(), n in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = random_instance(n, true, &mut rng);
            let g = build_g_no(&inst).unwrap();
            let exact = solve_tour_exact(&g).unwrap();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let other = tour_from_route(&g, &order).unwrap();
            prop_assert!(exact.weight <= other.weight + 1e-9);
            prop_assert!((tour_weight(&g, &exact).unwrap() - exact.weight).abs() < 1e-9);
        }
    }
}
