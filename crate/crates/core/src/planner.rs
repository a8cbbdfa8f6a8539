//! End-to-end planners.
//!
//! [`toro_no_tsp`] handles instances without overlaps through a tour.
//! [`toro_fvs_single`] picks one minimum feedback vertex set, parks exactly
//! those objects in buffers, and orders the `n + p` actions for the shortest
//! travel with [`min_dist_plan`]. [`toro_optimal`] repeats that for every
//! minimum feedback vertex set. [`brute_force_plan`] is the exhaustive
//! reference for small instances.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bip::{self, BinaryProgram, Relation, Sense, Status, Var};
use crate::depgraph::{build_dep_graph, is_acyclic, DepGraph};
use crate::error::{Result, ToroError};
use crate::fvs::{enumerate_optimal_fvs_with, solve_fvs_with, FvsMethod, FvsOptions};
use crate::geometry::{dist, Point2};
use crate::model::{buffer_positions, Action, Instance, PlaceKind, Plan};
use crate::routing::{build_g_no, build_g_uno, solve_tour, tour_to_order, TourVertex};

/// Seed for the tour heuristic when the caller gives none.
pub const DEFAULT_TOUR_SEED: u64 = 0;
/// Default cap on optimal sets tried by [`toro_optimal`].
pub const DEFAULT_FVS_CAP: usize = 1000;
/// Default limit on search states expanded by [`min_dist_plan`].
pub const DEFAULT_MAX_EXPANSIONS: usize = 20_000_000;
/// Largest instance [`brute_force_plan`] accepts.
pub const BRUTE_FORCE_MAX_OBJECTS: usize = 5;

/// Plan for an instance without overlaps, following a minimum tour.
pub fn toro_no_tsp(inst: &Instance) -> Result<Plan> {
    toro_no_tsp_with(inst, DEFAULT_TOUR_SEED)
}

pub fn toro_no_tsp_with(inst: &Instance, seed: u64) -> Result<Plan> {
    if !inst.is_non_overlapping() {
        return Err(ToroError::OverlappingInstance);
    }
    let graph = if inst.labeled { build_g_no(inst)? } else { build_g_uno(inst)? };
    let tour = solve_tour(&graph, seed)?;
    let actions = tour_to_order(&tour)?
        .into_iter()
        .map(|pair| match pair {
            (TourVertex::Start(i), TourVertex::Goal(j)) => Ok(Action {
                object: i,
                pick: inst.start_pose(i),
                place: inst.goal_pose(j),
                kind: PlaceKind::Goal,
            }),
            _ => Err(ToroError::Solver("tour pair is not a start and a goal".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan::new(actions))
}

/// Timing and buffer set behind a [`toro_fvs_single`] plan.
#[derive(Debug, Clone)]
pub struct FvsPlanReport {
    pub plan: Plan,
    /// Objects sent to a buffer, sorted.
    pub fvs: Vec<usize>,
    pub fvs_time: Duration,
    pub mindist_time: Duration,
}

/// One feedback vertex set, then the shortest plan that buffers exactly it.
pub fn toro_fvs_single(inst: &Instance, method: FvsMethod) -> Result<Plan> {
    Ok(toro_fvs_single_report(inst, method, &FvsOptions::default())?.plan)
}

pub fn toro_fvs_single_report(inst: &Instance, method: FvsMethod, opts: &FvsOptions) -> Result<FvsPlanReport> {
    let clock = Instant::now();
    let g = build_dep_graph(inst)?;
    let fvs = choose_fvs(&g, method, opts)?;
    let fvs_time = clock.elapsed();
    let clock = Instant::now();
    let plan = min_dist_plan(inst, &fvs)?;
    Ok(FvsPlanReport { plan, fvs, fvs_time, mindist_time: clock.elapsed() })
}

fn choose_fvs(g: &DepGraph, method: FvsMethod, opts: &FvsOptions) -> Result<Vec<usize>> {
    Ok(solve_fvs_with(g, method, opts)?.vertices)
}

fn check_fvs(inst: &Instance, fvs: &[usize]) -> Result<(DepGraph, Vec<bool>)> {
    let g = build_dep_graph(inst)?;
    let mut member = vec![false; inst.n()];
    for &i in fvs {
        if i >= inst.n() {
            return Err(ToroError::InvalidParameter(format!("buffer set names unknown object {i}")));
        }
        member[i] = true;
    }
    if !is_acyclic(&g.without(fvs)) {
        return Err(ToroError::InvalidParameter("buffer set leaves a dependency cycle".into()));
    }
    Ok((g, member))
}

/// Where an object currently is.
const AT_START: u8 = 0;
const AT_GOAL: u8 = 1;
const NOBODY: u8 = u8::MAX;

fn slot_loc(k: usize) -> u8 {
    2 + k as u8
}

/// Static data shared by the exact searches.
struct Layout<'a> {
    inst: &'a Instance,
    slots: Vec<Point2>,
    /// `blockers[i]`: objects whose start overlaps goal `i`.
    blockers: Vec<Vec<usize>>,
}

impl<'a> Layout<'a> {
    fn new(inst: &'a Instance, g: &DepGraph, slots: Vec<Point2>) -> Self {
        let blockers = (0..inst.n()).map(|i| g.successors(i).to_vec()).collect();
        Layout { inst, slots, blockers }
    }

    fn pose(&self, i: usize, loc: u8) -> Point2 {
        match loc {
            AT_START => self.inst.start_pose(i),
            AT_GOAL => self.inst.goal_pose(i),
            k => self.slots[(k - 2) as usize],
        }
    }

    fn goal_free(&self, i: usize, locs: &[u8]) -> bool {
        self.blockers[i].iter().all(|&j| locs[j] != AT_START)
    }

    fn slot_free(&self, k: usize, locs: &[u8]) -> bool {
        !locs.contains(&slot_loc(k))
    }

    fn initial_locs(&self) -> Vec<u8> {
        (0..self.inst.n())
            .map(|i| if self.inst.is_stationary(i) { AT_GOAL } else { AT_START })
            .collect()
    }

    fn action(&self, i: usize, from: u8, to: u8) -> Action {
        Action {
            object: i,
            pick: self.pose(i, from),
            place: self.pose(i, to),
            kind: if to == AT_GOAL { PlaceKind::Goal } else { PlaceKind::Buffer },
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Queued {
    f: f64,
    order: u64,
    node: usize,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (f, insertion order)
        other.f.total_cmp(&self.f).then_with(|| other.order.cmp(&self.order))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Limits for [`min_dist_plan_with`].
#[derive(Debug, Clone)]
pub struct MinDistOptions {
    pub max_expansions: usize,
    /// Buffer poses to use instead of the default slots; needs at least
    /// `|fvs|` entries.
    pub slots: Option<Vec<Point2>>,
}

impl Default for MinDistOptions {
    fn default() -> Self {
        MinDistOptions { max_expansions: DEFAULT_MAX_EXPANSIONS, slots: None }
    }
}

/// Shortest plan with exactly `n + |fvs|` actions in which the members of
/// `fvs` visit a buffer once and every other object moves straight to its
/// goal.
pub fn min_dist_plan(inst: &Instance, fvs: &[usize]) -> Result<Plan> {
    min_dist_plan_with(inst, fvs, &MinDistOptions::default())
}

/// A* over (object locations, last object placed). The bound adds the
/// remaining carry distances, the shortest hop to any remaining pick and the
/// shortest final trip from any unfinished goal to the rest pose.
pub fn min_dist_plan_with(inst: &Instance, fvs: &[usize], opts: &MinDistOptions) -> Result<Plan> {
    let (g, member) = check_fvs(inst, fvs)?;
    let n = inst.n();
    let p = member.iter().filter(|&&m| m).count();
    let slots = match &opts.slots {
        Some(s) if s.len() >= p => s.clone(),
        Some(_) => return Err(ToroError::InvalidParameter("fewer buffer poses than buffered objects".into())),
        None => buffer_positions(inst, p),
    };
    if slots.len() > 250 {
        return Err(ToroError::TooLarge("too many buffer slots".into()));
    }
    let lay = Layout::new(inst, &g, slots);
    let k_slots = p;
    // carry still owed by an object at its start
    let via_buffer: Vec<f64> = (0..n)
        .map(|i| {
            (0..k_slots)
                .map(|k| dist(inst.start_pose(i), lay.slots[k]) + dist(lay.slots[k], inst.goal_pose(i)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let bound = |locs: &[u8], at: Point2| -> f64 {
        let mut carry = 0.0;
        let mut hop = f64::INFINITY;
        let mut last = f64::INFINITY;
        for i in 0..n {
            let loc = locs[i];
            if loc == AT_GOAL {
                continue;
            }
            carry += match loc {
                AT_START if member[i] => via_buffer[i],
                AT_START => dist(inst.start_pose(i), inst.goal_pose(i)),
                _ => dist(lay.pose(i, loc), inst.goal_pose(i)),
            };
            hop = hop.min(dist(at, lay.pose(i, loc)));
            last = last.min(dist(inst.goal_pose(i), inst.rest_goal));
        }
        if hop.is_finite() {
            carry + hop + last
        } else {
            dist(at, inst.rest_goal)
        }
    };

    struct Node {
        locs: Vec<u8>,
        last: u8,
        g: f64,
        parent: usize,
        /// (object, from, to) of the action that reached this node
        step: (usize, u8, u8),
    }
    let at_of = |nodes: &Vec<Node>, idx: usize| -> Point2 {
        let nd = &nodes[idx];
        if nd.last == NOBODY {
            inst.rest_start
        } else {
            lay.pose(nd.last as usize, nd.locs[nd.last as usize])
        }
    };
    let start_locs = lay.initial_locs();
    let mut nodes = vec![Node { locs: start_locs.clone(), last: NOBODY, g: 0.0, parent: usize::MAX, step: (0, 0, 0) }];
    let mut index: HashMap<(Vec<u8>, u8), usize> = HashMap::new();
    index.insert((start_locs.clone(), NOBODY), 0);
    let mut heap = BinaryHeap::new();
    let mut order = 0u64;
    heap.push(Queued { f: bound(&start_locs, inst.rest_start), order, node: 0 });
    // terminal pseudo-entries carry node index + offset
    let terminal_flag = usize::MAX / 2;
    let mut expansions = 0usize;
    while let Some(q) = heap.pop() {
        if q.node >= terminal_flag {
            let idx = q.node - terminal_flag;
            return Ok(rebuild(&nodes, idx, &lay, |nd| (nd.parent, nd.step)));
        }
        let idx = q.node;
        let at = at_of(&nodes, idx);
        let g_here = nodes[idx].g;
        if q.f > g_here + bound(&nodes[idx].locs, at) + 1e-9 {
            continue; // stale entry
        }
        expansions += 1;
        if expansions > opts.max_expansions {
            return Err(ToroError::BudgetExhausted(format!(
                "shortest-plan search exceeded {} expansions",
                opts.max_expansions
            )));
        }
        let locs = nodes[idx].locs.clone();
        if locs.iter().all(|&l| l == AT_GOAL) {
            order += 1;
            heap.push(Queued { f: g_here + dist(at, inst.rest_goal), order, node: terminal_flag + idx });
            continue;
        }
        for i in 0..n {
            let from = locs[i];
            let targets: Vec<u8> = match from {
                AT_GOAL => continue,
                AT_START if member[i] => (0..k_slots).filter(|&k| lay.slot_free(k, &locs)).map(slot_loc).collect(),
                _ if lay.goal_free(i, &locs) => vec![AT_GOAL],
                _ => continue,
            };
            for to in targets {
                let pick = lay.pose(i, from);
                let place = lay.pose(i, to);
                let g_next = g_here + dist(at, pick) + dist(pick, place);
                let mut next = locs.clone();
                next[i] = to;
                let key = (next, i as u8);
                let child = match index.get(&key) {
                    Some(&c) if nodes[c].g <= g_next + 1e-12 => continue,
                    Some(&c) => {
                        nodes[c].g = g_next;
                        nodes[c].parent = idx;
                        nodes[c].step = (i, from, to);
                        c
                    }
                    None => {
                        nodes.push(Node { locs: key.0.clone(), last: i as u8, g: g_next, parent: idx, step: (i, from, to) });
                        index.insert(key.clone(), nodes.len() - 1);
                        nodes.len() - 1
                    }
                };
                order += 1;
                heap.push(Queued { f: g_next + bound(&key.0, place), order, node: child });
            }
        }
    }
    Err(ToroError::Infeasible(
        "no plan buffers exactly the given objects; the set may not break every cycle".into(),
    ))
}

fn rebuild<N>(nodes: &[N], mut idx: usize, lay: &Layout, link: impl Fn(&N) -> (usize, (usize, u8, u8))) -> Plan {
    let mut actions = Vec::new();
    loop {
        let (parent, (i, from, to)) = link(&nodes[idx]);
        if parent == usize::MAX {
            break;
        }
        actions.push(lay.action(i, from, to));
        idx = parent;
    }
    actions.reverse();
    Plan::new(actions)
}

/// Valid plan with no distance optimization: buffer the set, then place
/// whatever is unblocked, lowest id first, then empty the buffers.
pub fn feasible_plan(inst: &Instance, fvs: &[usize]) -> Result<Plan> {
    let (g, member) = check_fvs(inst, fvs)?;
    let p = member.iter().filter(|&&m| m).count();
    let lay = Layout::new(inst, &g, buffer_positions(inst, p));
    let mut locs = lay.initial_locs();
    let mut actions = Vec::new();
    let buffered: Vec<usize> = (0..inst.n()).filter(|&i| member[i] && locs[i] == AT_START).collect();
    for (k, &i) in buffered.iter().enumerate() {
        actions.push(lay.action(i, AT_START, slot_loc(k)));
        locs[i] = slot_loc(k);
    }
    loop {
        let ready = (0..inst.n()).find(|&i| locs[i] == AT_START && lay.goal_free(i, &locs));
        match ready {
            Some(i) => {
                actions.push(lay.action(i, AT_START, AT_GOAL));
                locs[i] = AT_GOAL;
            }
            None => break,
        }
    }
    if locs.iter().any(|&l| l == AT_START) {
        return Err(ToroError::Solver("residual dependencies did not drain".into()));
    }
    for (k, &i) in buffered.iter().enumerate() {
        actions.push(lay.action(i, slot_loc(k), AT_GOAL));
    }
    Ok(Plan::new(actions))
}

/// Result of [`toro_optimal`].
#[derive(Debug, Clone)]
pub struct OptimalPlan {
    pub plan: Plan,
    pub fvs: Vec<usize>,
    pub sets_evaluated: usize,
    /// More optimal sets may exist beyond the cap.
    pub capped: bool,
}

/// Tries every minimum feedback vertex set and keeps the shortest plan.
/// All candidates have the same number of grasps.
pub fn toro_optimal(inst: &Instance) -> Result<OptimalPlan> {
    toro_optimal_with(inst, DEFAULT_FVS_CAP, &FvsOptions::default())
}

pub fn toro_optimal_with(inst: &Instance, cap: usize, opts: &FvsOptions) -> Result<OptimalPlan> {
    let g = build_dep_graph(inst)?;
    let found = enumerate_optimal_fvs_with(&g, cap, opts)?;
    let sets: Vec<Vec<usize>> = found.sets.iter().map(|s| s.vertices.clone()).collect();
    let plans = sets.par_iter().map(|s| min_dist_plan(inst, s)).collect::<Result<Vec<_>>>()?;
    let best = (0..plans.len())
        .min_by(|&a, &b| {
            let (da, db) = (plans[a].distance(inst), plans[b].distance(inst));
            da.total_cmp(&db).then_with(|| sets[a].cmp(&sets[b]))
        })
        .expect("at least one optimal set");
    Ok(OptimalPlan {
        plan: plans[best].clone(),
        fvs: sets[best].clone(),
        sets_evaluated: sets.len(),
        capped: found.capped,
    })
}

/// Exhaustive search for the plan with the fewest actions, then the
/// shortest distance. Objects may go to the goal directly or to any free
/// buffer slot first; once at the goal an object stays there. Returns
/// `None` when no plan fits in `max_actions`.
pub fn brute_force_plan(inst: &Instance, max_actions: usize) -> Result<Option<Plan>> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_OBJECTS || max_actions > n + 3 {
        return Err(ToroError::TooLarge(format!(
            "brute-force planning handles n <= {BRUTE_FORCE_MAX_OBJECTS} and at most n + 3 actions"
        )));
    }
    if !inst.labeled {
        return Err(ToroError::Unlabeled);
    }
    let g = build_dep_graph(inst)?;
    let movable = n - inst.stationary_count();
    for extra in 0..=max_actions.saturating_sub(movable) {
        let lay = Layout::new(inst, &g, buffer_positions(inst, extra));
        let mut search = Exhaustive { lay: &lay, extra, best: None, path: Vec::new() };
        let mut locs = lay.initial_locs();
        search.go(&mut locs, inst.rest_start, 0, 0.0);
        if let Some((_, actions)) = search.best {
            return Ok(Some(Plan::new(actions)));
        }
    }
    Ok(None)
}

struct Exhaustive<'a> {
    lay: &'a Layout<'a>,
    extra: usize,
    best: Option<(f64, Vec<Action>)>,
    path: Vec<Action>,
}

impl Exhaustive<'_> {
    fn remaining_carry(&self, locs: &[u8]) -> f64 {
        (0..locs.len())
            .filter(|&i| locs[i] != AT_GOAL)
            .map(|i| dist(self.lay.pose(i, locs[i]), self.lay.inst.goal_pose(i)))
            .sum()
    }

    fn go(&mut self, locs: &mut Vec<u8>, at: Point2, buffered: usize, cost: f64) {
        let inst = self.lay.inst;
        if let Some((b, _)) = &self.best {
            if cost + self.remaining_carry(locs) > *b + 1e-9 {
                return;
            }
        }
        if locs.iter().all(|&l| l == AT_GOAL) {
            let total = cost + dist(at, inst.rest_goal);
            if buffered == self.extra && self.best.as_ref().map_or(true, |(b, _)| total < *b - 1e-9) {
                self.best = Some((total, self.path.clone()));
            }
            return;
        }
        // enough objects left at their starts to use up the extra actions
        let at_start = locs.iter().filter(|&&l| l == AT_START).count();
        if at_start < self.extra - buffered {
            return;
        }
        for i in 0..locs.len() {
            let from = locs[i];
            if from == AT_GOAL {
                continue;
            }
            let mut targets = Vec::new();
            if self.lay.goal_free(i, locs) {
                targets.push(AT_GOAL);
            }
            if from == AT_START && buffered < self.extra {
                targets.extend((0..self.extra).filter(|&k| self.lay.slot_free(k, locs)).map(slot_loc));
            }
            for to in targets {
                let a = self.lay.action(i, from, to);
                let step = dist(at, a.pick) + dist(a.pick, a.place);
                locs[i] = to;
                self.path.push(a);
                let used = buffered + usize::from(to != AT_GOAL);
                self.go(locs, a.place, used, cost + step);
                self.path.pop();
                locs[i] = from;
            }
        }
    }
}

/// Time-expanded 0/1 program for the shortest plan with a fixed buffer set.
///
/// Each of the `n + p` steps performs exactly one move from a catalogue:
/// start to goal for ordinary objects, start to buffer `k` and buffer `k`
/// to goal for buffered ones. Occupancy variables per step track every
/// object's location; blocking and buffer-capacity rows forbid collisions;
/// transition variables between consecutive steps carry the empty-hand
/// travel. Meant as an independent check of [`min_dist_plan`] on small
/// instances.
pub struct MinDistModel {
    pub program: BinaryProgram,
    pub horizon: usize,
    moves: Vec<(usize, u8, u8)>,
    act: Vec<Vec<Var>>,
    slots: Vec<Point2>,
}

impl MinDistModel {
    pub fn build(inst: &Instance, fvs: &[usize]) -> Result<MinDistModel> {
        let (g, member) = check_fvs(inst, fvs)?;
        let n = inst.n();
        let p = member.iter().filter(|&&m| m).count();
        let slots = buffer_positions(inst, p);
        let lay = Layout::new(inst, &g, slots.clone());
        let objects: Vec<usize> = (0..n).filter(|&i| !inst.is_stationary(i)).collect();
        let horizon = objects.len() + p;
        let mut moves = Vec::new();
        for &i in &objects {
            if member[i] {
                for k in 0..p {
                    moves.push((i, AT_START, slot_loc(k)));
                    moves.push((i, slot_loc(k), AT_GOAL));
                }
            } else {
                moves.push((i, AT_START, AT_GOAL));
            }
        }
        let locs_of = |i: usize| -> Vec<u8> {
            let mut v = vec![AT_START, AT_GOAL];
            if member[i] {
                v.extend((0..p).map(slot_loc));
            }
            v
        };
        let mut pr = BinaryProgram::new(Sense::Minimize);
        // occupancy occ[t][i][loc index]
        let mut occ: Vec<HashMap<(usize, u8), Var>> = Vec::new();
        for t in 0..=horizon {
            let mut m = HashMap::new();
            for &i in &objects {
                for l in locs_of(i) {
                    m.insert((i, l), pr.add_var(format!("o_{t}_{i}_{l}")));
                }
            }
            occ.push(m);
        }
        let act: Vec<Vec<Var>> = (0..horizon)
            .map(|t| (0..moves.len()).map(|a| pr.add_var(format!("x_{t}_{a}"))).collect())
            .collect();
        let pick = |a: usize| lay.pose(moves[a].0, moves[a].1);
        let place = |a: usize| lay.pose(moves[a].0, moves[a].2);
        for &i in &objects {
            for l in locs_of(i) {
                let init = if l == AT_START { 1.0 } else { 0.0 };
                let fin = if l == AT_GOAL { 1.0 } else { 0.0 };
                pr.add_constraint(&[(occ[0][&(i, l)], 1.0)], Relation::Eq, init)?;
                pr.add_constraint(&[(occ[horizon][&(i, l)], 1.0)], Relation::Eq, fin)?;
            }
        }
        for t in 0..horizon {
            let one: Vec<(Var, f64)> = act[t].iter().map(|&v| (v, 1.0)).collect();
            pr.add_constraint(&one, Relation::Eq, 1.0)?;
            for (a, &(i, from, _)) in moves.iter().enumerate() {
                pr.add_constraint(&[(act[t][a], 1.0), (occ[t][&(i, from)], -1.0)], Relation::Le, 0.0)?;
                pr.add_objective_coef(act[t][a], dist(pick(a), place(a)));
            }
            for &i in &objects {
                for l in locs_of(i) {
                    let mut terms = vec![(occ[t + 1][&(i, l)], 1.0), (occ[t][&(i, l)], -1.0)];
                    for (a, &(j, from, to)) in moves.iter().enumerate() {
                        if j == i && from == l {
                            terms.push((act[t][a], 1.0));
                        }
                        if j == i && to == l {
                            terms.push((act[t][a], -1.0));
                        }
                    }
                    pr.add_constraint(&terms, Relation::Eq, 0.0)?;
                }
            }
        }
        for t in 0..=horizon {
            for &i in &objects {
                for &j in &lay.blockers[i] {
                    if let (Some(&gi), Some(&sj)) = (occ[t].get(&(i, AT_GOAL)), occ[t].get(&(j, AT_START))) {
                        pr.add_constraint(&[(gi, 1.0), (sj, 1.0)], Relation::Le, 1.0)?;
                    }
                }
            }
            for k in 0..p {
                let terms: Vec<(Var, f64)> =
                    objects.iter().filter_map(|&i| occ[t].get(&(i, slot_loc(k))).map(|&v| (v, 1.0))).collect();
                if !terms.is_empty() {
                    pr.add_constraint(&terms, Relation::Le, 1.0)?;
                }
            }
        }
        if horizon > 0 {
            for a in 0..moves.len() {
                pr.add_objective_coef(act[0][a], dist(inst.rest_start, pick(a)));
                pr.add_objective_coef(act[horizon - 1][a], dist(place(a), inst.rest_goal));
            }
        }
        // empty-hand travel between consecutive steps
        for t in 0..horizon.saturating_sub(1) {
            let z: Vec<Vec<Var>> = (0..moves.len())
                .map(|a| (0..moves.len()).map(|b| pr.add_var(format!("z_{t}_{a}_{b}"))).collect())
                .collect();
            for a in 0..moves.len() {
                let mut out: Vec<(Var, f64)> = z[a].iter().map(|&v| (v, 1.0)).collect();
                out.push((act[t][a], -1.0));
                pr.add_constraint(&out, Relation::Eq, 0.0)?;
                let mut inc: Vec<(Var, f64)> = (0..moves.len()).map(|b| (z[b][a], 1.0)).collect();
                inc.push((act[t + 1][a], -1.0));
                pr.add_constraint(&inc, Relation::Eq, 0.0)?;
                for b in 0..moves.len() {
                    pr.add_objective_coef(z[a][b], dist(place(a), pick(b)));
                }
            }
        }
        Ok(MinDistModel { program: pr, horizon, moves, act, slots })
    }

    /// Solves the program and reads the plan back.
    pub fn solve(&self, inst: &Instance, budget: Duration) -> Result<Plan> {
        let sol = bip::solve(&self.program, budget);
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Err(ToroError::Infeasible("shortest-plan program is infeasible".into())),
            _ => return Err(ToroError::Timeout(None)),
        }
        let g = build_dep_graph(inst)?;
        let lay = Layout::new(inst, &g, self.slots.clone());
        let mut actions = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            let a = (0..self.moves.len())
                .find(|&a| sol.value(self.act[t][a]))
                .ok_or_else(|| ToroError::Solver(format!("step {t} has no move")))?;
            let (i, from, to) = self.moves[a];
            actions.push(lay.action(i, from, to));
        }
        Ok(Plan::new(actions))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fvs::min_grasps;
    use crate::geometry::Rect;
    use crate::model::fixtures::{single_object, swap_instance};
    use crate::model::{check_plan, plan_cost, CostModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Small crowded instance: random starts, goals near other starts.
    fn crowded(n: usize, rng: &mut ChaCha8Rng) -> Instance {
        let r = 0.5;
        let ws = Rect::new(0.0, 0.0, 4.0 + n as f64, 4.0 + n as f64);
        let sample = |rng: &mut ChaCha8Rng, pts: &[Point2]| loop {
            let p = Point2::new(rng.gen_range(ws.min_x + r..ws.max_x - r), rng.gen_range(ws.min_y + r..ws.max_y - r));
            if pts.iter().all(|q| dist(*q, p) > 2.0 * r + 1e-6) {
                return p;
            }
        };
        loop {
            let mut starts = Vec::new();
            for _ in 0..n {
                let p = sample(rng, &starts);
                starts.push(p);
            }
            let mut goals = Vec::new();
            for _ in 0..n {
                let p = sample(rng, &goals);
                goals.push(p);
            }
            if let Ok(inst) = Instance::new(
                starts,
                goals,
                r,
                ws.min_corner(),
                ws.max_corner(),
                true,
                CostModel::default(),
                ws,
            ) {
                return inst;
            }
        }
    }

    /// Every plan buffering exactly `fvs`, each once.
    fn restricted_oracle(inst: &Instance, fvs: &[usize]) -> f64 {
        fn go(lay: &Layout, member: &[bool], locs: &mut Vec<u8>, at: Point2, cost: f64, best: &mut f64) {
            let inst = lay.inst;
            if locs.iter().all(|&l| l == AT_GOAL) {
                *best = best.min(cost + dist(at, inst.rest_goal));
                return;
            }
            for i in 0..locs.len() {
                let from = locs[i];
                let targets: Vec<u8> = match from {
                    AT_GOAL => continue,
                    AT_START if member[i] => {
                        (0..lay.slots.len()).filter(|&k| lay.slot_free(k, locs)).map(slot_loc).collect()
                    }
                    _ if lay.goal_free(i, locs) => vec![AT_GOAL],
                    _ => continue,
                };
                for to in targets {
                    let a = lay.action(i, from, to);
                    locs[i] = to;
                    go(lay, member, locs, a.place, cost + dist(at, a.pick) + dist(a.pick, a.place), best);
                    locs[i] = from;
                }
            }
        }
        let g = build_dep_graph(inst).unwrap();
        let mut member = vec![false; inst.n()];
        fvs.iter().for_each(|&i| member[i] = true);
        let lay = Layout::new(inst, &g, buffer_positions(inst, fvs.len()));
        let mut best = f64::INFINITY;
        let mut locs = lay.initial_locs();
        go(&lay, &member, &mut locs, inst.rest_start, 0.0, &mut best);
        best
    }

    #[test]
    fn single_object_plan_cost() {
        let inst = single_object();
        let plan = toro_no_tsp(&inst).unwrap();
        assert_eq!(plan.grasps(), 1);
        assert!((plan_cost(&plan, &inst).unwrap().total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn swap_needs_one_buffer() {
        let inst = swap_instance();
        for method in [FvsMethod::IlpConstraint, FvsMethod::IlpEnumerate, FvsMethod::Mdh] {
            let plan = toro_fvs_single(&inst, method).unwrap();
            assert_eq!(plan.grasps(), 3);
            assert_eq!(plan.buffers_used, 1);
            check_plan(&plan, &inst).unwrap();
        }
        assert_eq!(min_grasps(&inst).unwrap(), 3);
        let brute = brute_force_plan(&inst, 5).unwrap().unwrap();
        assert_eq!(brute.grasps(), 3);
        assert!(brute_force_plan(&inst, 2).unwrap().is_none());
    }

    #[test]
    fn swap_fixed_buffer_matches_oracle() {
        let inst = swap_instance();
        for fvs in [vec![0], vec![1]] {
            let plan = min_dist_plan(&inst, &fvs).unwrap();
            check_plan(&plan, &inst).unwrap();
            assert!((plan.distance(&inst) - restricted_oracle(&inst, &fvs)).abs() < 1e-9);
            let f = feasible_plan(&inst, &fvs).unwrap();
            check_plan(&f, &inst).unwrap();
            assert!(f.distance(&inst) >= plan.distance(&inst) - 1e-9);
        }
        let f = feasible_plan(&inst, &[1]).unwrap();
        let moved: Vec<(usize, PlaceKind)> = f.actions.iter().map(|a| (a.object, a.kind)).collect();
        assert_eq!(moved, vec![(1, PlaceKind::Buffer), (0, PlaceKind::Goal), (1, PlaceKind::Goal)]);
        assert!(min_dist_plan(&inst, &[]).is_err());
    }

    #[test]
    fn optimal_takes_better_of_both_buffers() {
        let inst = swap_instance();
        let best = toro_optimal(&inst).unwrap();
        assert_eq!(best.sets_evaluated, 2);
        let d0 = min_dist_plan(&inst, &[0]).unwrap().distance(&inst);
        let d1 = min_dist_plan(&inst, &[1]).unwrap().distance(&inst);
        assert!((best.plan.distance(&inst) - d0.min(d1)).abs() < 1e-12);
    }

    #[test]
    fn empty_set_matches_tour_on_non_overlapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let n = rng.gen_range(1..=5);
            let inst = loop {
                let c = crowded(n, &mut rng);
                if c.is_non_overlapping() {
                    break c;
                }
            };
            let a = min_dist_plan(&inst, &[]).unwrap().distance(&inst);
            let b = toro_no_tsp(&inst).unwrap().distance(&inst);
            assert!((a - b).abs() < 1e-9);
            let brute = brute_force_plan(&inst, n).unwrap().unwrap();
            assert_eq!(brute.grasps(), n);
            assert!((brute.distance(&inst) - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_search_matches_restricted_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let n = rng.gen_range(2..=5);
            let inst = crowded(n, &mut rng);
            let g = build_dep_graph(&inst).unwrap();
            let fvs = choose_fvs(&g, FvsMethod::Mdh, &FvsOptions::default()).unwrap();
            let plan = min_dist_plan(&inst, &fvs).unwrap();
            check_plan(&plan, &inst).unwrap();
            assert_eq!(plan.grasps(), n - inst.stationary_count() + fvs.len());
            assert!((plan.distance(&inst) - restricted_oracle(&inst, &fvs)).abs() < 1e-6);
        }
    }

    #[test]
    fn slot_relabeling_keeps_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut tried = 0;
        while tried < 5 {
            let inst = crowded(5, &mut rng);
            let g = build_dep_graph(&inst).unwrap();
            let fvs = choose_fvs(&g, FvsMethod::IlpEnumerate, &FvsOptions::default()).unwrap();
            if fvs.len() < 2 {
                continue;
            }
            tried += 1;
            let mut slots = buffer_positions(&inst, fvs.len());
            let a = min_dist_plan(&inst, &fvs).unwrap().distance(&inst);
            slots.reverse();
            let opts = MinDistOptions { slots: Some(slots), ..Default::default() };
            let b = min_dist_plan_with(&inst, &fvs, &opts).unwrap().distance(&inst);
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn binary_program_agrees_with_search() {
        let inst = swap_instance();
        for fvs in [vec![0], vec![1]] {
            let model = MinDistModel::build(&inst, &fvs).unwrap();
            let plan = model.solve(&inst, Duration::from_secs(60)).unwrap();
            check_plan(&plan, &inst).unwrap();
            let search = min_dist_plan(&inst, &fvs).unwrap();
            assert!((plan.distance(&inst) - search.distance(&inst)).abs() < 1e-6);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..4 {
            let inst = crowded(3, &mut rng);
            let g = build_dep_graph(&inst).unwrap();
            let fvs = choose_fvs(&g, FvsMethod::IlpEnumerate, &FvsOptions::default()).unwrap();
            let model = MinDistModel::build(&inst, &fvs).unwrap();
            let plan = model.solve(&inst, Duration::from_secs(120)).unwrap();
            check_plan(&plan, &inst).unwrap();
            let search = min_dist_plan(&inst, &fvs).unwrap();
            assert!((plan.distance(&inst) - search.distance(&inst)).abs() < 1e-6);
        }
    }

    #[test]
    fn brute_force_guards() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let inst = crowded(6, &mut rng);
        assert!(matches!(brute_force_plan(&inst, 6), Err(ToroError::TooLarge(_))));
        let small = crowded(3, &mut rng);
        assert!(matches!(brute_force_plan(&small, 7), Err(ToroError::TooLarge(_))));
    }

    #[test]
    fn exact_fvs_grasps_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let inst = crowded(n, &mut rng);
            let plan = toro_fvs_single(&inst, FvsMethod::IlpEnumerate).unwrap();
            let brute = brute_force_plan(&inst, n + 3).unwrap().unwrap();
            assert_eq!(plan.grasps(), brute.grasps());
            assert_eq!(plan.grasps(), min_grasps(&inst).unwrap());
        }
    }
}
