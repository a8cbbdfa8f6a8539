//! Instance and graph factories. Everything here is a deterministic function
//! of its arguments and seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::depgraph::{build_dep_graph, DepGraph};
use crate::error::{Result, ToroError};
use crate::geometry::{dist, Point2, Rect};
use crate::model::{CostModel, Instance};

/// Sampling attempts allowed per placed disc.
const ATTEMPTS_PER_DISC: usize = 20_000;
/// Candidate goal poses scored per object in [`gen_overlap`].
const GOAL_CANDIDATES: usize = 64;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_geometry(workspace: &Rect, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ToroError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    if workspace.width() < 2.0 * r || workspace.height() < 2.0 * r {
        return Err(ToroError::InvalidParameter("workspace smaller than one disc".into()));
    }
    Ok(())
}

fn uniform_center(rng: &mut ChaCha8Rng, ws: &Rect, r: f64) -> Point2 {
    Point2::new(rng.gen_range(ws.min_x + r..=ws.max_x - r), rng.gen_range(ws.min_y + r..=ws.max_y - r))
}

fn clear_of(p: Point2, others: &[Point2], r: f64) -> bool {
    // a little slack keeps sampled discs away from exact tangency
    others.iter().all(|q| dist(p, *q) > 2.0 * r + 1e-7)
}

/// Rejection-samples `count` pairwise disjoint discs.
fn sample_disjoint(rng: &mut ChaCha8Rng, count: usize, ws: &Rect, r: f64) -> Result<Vec<Point2>> {
    let mut pts = Vec::with_capacity(count);
    let mut budget = ATTEMPTS_PER_DISC * (count + 1);
    while pts.len() < count {
        if budget == 0 {
            return Err(ToroError::BudgetExhausted(format!(
                "placed {} of {count} discs of radius {r} before giving up",
                pts.len()
            )));
        }
        budget -= 1;
        let p = uniform_center(rng, ws, r);
        if clear_of(p, &pts, r) {
            pts.push(p);
        }
    }
    Ok(pts)
}

fn corner_instance(starts: Vec<Point2>, goals: Vec<Point2>, ws: Rect, r: f64) -> Result<Instance> {
    Instance::new(starts, goals, r, ws.min_corner(), ws.max_corner(), true, CostModel::default(), ws)
}

/// Disc area over workspace area used by the overlap benchmarks. Denser
/// tables let one goal cover several starts, which higher target degrees need.
pub const OVERLAP_DENSITY: f64 = 0.4;
/// Disc area over workspace area used by the no-overlap benchmarks.
pub const NO_OVERLAP_DENSITY: f64 = 0.1;

/// Square workspace whose area is `1 / density` times the area of `2n` discs.
pub fn workspace_for(n: usize, r: f64, density: f64) -> Rect {
    let area = (2 * n.max(1)) as f64 * std::f64::consts::PI * r * r / density;
    let side = area.sqrt().max(4.0 * r);
    Rect::new(0.0, 0.0, side, side)
}

/// Labeled instance with no start overlapping any goal: `2n` disjoint
/// discs, the first `n` are starts. Rest poses sit at the workspace corners.
pub fn gen_no_overlap(n: usize, seed: u64, workspace: Rect, r: f64) -> Result<Instance> {
    check_geometry(&workspace, r)?;
    let mut rng = rng_for(seed);
    let mut pts = sample_disjoint(&mut rng, 2 * n, &workspace, r)?;
    let goals = pts.split_off(n);
    corner_instance(pts, goals, workspace, r)
}

/// `n` uniform points in `workspace`, pairwise at least `min_sep` apart.
pub fn random_points(n: usize, seed: u64, workspace: Rect, min_sep: f64) -> Result<Vec<Point2>> {
    check_geometry(&workspace, min_sep / 2.0)?;
    sample_disjoint(&mut rng_for(seed), n, &workspace, min_sep / 2.0)
}

/// Random digraph with `floor(avg_deg * n)` distinct arcs, no loops, and
/// total degree at most `max_deg` per vertex.
pub fn gen_dep_graph(n: usize, avg_deg: f64, max_deg: usize, seed: u64) -> Result<DepGraph> {
    if !(avg_deg >= 0.0 && avg_deg.is_finite()) {
        return Err(ToroError::InvalidParameter(format!("average degree must be non-negative, got {avg_deg}")));
    }
    let m = (avg_deg * n as f64 + 1e-9).floor() as usize;
    if m > n * n.saturating_sub(1) || 2 * m > n * max_deg {
        return Err(ToroError::InvalidParameter(format!(
            "{m} arcs do not fit on {n} vertices with total degree <= {max_deg}"
        )));
    }
    let mut rng = rng_for(seed);
    let mut candidates: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    candidates.shuffle(&mut rng);
    let mut present = vec![vec![false; n]; n];
    let mut deg = vec![0usize; n];
    let mut arcs = Vec::with_capacity(m);
    for (a, b) in candidates {
        if arcs.len() == m {
            break;
        }
        if deg[a] < max_deg && deg[b] < max_deg {
            present[a][b] = true;
            deg[a] += 1;
            deg[b] += 1;
            arcs.push((a, b));
        }
    }
    // Greedy can strand spare degree on vertices that are already joined.
    // Swap an existing arc (x, y) for (u, x) and (y, v): x and y keep their
    // degree, u and v gain one each.
    let mut rounds = 0;
    while arcs.len() < m {
        rounds += 1;
        if rounds > 100_000 {
            return Err(ToroError::BudgetExhausted("could not realize the degree sequence".into()));
        }
        let spare: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(max_deg - deg[v])).collect();
        if spare.len() < 2 {
            return Err(ToroError::BudgetExhausted("degree budget exhausted".into()));
        }
        let u = spare[rng.gen_range(0..spare.len())];
        let v = spare[rng.gen_range(0..spare.len())];
        if u == v && max_deg - deg[u] < 2 {
            continue;
        }
        if u != v && !present[u][v] && deg[u] < max_deg && deg[v] < max_deg {
            present[u][v] = true;
            deg[u] += 1;
            deg[v] += 1;
            arcs.push((u, v));
            continue;
        }
        let k = rng.gen_range(0..arcs.len());
        let (x, y) = arcs[k];
        let ok = u != x && y != v && !present[u][x] && !present[y][v] && (u, x) != (y, v);
        if ok {
            present[x][y] = false;
            present[u][x] = true;
            present[y][v] = true;
            arcs.swap_remove(k);
            arcs.push((u, x));
            arcs.push((y, v));
            deg[u] += 1;
            deg[v] += 1;
        }
    }
    arcs.sort_unstable();
    DepGraph::from_arcs(n, &arcs)
}

/// Labeled instance with overlaps. Starts are sampled as in
/// [`gen_no_overlap`]; each goal is then chosen among candidates near other
/// objects' starts (plus uniform ones) so that the number of starts it
/// covers tracks `target_avg_deg` arcs per object. A goal never overlaps its
/// own start or another goal.
pub fn gen_overlap(n: usize, seed: u64, target_avg_deg: f64, workspace: Rect, r: f64) -> Result<Instance> {
    check_geometry(&workspace, r)?;
    if !(target_avg_deg >= 0.0 && target_avg_deg.is_finite()) {
        return Err(ToroError::InvalidParameter("target degree must be non-negative".into()));
    }
    let mut rng = rng_for(seed);
    let starts = sample_disjoint(&mut rng, n, &workspace, r)?;
    let target_total = (target_avg_deg * n as f64).round() as usize;
    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&k| k != j && dist(starts[k], starts[j]) < 4.0 * r).collect())
        .collect();
    let mut goals: Vec<Point2> = Vec::with_capacity(n);
    let mut arcs_so_far = 0usize;
    for i in 0..n {
        let left = n - i;
        let want = (target_total.saturating_sub(arcs_so_far) as f64 / left as f64).round() as usize;
        let mut best: Option<(usize, Point2)> = None;
        let mut tries = 0;
        // keep looking longer while the best candidate misses the target
        while best.is_none() || tries < GOAL_CANDIDATES || (best.unwrap().0 > 0 && tries < 8 * GOAL_CANDIDATES) {
            tries += 1;
            if tries > ATTEMPTS_PER_DISC {
                return Err(ToroError::BudgetExhausted(format!("no feasible goal for object {i}")));
            }
            let near = n > 1 && want > 0 && rng.gen_bool(0.75);
            let c = if near {
                // prefer anchors with enough neighbors to reach `want`
                let rich: Vec<usize> =
                    (0..n).filter(|&j| j != i && neighbors[j].iter().filter(|&&k| k != i).count() + 1 >= want).collect();
                let pool: Vec<usize> = if rich.is_empty() { (0..n).filter(|&j| j != i).collect() } else { rich };
                let j = pool[rng.gen_range(0..pool.len())];
                // aim at the centroid of `want` nearby starts
                let mut group = vec![starts[j]];
                let mut near_j: Vec<Point2> =
                    neighbors[j].iter().filter(|&&k| k != i).map(|&k| starts[k]).collect();
                near_j.shuffle(&mut rng);
                group.extend(near_j.into_iter().take(want - 1));
                let cx = group.iter().map(|p| p.x).sum::<f64>() / group.len() as f64;
                let cy = group.iter().map(|p| p.y).sum::<f64>() / group.len() as f64;
                let ang = rng.gen_range(0.0..std::f64::consts::TAU);
                let rad = (if group.len() == 1 { 2.0 } else { 0.6 }) * r * rng.gen::<f64>().sqrt();
                Point2::new(cx + rad * ang.cos(), cy + rad * ang.sin())
            } else {
                uniform_center(&mut rng, &workspace, r)
            };
            if !workspace.contains_disc(c, r) || !clear_of(c, &goals, r) || !clear_of(c, &[starts[i]], r) {
                continue;
            }
            // keep clear of exact tangency with any start
            if starts.iter().any(|s| (dist(c, *s) - 2.0 * r).abs() < 1e-6) {
                continue;
            }
            let covered = starts.iter().enumerate().filter(|&(j, s)| j != i && dist(c, *s) < 2.0 * r).count();
            let score = covered.abs_diff(want);
            if best.map_or(true, |(b, _)| score < b) {
                best = Some((score, c));
            }
            if score == 0 && tries >= 1 {
                break;
            }
        }
        let (_, c) = best.unwrap();
        arcs_so_far += starts.iter().enumerate().filter(|&(j, s)| j != i && dist(c, *s) < 2.0 * r).count();
        goals.push(c);
    }
    corner_instance(starts, goals, workspace, r)
}

/// Instance built from a point set: `points[0]` becomes both rest poses and
/// every other point `p_i` splits into a start `epsilon / 2` to its left and
/// a goal `epsilon / 2` to its right. Disc radius is `epsilon / 4`.
pub fn reduce_tsp_to_toro_no(points: &[Point2], epsilon: f64) -> Result<Instance> {
    if points.is_empty() {
        return Err(ToroError::InvalidParameter("need at least the rest point".into()));
    }
    let n = points.len() - 1;
    if !(epsilon > 0.0) || (n > 0 && epsilon >= 1.0 / (4.0 * n as f64)) {
        return Err(ToroError::InvalidParameter(format!(
            "epsilon must lie in (0, 1/(4n)) = (0, {}), got {epsilon}",
            if n > 0 { 1.0 / (4.0 * n as f64) } else { f64::INFINITY }
        )));
    }
    for a in 0..points.len() {
        for b in a + 1..points.len() {
            if dist(points[a], points[b]) < 2.0 * epsilon {
                return Err(ToroError::InvalidParameter(format!("points {a} and {b} are closer than 2 epsilon")));
            }
        }
    }
    let r = epsilon / 4.0;
    let half = epsilon / 2.0;
    let starts: Vec<Point2> = points[1..].iter().map(|p| Point2::new(p.x - half, p.y)).collect();
    let goals: Vec<Point2> = points[1..].iter().map(|p| Point2::new(p.x + half, p.y)).collect();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo_x = lo_x.min(p.x);
        lo_y = lo_y.min(p.y);
        hi_x = hi_x.max(p.x);
        hi_y = hi_y.max(p.y);
    }
    let ws = Rect::new(lo_x - 1.0, lo_y - 1.0, hi_x + 1.0, hi_y + 1.0);
    Instance::new(starts, goals, r, points[0], points[0], true, CostModel::default(), ws)
}

/// The arc-split graph: vertex `v` keeps id `v`; arc `k` of `g.arcs()`
/// becomes object `|V| + k` with arcs `v -> a_k` and `a_k -> w`.
pub fn split_graph(g: &DepGraph) -> DepGraph {
    let n = g.n();
    let arcs = g.arcs();
    let mut split = Vec::with_capacity(2 * arcs.len());
    for (k, &(v, w)) in arcs.iter().enumerate() {
        split.push((v, n + k));
        split.push((n + k, w));
    }
    DepGraph::from_arcs(n + arcs.len(), &split).expect("split arcs are in range")
}

/// Geometric instance whose dependency graph is the arc-split graph of `g`.
///
/// Vertex `v` owns two clusters far apart. Its goal cluster holds `g_v` with
/// the starts of its out-arc objects 1.2r to either side; its start cluster
/// holds `s_v` with the goals of its in-arc objects 1.2r to either side.
/// Neighbors within a cluster overlap the center disc but not each other.
pub fn reduce_fvs_to_toro(g: &DepGraph, r: f64) -> Result<Instance> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ToroError::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let n = g.n();
    if let Some(v) = (0..n).find(|&v| g.out_degree(v) > 2 || g.in_degree(v) > 2) {
        return Err(ToroError::InvalidParameter(format!("vertex {v} has in- or out-degree above 2")));
    }
    let arcs = g.arcs();
    let m = arcs.len();
    let spacing = 10.0 * r;
    let height = 10.0 * r;
    let goal_center = |v: usize| Point2::new(v as f64 * spacing, 0.0);
    let start_center = |v: usize| Point2::new(v as f64 * spacing, height);
    let offsets = [-1.2 * r, 1.2 * r];
    let mut starts = vec![Point2::new(0.0, 0.0); n + m];
    let mut goals = vec![Point2::new(0.0, 0.0); n + m];
    let mut out_used = vec![0usize; n];
    let mut in_used = vec![0usize; n];
    for v in 0..n {
        starts[v] = start_center(v);
        goals[v] = goal_center(v);
    }
    for (k, &(v, w)) in arcs.iter().enumerate() {
        let gc = goal_center(v);
        starts[n + k] = Point2::new(gc.x + offsets[out_used[v]], gc.y);
        out_used[v] += 1;
        let sc = start_center(w);
        goals[n + k] = Point2::new(sc.x + offsets[in_used[w]], sc.y);
        in_used[w] += 1;
    }
    let span = n.max(1) as f64 * spacing;
    let ws = Rect::new(-3.0 * r, -3.0 * r, span + 3.0 * r, height + 3.0 * r);
    let inst = corner_instance(starts, goals, ws, r)?;
    let realized = build_dep_graph(&inst)?;
    if realized.arcs() != split_graph(g).arcs() || !realized.forced_vertices().is_empty() {
        return Err(ToroError::Solver("constructed instance does not realize the split graph".into()));
    }
    Ok(inst)
}
