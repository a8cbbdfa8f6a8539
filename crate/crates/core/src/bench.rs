//! Experiment harness. Each suite generates instances from a base seed,
//! runs the solvers and reports one CSV row per parameter point. All
//! columns except timings are deterministic for a given seed.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::depgraph::build_dep_graph;
use crate::error::{Result, ToroError};
use crate::fvs::{enumerate_optimal_fvs, solve_fvs, FvsMethod, FvsOptions};
use crate::generators::{gen_dep_graph, gen_no_overlap, gen_overlap, workspace_for, OVERLAP_DENSITY};
use crate::geometry::Rect;
use crate::model::{plan_cost, Action, Instance, PlaceKind, Plan};
use crate::planner::{min_dist_plan, toro_fvs_single_report, toro_no_tsp};

/// Disc radius used by every generated benchmark instance.
pub const BENCH_RADIUS: f64 = 0.5;
/// Table for the no-overlap suite; 200 discs of radius 0.5 cover about 3%.
pub const NO_BENCH_WORKSPACE: Rect = Rect::new(0.0, 0.0, 100.0, 100.0);
/// Cap on optimal sets counted per graph.
pub const COUNT_CAP: usize = 1000;

/// Mixes a base seed with the trial coordinates (splitmix64).
pub fn trial_seed(base: u64, n: usize, trial: usize) -> u64 {
    let mut z = base
        .wrapping_add((n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((trial as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Median wall time of three runs, with the first run's output.
fn timed<T>(mut f: impl FnMut() -> T) -> (T, f64) {
    let mut times = Vec::with_capacity(3);
    let mut first = None;
    for _ in 0..3 {
        let clock = Instant::now();
        let out = f();
        times.push(clock.elapsed().as_secs_f64());
        first.get_or_insert(out);
    }
    times.sort_by(f64::total_cmp);
    (first.unwrap(), times[1])
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Runs `f` over `items` on `jobs` workers, keeping input order.
fn run_parallel<I: Sync, T: Send>(jobs: usize, items: &[I], f: impl Fn(&I) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ToroError::Solver(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

/// A random order (and, for unlabeled instances, a random matching of
/// starts to goals) turned into a plan.
pub fn random_baseline_plan(inst: &Instance, seed: u64) -> Result<Plan> {
    if !inst.is_non_overlapping() {
        return Err(ToroError::OverlappingInstance);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.shuffle(&mut rng);
    let mut targets = order.clone();
    if !inst.labeled {
        targets.shuffle(&mut rng);
    }
    let actions = order
        .iter()
        .zip(&targets)
        .map(|(&i, &j)| Action { object: i, pick: inst.start_pose(i), place: inst.goal_pose(j), kind: PlaceKind::Goal })
        .collect();
    Ok(Plan::new(actions))
}

/// Cost ratio of two plans: full cost when both use the same number of
/// actions, travel distance otherwise.
pub fn plan_ratio(candidate: &Plan, reference: &Plan, inst: &Instance) -> Result<f64> {
    let (num, den) = if candidate.grasps() == reference.grasps() {
        (plan_cost(candidate, inst)?.total, plan_cost(reference, inst)?.total)
    } else {
        (candidate.distance(inst), reference.distance(inst))
    };
    Ok(if den == 0.0 { 1.0 } else { num / den })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoBenchRow {
    pub n: usize,
    pub labeled: bool,
    pub trials: usize,
    pub mean_time: f64,
    pub mean_opt_cost: f64,
    pub mean_random_ratio: f64,
}

/// Instance of the no-overlap suite for one trial seed.
pub fn no_bench_instance(n: usize, labeled: bool, trial_seed: u64) -> Result<Instance> {
    let mut inst = gen_no_overlap(n, trial_seed, NO_BENCH_WORKSPACE, BENCH_RADIUS)?;
    inst.labeled = labeled;
    Ok(inst)
}

/// Optimal cost and random-to-optimal ratio for one trial.
pub fn score_against_random(inst: &Instance, plan: &Plan, trial_seed: u64) -> Result<(f64, f64)> {
    let random = random_baseline_plan(inst, trial_seed ^ 0x5EED)?;
    Ok((plan_cost(plan, inst)?.total, plan_ratio(&random, plan, inst)?))
}

/// Tour planner against the random baseline on no-overlap instances.
pub fn run_no_bench(sizes: &[usize], trials: usize, seed: u64, labeled: bool, jobs: usize) -> Result<Vec<NoBenchRow>> {
    let mut rows = Vec::new();
    for &n in sizes {
        let ids: Vec<usize> = (0..trials).collect();
        let results = run_parallel(jobs, &ids, |&t| -> Result<(f64, f64, f64)> {
            let s = trial_seed(seed, n, t);
            let inst = no_bench_instance(n, labeled, s)?;
            let (plan, secs) = timed(|| toro_no_tsp(&inst));
            let (cost, ratio) = score_against_random(&inst, &plan?, s)?;
            Ok((secs, cost, ratio))
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        rows.push(NoBenchRow {
            n,
            labeled,
            trials,
            mean_time: mean(&results.iter().map(|r| r.0).collect::<Vec<_>>()),
            mean_opt_cost: mean(&results.iter().map(|r| r.1).collect::<Vec<_>>()),
            mean_random_ratio: mean(&results.iter().map(|r| r.2).collect::<Vec<_>>()),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FvsBenchRow {
    pub method: String,
    pub n: usize,
    pub trials: usize,
    pub mean_time: f64,
    pub mean_ratio_to_optimal: f64,
}

/// FVS methods on random dependency graphs; ratio is the set size over the
/// exact minimum (1 when both are empty).
pub fn run_fvs_bench(
    n_list: &[usize],
    avg_deg: f64,
    max_deg: usize,
    trials: usize,
    methods: &[FvsMethod],
    seed: u64,
    jobs: usize,
) -> Result<Vec<FvsBenchRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        let ids: Vec<usize> = (0..trials).collect();
        let per_trial = run_parallel(jobs, &ids, |&t| -> Result<Vec<(f64, f64)>> {
            let g = gen_dep_graph(n, avg_deg, max_deg, trial_seed(seed, n, t))?;
            let best = solve_fvs(&g, FvsMethod::IlpEnumerate)
                .or_else(|_| solve_fvs(&g, FvsMethod::IlpConstraint))?
                .len();
            methods
                .iter()
                .map(|&m| {
                    let (found, secs) = timed(|| solve_fvs(&g, m));
                    let size = found?.len();
                    let ratio = if best == 0 { if size == 0 { 1.0 } else { f64::INFINITY } } else { size as f64 / best as f64 };
                    Ok((secs, ratio))
                })
                .collect()
        })?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (k, &m) in methods.iter().enumerate() {
            rows.push(FvsBenchRow {
                method: m.tag().to_string(),
                n,
                trials,
                mean_time: mean(&per_trial.iter().map(|r| r[k].0).collect::<Vec<_>>()),
                mean_ratio_to_optimal: mean(&per_trial.iter().map(|r| r[k].1).collect::<Vec<_>>()),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FvsCountRow {
    pub n: usize,
    pub avg_deg: f64,
    pub trials: usize,
    pub mean_optimal_fvs_count: f64,
    /// Graphs whose enumeration hit the cap.
    pub capped: usize,
}

/// Number of minimum feedback vertex sets per random graph. Maximum total
/// degree is twice the average, rounded up.
pub fn run_fvs_count_bench(
    n_list: &[usize],
    avg_deg_list: &[f64],
    trials: usize,
    seed: u64,
    jobs: usize,
) -> Result<Vec<FvsCountRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        for &avg in avg_deg_list {
            let max_deg = (2.0 * avg).ceil().max(1.0) as usize;
            let ids: Vec<usize> = (0..trials).collect();
            let counts = run_parallel(jobs, &ids, |&t| -> Result<(usize, bool)> {
                let g = gen_dep_graph(n, avg, max_deg, trial_seed(seed, n, t) ^ avg.to_bits())?;
                let found = enumerate_optimal_fvs(&g, COUNT_CAP)?;
                Ok((found.sets.len(), found.capped))
            })?
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            rows.push(FvsCountRow {
                n,
                avg_deg: avg,
                trials,
                mean_optimal_fvs_count: mean(&counts.iter().map(|c| c.0 as f64).collect::<Vec<_>>()),
                capped: counts.iter().filter(|c| c.1).count(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToroBenchRow {
    pub n: usize,
    pub avg_deg: f64,
    pub trials: usize,
    pub mean_fvs_time: f64,
    pub mean_mindist_time: f64,
    pub mean_total_time: f64,
    pub mean_grasps: f64,
    /// Trials that hit a solver limit; excluded from the means.
    pub failures: usize,
}

/// Instance used by the overlap suites for `(n, avg_deg, seed)`.
pub fn overlap_instance(n: usize, avg_deg: f64, seed: u64) -> Result<Instance> {
    gen_overlap(n, seed, avg_deg, workspace_for(n, BENCH_RADIUS, OVERLAP_DENSITY), BENCH_RADIUS)
}

/// Time split of the single-FVS pipeline on overlap instances.
pub fn run_toro_bench(
    n_list: &[usize],
    avg_deg_list: &[f64],
    trials: usize,
    method: FvsMethod,
    seed: u64,
    jobs: usize,
) -> Result<Vec<ToroBenchRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        for &avg in avg_deg_list {
            let ids: Vec<usize> = (0..trials).collect();
            let results = run_parallel(jobs, &ids, |&t| -> Result<Option<(f64, f64, usize)>> {
                let inst = overlap_instance(n, avg, trial_seed(seed, n, t) ^ avg.to_bits())?;
                let mut fvs_times = Vec::new();
                let mut dist_times = Vec::new();
                let mut grasps = 0;
                for _ in 0..3 {
                    match toro_fvs_single_report(&inst, method, &FvsOptions::default()) {
                        Ok(r) => {
                            fvs_times.push(r.fvs_time.as_secs_f64());
                            dist_times.push(r.mindist_time.as_secs_f64());
                            grasps = r.plan.grasps();
                        }
                        Err(ToroError::BudgetExhausted(_) | ToroError::Timeout(_)) => return Ok(None),
                        Err(e) => return Err(e),
                    }
                }
                fvs_times.sort_by(f64::total_cmp);
                dist_times.sort_by(f64::total_cmp);
                Ok(Some((fvs_times[1], dist_times[1], grasps)))
            })?
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let ok: Vec<(f64, f64, usize)> = results.iter().flatten().copied().collect();
            rows.push(ToroBenchRow {
                n,
                avg_deg: avg,
                trials,
                mean_fvs_time: mean(&ok.iter().map(|r| r.0).collect::<Vec<_>>()),
                mean_mindist_time: mean(&ok.iter().map(|r| r.1).collect::<Vec<_>>()),
                mean_total_time: mean(&ok.iter().map(|r| r.0 + r.1).collect::<Vec<_>>()),
                mean_grasps: mean(&ok.iter().map(|r| r.2 as f64).collect::<Vec<_>>()),
                failures: results.len() - ok.len(),
            });
        }
    }
    Ok(rows)
}

/// Relative spread `(max - min) / min` of shortest-plan distances over all
/// minimum feedback vertex sets of an instance, with the set count.
pub fn optimal_fvs_distance_spread(inst: &Instance, cap: usize) -> Result<(f64, usize)> {
    let g = build_dep_graph(inst)?;
    let found = enumerate_optimal_fvs(&g, cap)?;
    let dists = found
        .sets
        .par_iter()
        .map(|s| Ok(min_dist_plan(inst, &s.vertices)?.distance(inst)))
        .collect::<Result<Vec<f64>>>()?;
    let lo = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((if lo > 0.0 { (hi - lo) / lo } else { 0.0 }, dists.len()))
}

/// Writes rows as CSV after `#`-prefixed metadata lines.
pub fn write_csv<R: Serialize>(out: &mut impl Write, meta: &[(&str, String)], rows: &[R]) -> Result<()> {
    for (k, v) in meta {
        writeln!(out, "# {k}: {v}")?;
    }
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    writeln!(
        out,
        "# hardware: {} {} with {threads} hardware threads; times are wall-clock seconds, median of 3 runs",
        std::env::consts::OS,
        std::env::consts::ARCH
    )?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| ToroError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| ToroError::Io(e.to_string()))?;
    out.write_all(&bytes)?;
    Ok(())
}

/// CSV as a string; see [`write_csv`].
pub fn csv_string<R: Serialize>(meta: &[(&str, String)], rows: &[R]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, meta, rows)?;
    String::from_utf8(buf).map_err(|e| ToroError::Io(e.to_string()))
}

/// Keeps only the deterministic columns of a CSV: drops comment lines and
/// every column whose header contains "time".
pub fn strip_timing(csv_text: &str) -> String {
    let body: String = csv_text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(_) => return String::new(),
    };
    let keep: Vec<usize> = (0..headers.len()).filter(|&k| !headers[k].contains("time")).collect();
    let mut out = keep.iter().map(|&k| headers[k].to_string()).collect::<Vec<_>>().join(",") + "\n";
    for rec in rdr.records().flatten() {
        out += &(keep.iter().map(|&k| rec[k].to_string()).collect::<Vec<_>>().join(",") + "\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_plan;

    #[test]
    fn baseline_single_object_is_optimal() {
        let inst = crate::model::fixtures::single_object();
        let r = random_baseline_plan(&inst, 4).unwrap();
        assert_eq!(r, toro_no_tsp(&inst).unwrap());
    }

    #[test]
    fn baseline_never_beats_tour() {
        for seed in 0..20 {
            for labeled in [true, false] {
                let mut inst = gen_no_overlap(7, seed, Rect::new(0.0, 0.0, 20.0, 20.0), 0.5).unwrap();
                inst.labeled = labeled;
                let base = random_baseline_plan(&inst, seed).unwrap();
                check_plan(&base, &inst).unwrap();
                let opt = toro_no_tsp(&inst).unwrap();
                assert!(plan_cost(&base, &inst).unwrap().total >= plan_cost(&opt, &inst).unwrap().total - 1e-9);
            }
        }
    }

    #[test]
    fn no_bench_single_object_ratio_is_one() {
        let rows = run_no_bench(&[1], 1, 3, false, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_random_ratio, 1.0);
    }

    #[test]
    fn fvs_bench_exact_ratio_one() {
        let rows =
            run_fvs_bench(&[8], 2.0, 4, 5, &[FvsMethod::IlpConstraint, FvsMethod::IlpEnumerate, FvsMethod::Mdh], 1, 2)
                .unwrap();
        assert_eq!(rows[0].mean_ratio_to_optimal, 1.0);
        assert_eq!(rows[1].mean_ratio_to_optimal, 1.0);
        assert!(rows[2].mean_ratio_to_optimal >= 1.0);
        let dag = run_fvs_bench(&[6], 0.0, 4, 2, &FvsMethod::ALL, 1, 1).unwrap();
        assert!(dag.iter().all(|r| r.mean_ratio_to_optimal == 1.0));
    }

    #[test]
    fn count_bench_empty_graphs() {
        let rows = run_fvs_count_bench(&[5], &[0.0], 3, 1, 1).unwrap();
        assert_eq!(rows[0].mean_optimal_fvs_count, 1.0);
    }

    #[test]
    fn csv_is_deterministic_without_timing() {
        let a = run_no_bench(&[3, 5], 4, 9, true, 2).unwrap();
        let b = run_no_bench(&[3, 5], 4, 9, true, 1).unwrap();
        let meta = [("suite", "no".to_string())];
        let (ta, tb) = (csv_string(&meta, &a).unwrap(), csv_string(&meta, &b).unwrap());
        assert!(ta.starts_with("# suite: no\n"));
        assert_eq!(strip_timing(&ta), strip_timing(&tb));
        assert!(strip_timing(&ta).starts_with("n,labeled,trials,mean_opt_cost,mean_random_ratio\n"));
    }

    #[test]
    fn toro_bench_small() {
        let rows = run_toro_bench(&[5], &[1.0], 3, FvsMethod::IlpEnumerate, 2, 1).unwrap();
        assert_eq!(rows[0].failures, 0);
        assert!(rows[0].mean_grasps >= 5.0);
    }
}
