//! `toro` command-line tool: generate, validate, solve, bench and plot.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use toro::bench;
use toro::depgraph::{build_dep_graph, DepGraph};
use toro::fvs::{solve_fvs, FvsMethod};
use toro::generators::{
    gen_dep_graph, gen_no_overlap, gen_overlap, random_points, reduce_fvs_to_toro, reduce_tsp_to_toro_no, workspace_for,
    NO_OVERLAP_DENSITY, OVERLAP_DENSITY,
};
use toro::model::{check_plan, plan_cost};
use toro::planner::{feasible_plan, toro_fvs_single, toro_no_tsp, toro_optimal};
use toro::{Instance, Plan, Rect, ToroError};

const EXIT_INPUT: u8 = 3;
const EXIT_SOLVER: u8 = 4;

#[derive(Parser)]
#[command(name = "toro", version, about = "Tabletop rearrangement planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance or dependency graph.
    Gen(GenArgs),
    /// Check an instance and optionally a plan against it.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Plan an instance and print its cost breakdown.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::FvsSingle)]
        algo: Algo,
        /// Feedback vertex set method: ilp-c, ilp-e, msch, mch, mdh or brute.
        #[arg(long, default_value = "ilp-e")]
        fvs: FvsMethod,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment suite and write CSV.
    Bench(BenchArgs),
    /// Draw an instance, and a plan if given, as SVG.
    Plot {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    NoTsp,
    FvsSingle,
    Optimal,
    Feasible,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    NoOverlap,
    Overlap,
    Depgraph,
    TspReduce,
    FvsReduce,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "TORO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    /// Target average degree (overlap, depgraph, fvs-reduce).
    #[arg(long, default_value_t = 1.0)]
    avg_deg: f64,
    /// Maximum total degree (depgraph, fvs-reduce).
    #[arg(long, default_value_t = 4)]
    max_deg: usize,
    /// Reduction margin for tsp-reduce; defaults to 1/(8n).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Reduce this graph file instead of a random one (fvs-reduce).
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    No,
    Fvs,
    FvsCount,
    Toro,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Object or vertex counts.
    #[arg(long, value_delimiter = ',', default_value = "10,50,100")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, env = "TORO_SEED", default_value_t = 0)]
    seed: u64,
    /// Unique objects (no suite only).
    #[arg(long)]
    labeled: bool,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    avg_deg: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    max_deg: usize,
    /// FVS methods for the fvs suite, or the single method for toro.
    #[arg(long, value_delimiter = ',', default_value = "ilp-c,ilp-e,msch,mch,mdh")]
    methods: Vec<FvsMethod>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(e: &ToroError) -> u8 {
    match e {
        ToroError::Solver(_)
        | ToroError::Timeout(_)
        | ToroError::Infeasible(_)
        | ToroError::BudgetExhausted(_)
        | ToroError::TooLarge(_)
        | ToroError::CycleCapExceeded(_) => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

fn write_file(path: &Path, text: &str) -> toro::Result<()> {
    fs::write(path, text).map_err(|e| ToroError::Io(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> toro::Result<Instance> {
    Instance::load(path).map_err(|e| with_path(e, path))
}

fn load_plan(path: &Path) -> toro::Result<Plan> {
    Plan::load(path).map_err(|e| with_path(e, path))
}

fn with_path(e: ToroError, path: &Path) -> ToroError {
    match e {
        ToroError::Parse(m) => ToroError::Parse(format!("{}: {m}", path.display())),
        ToroError::InvalidInstance(m) => ToroError::InvalidInstance(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn gen(a: &GenArgs) -> toro::Result<()> {
    let text = match a.kind {
        GenKind::NoOverlap => {
            gen_no_overlap(a.n, a.seed, workspace_for(a.n, a.radius, NO_OVERLAP_DENSITY), a.radius)?.to_json()
        }
        GenKind::Overlap => {
            gen_overlap(a.n, a.seed, a.avg_deg, workspace_for(a.n, a.radius, OVERLAP_DENSITY), a.radius)?.to_json()
        }
        GenKind::Depgraph => gen_dep_graph(a.n, a.avg_deg, a.max_deg, a.seed)?.to_text(),
        GenKind::TspReduce => {
            // first point is the rest pose, the other n become objects
            let side = 10.0 * ((a.n + 1) as f64).sqrt();
            let pts = random_points(a.n + 1, a.seed, Rect::new(0.0, 0.0, side, side), 1.0)?;
            let eps = a.epsilon.unwrap_or(1.0 / (8.0 * a.n.max(1) as f64));
            reduce_tsp_to_toro_no(&pts, eps)?.to_json()
        }
        GenKind::FvsReduce => {
            let g = match &a.graph {
                Some(p) => DepGraph::from_text(
                    &fs::read_to_string(p).map_err(|e| ToroError::Io(format!("{}: {e}", p.display())))?,
                )
                .map_err(|e| with_path(e, p))?,
                None => gen_dep_graph(a.n, a.avg_deg, a.max_deg, a.seed)?,
            };
            reduce_fvs_to_toro(&g, a.radius)?.to_json()
        }
    };
    write_file(&a.out, &text)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn validate(instance: &Path, plan: Option<&Path>) -> toro::Result<()> {
    let inst = load_instance(instance)?;
    let arcs = build_dep_graph(&inst).map(|g| g.arc_count().to_string()).unwrap_or_else(|_| "n/a".into());
    println!(
        "instance ok: {} objects, {}, {}, dependency arcs: {arcs}",
        inst.n(),
        if inst.labeled { "labeled" } else { "unlabeled" },
        if inst.is_non_overlapping() { "non-overlapping" } else { "overlapping" }
    );
    if let Some(p) = plan {
        let plan = load_plan(p)?;
        check_plan(&plan, &inst).map_err(|v| ToroError::InvalidPlan(v.to_string()))?;
        println!("plan ok: {} actions, {} buffers", plan.grasps(), plan.buffers_used);
    }
    Ok(())
}

fn solve(instance: &Path, algo: Algo, method: FvsMethod, out: Option<&Path>) -> toro::Result<()> {
    let inst = load_instance(instance)?;
    let plan = match algo {
        Algo::NoTsp => toro_no_tsp(&inst)?,
        Algo::FvsSingle => toro_fvs_single(&inst, method)?,
        Algo::Optimal => toro_optimal(&inst)?.plan,
        Algo::Feasible => feasible_plan(&inst, &solve_fvs(&build_dep_graph(&inst)?, method)?.vertices)?,
    };
    let cost = plan_cost(&plan, &inst)?;
    println!("actions: {}, buffers: {}", plan.grasps(), plan.buffers_used);
    println!("grasp/release cost: {:.6}", cost.grasp_release_total);
    println!("travel distance: {:.6}", cost.travel.distance());
    println!("move cost: {:.6}", cost.move_total);
    println!("total cost: {:.6}", cost.total);
    if let Some(path) = out {
        write_file(path, &plan.to_json(Some(cost.total)))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_bench(a: &BenchArgs) -> toro::Result<()> {
    let mut meta: Vec<(&str, String)> = vec![
        ("seed", a.seed.to_string()),
        ("trials", a.trials.to_string()),
        ("jobs", a.jobs.to_string()),
    ];
    let csv = match a.suite {
        Suite::No => {
            meta.push(("suite", format!("no-overlap, {}", if a.labeled { "labeled" } else { "unlabeled" })));
            bench::csv_string(&meta, &bench::run_no_bench(&a.sizes, a.trials, a.seed, a.labeled, a.jobs)?)?
        }
        Suite::Fvs => {
            let avg = *a.avg_deg.first().unwrap_or(&2.0);
            meta.push(("suite", format!("fvs, avg degree {avg}, max degree {}", a.max_deg)));
            let rows = bench::run_fvs_bench(&a.sizes, avg, a.max_deg, a.trials, &a.methods, a.seed, a.jobs)?;
            bench::csv_string(&meta, &rows)?
        }
        Suite::FvsCount => {
            meta.push(("suite", format!("fvs-count, cap {}", bench::COUNT_CAP)));
            bench::csv_string(&meta, &bench::run_fvs_count_bench(&a.sizes, &a.avg_deg, a.trials, a.seed, a.jobs)?)?
        }
        Suite::Toro => {
            let method = *a.methods.first().unwrap_or(&FvsMethod::IlpEnumerate);
            meta.push(("suite", format!("toro, fvs method {method}")));
            let rows = bench::run_toro_bench(&a.sizes, &a.avg_deg, a.trials, method, a.seed, a.jobs)?;
            bench::csv_string(&meta, &rows)?
        }
    };
    write_file(&a.out, &csv)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn plot(instance: &Path, plan: Option<&Path>, out: &Path) -> toro::Result<()> {
    let inst = load_instance(instance)?;
    let plan = plan.map(load_plan).transpose()?;
    write_file(out, &plot::render_svg(&inst, plan.as_ref()))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Validate { instance, plan } => validate(instance, plan.as_deref()),
        Command::Solve { instance, algo, fvs, out } => solve(instance, *algo, *fvs, out.as_deref()),
        Command::Bench(a) => run_bench(a),
        Command::Plot { instance, plan, out } => plot(instance, plan.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
