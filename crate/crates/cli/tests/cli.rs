use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn toro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toro")).args(args).env_remove("TORO_SEED").output().unwrap()
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &TempDir, name: &str) -> String {
    let p: PathBuf = dir.path().join(name);
    p.display().to_string()
}

#[test]
fn swap_fixture_needs_one_buffer_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let plan = path(&dir, "plan.json");
    let o = toro(&["solve", "--instance", &fixture("swap.json"), "--algo", "fvs-single", "--out", &plan]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("actions: 3, buffers: 1"), "{}", stdout(&o));
    assert!(stdout(&o).contains("total cost:"));
    let v = toro(&["validate", "--instance", &fixture("swap.json"), "--plan", &plan]);
    assert_eq!(v.status.code(), Some(0), "{}", String::from_utf8_lossy(&v.stderr));
}

#[test]
fn plan_without_buffer_is_rejected() {
    let dir = TempDir::new().unwrap();
    let plan = path(&dir, "bad.json");
    std::fs::write(
        &plan,
        r#"{"actions": [
            {"object": 0, "pick": [0.0, 0.0], "place": [0.0, 3.0], "kind": "goal"},
            {"object": 1, "pick": [1.6, 3.0], "place": [1.6, 0.0], "kind": "goal"}]}"#,
    )
    .unwrap();
    let v = toro(&["validate", "--instance", &fixture("swap.json"), "--plan", &plan]);
    assert_eq!(v.status.code(), Some(3));
}

#[test]
fn usage_and_input_errors() {
    let o = toro(&["solve", "--instance", &fixture("swap.json"), "--algo", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = toro(&["solve", "--instance", &fixture("swap.json"), "--fvs", "nope"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.json");
    std::fs::write(&bad, "{\n  \"radius\": 1.0,\n  \"objects\": [\n").unwrap();
    let o = toro(&["validate", "--instance", &bad]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line"));

    let missing = path(&dir, "missing_field.json");
    std::fs::write(&missing, r#"{"radius": 1.0, "objects": []}"#).unwrap();
    let o = toro(&["validate", "--instance", &missing]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("workspace"));

    // overlapping instance through the tour planner
    let o = toro(&["solve", "--instance", &fixture("swap.json"), "--algo", "no-tsp"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solver_limit_exits_four() {
    let dir = TempDir::new().unwrap();
    let inst = path(&dir, "big.json");
    assert!(toro(&["gen", "overlap", "--n", "40", "--avg-deg", "2", "--out", &inst]).status.success());
    let o = toro(&["solve", "--instance", &inst, "--fvs", "brute"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn generated_instances_solve_and_validate() {
    let dir = TempDir::new().unwrap();
    let cases: &[(&str, &[&str], &[&str])] = &[
        ("no-overlap", &[], &["no-tsp", "fvs-single"]),
        ("tsp-reduce", &[], &["no-tsp"]),
        ("overlap", &[], &["fvs-single", "optimal", "feasible"]),
        // the reduction needs in- and out-degree at most 2
        ("fvs-reduce", &["--max-deg", "2"], &["fvs-single"]),
    ];
    for (kind, extra, algos) in cases {
        let inst = path(&dir, &format!("{kind}.json"));
        let mut args = vec!["gen", kind, "--n", "6", "--seed", "5", "--out", &inst];
        args.extend_from_slice(extra);
        let g = toro(&args);
        assert!(g.status.success(), "{kind}: {}", String::from_utf8_lossy(&g.stderr));
        for algo in *algos {
            let plan = path(&dir, &format!("{kind}-{algo}.plan.json"));
            let s = toro(&["solve", "--instance", &inst, "--algo", algo, "--fvs", "mdh", "--out", &plan]);
            assert!(s.status.success(), "{kind}/{algo}: {}", String::from_utf8_lossy(&s.stderr));
            let v = toro(&["validate", "--instance", &inst, "--plan", &plan]);
            assert_eq!(v.status.code(), Some(0), "{kind}/{algo}");
        }
    }
}

#[test]
fn generation_is_seeded() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (path(&dir, "a"), path(&dir, "b"), path(&dir, "c"));
    toro(&["gen", "depgraph", "--n", "12", "--avg-deg", "2", "--seed", "9", "--out", &a]);
    let o = Command::new(env!("CARGO_BIN_EXE_toro"))
        .args(["gen", "depgraph", "--n", "12", "--avg-deg", "2", "--out", &b])
        .env("TORO_SEED", "9")
        .output()
        .unwrap();
    assert!(o.status.success());
    toro(&["gen", "depgraph", "--n", "12", "--avg-deg", "2", "--seed", "10", "--out", &c]);
    let read = |p: &str| std::fs::read_to_string(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(read(&a).starts_with("12 24\n"));
}

#[test]
fn plot_empty_instance_has_only_rest_markers() {
    let dir = TempDir::new().unwrap();
    let svg = path(&dir, "empty.svg");
    assert!(toro(&["plot", "--instance", &fixture("empty.json"), "--out", &svg]).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let classes: Vec<&str> = doc.descendants().filter_map(|n| n.attribute("class")).collect();
    assert_eq!(classes, ["rest", "rest"]);
}

#[test]
fn plot_with_plan_is_well_formed() {
    let dir = TempDir::new().unwrap();
    let (inst, plan, svg) = (path(&dir, "i.json"), path(&dir, "p.json"), path(&dir, "p.svg"));
    toro(&["gen", "overlap", "--n", "7", "--avg-deg", "1.5", "--seed", "2", "--out", &inst]);
    assert!(toro(&["solve", "--instance", &inst, "--out", &plan]).status.success());
    assert!(toro(&["plot", "--instance", &inst, "--plan", &plan, "--out", &svg]).status.success());
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let count = |c: &str| doc.descendants().filter(|n| n.attribute("class") == Some(c)).count();
    assert_eq!(count("start"), 7);
    assert_eq!(count("goal"), 7);
    assert_eq!(count("path"), 1);
    assert!(count("pick") >= 7);
    assert!(count("dep") >= 1);
}

#[test]
fn bench_csv_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let strip = |p: &str| -> Vec<String> {
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        lines
            .map(|l| {
                l.split(',')
                    .zip(&header)
                    .filter(|(_, h)| !h.contains("time"))
                    .map(|(v, _)| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };
    let suites: &[&[&str]] = &[
        &["no", "--sizes", "3,6", "--trials", "4"],
        &["fvs", "--sizes", "8", "--trials", "3"],
        &["fvs-count", "--sizes", "8", "--avg-deg", "1,2", "--trials", "3"],
        &["toro", "--sizes", "5", "--avg-deg", "1", "--trials", "2", "--methods", "ilp-e"],
    ];
    for args in suites {
        let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
        for (out, jobs) in [(&a, "1"), (&b, "2")] {
            let mut full: Vec<&str> = vec!["bench"];
            full.extend_from_slice(args);
            full.extend_from_slice(&["--seed", "4", "--jobs", jobs, "--out", out]);
            let o = toro(&full);
            assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.starts_with("# seed: 4\n"));
        assert!(text.contains("# hardware:"));
        assert_eq!(strip(&a), strip(&b), "{args:?}");
        assert!(!strip(&a).is_empty());
    }
}
