use std::path::Path;
use std::process::{Command, Output};

use slaprp::cli::{BenchReport, SolutionFile};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slaprp")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn manifest(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn random(dir: &Path, name: &str, seed: &str) {
    let o = run(dir, &["generate", "random", "--aisles", "2", "--bays", "3", "--skus", "4", "--orders", "3", "--fixed", "1", "--seed", seed, "--out", name]);
    assert_eq!(code(&o), 0, "{o:?}");
}

#[test]
fn generate_silva_and_guo() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["generate", "silva", "--aisles", "3", "--bays", "5", "--orders", "10", "--order-size", "5", "--seed", "7"];
    let m = manifest(&run(dir.path(), &args));
    assert_eq!(m["skus"], 30);
    let again = manifest(&run(dir.path(), &args));
    assert_eq!(m["hash"], again["hash"]);

    let m = manifest(&run(dir.path(), &["generate", "guo", "--alpha", "0.3", "--orders", "100", "--seed", "1"]));
    assert_eq!(m["free_skus"], 24);

    let bad = run(dir.path(), &["generate", "silva", "--aisles", "4", "--bays", "5", "--orders", "10", "--order-size", "5"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn solve_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    random(d, "a.json", "4");
    let o = run(d, &["solve", "a.json", "--policy", "return"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("status       optimal"));
    let o = run(d, &["validate", "a.json", "a.return.sol.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let mut sol: SolutionFile = serde_json::from_str(&std::fs::read_to_string(d.join("a.return.sol.json")).unwrap()).unwrap();
    sol.total += 2;
    std::fs::write(d.join("bad.json"), sol.to_json()).unwrap();
    let o = run(d, &["validate", "a.json", "bad.json"]);
    assert_ne!(code(&o), 0);
    assert!(stdout(&o).contains("total mismatch"));

    let json = run(d, &["solve", "a.json", "--json", "--branching", "location", "--no-symmetry", "--out", "b.sol.json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["status"], "optimal");
    assert_eq!(run(d, &["solve", "missing.json"]).status.code(), Some(2));
    assert_eq!(run(d, &["solve", "a.json", "--set", "nonsense=1"]).status.code(), Some(2));
}

#[test]
fn fixed_assignment_violation_is_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    random(d, "a.json", "9");
    assert_eq!(code(&run(d, &["solve", "a.json", "--policy", "midpoint", "--out", "s.json"])), 0);
    let inst: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("a.json")).unwrap()).unwrap();
    let fixed_sku = inst["fixed"][0][0].as_u64().unwrap() as u32;
    let mut sol: SolutionFile = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    let i = sol.assignment.iter().position(|a| a.0 == fixed_sku).unwrap();
    let j = (0..sol.assignment.len()).find(|&j| sol.assignment[j].1 != sol.assignment[i].1).unwrap();
    let (li, lj) = (sol.assignment[i].1, sol.assignment[j].1);
    sol.assignment[i].1 = lj;
    sol.assignment[j].1 = li;
    std::fs::write(d.join("s.json"), sol.to_json()).unwrap();
    let o = run(d, &["validate", "a.json", "s.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("fixed assignment violated"));
}

#[test]
fn time_limit_reports_gap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let gen = run(d, &["generate", "silva", "--aisles", "5", "--bays", "10", "--orders", "10", "--order-size", "5", "--seed", "1", "--out", "big.json"]);
    assert_eq!(code(&gen), 0);
    let o = run(d, &["solve", "big.json", "--time-limit", "1", "--json"]);
    assert_eq!(code(&o), 3, "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["stats"]["gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    random(d, "a.json", "2");
    assert_eq!(code(&run(d, &["export", "a.json", "--formulation", "mcf", "--out", "m.lp"])), 0);
    assert!(std::fs::read_to_string(d.join("m.lp")).unwrap().contains("gflow_"));
    assert!(d.join("m.lp.manifest.json").exists());

    assert_eq!(code(&run(d, &["export", "a.json", "--formulation", "largestgap", "--big-m", "--out", "g.lp"])), 0);
    assert!(!std::fs::read_to_string(d.join("g.lp")).unwrap().contains("->"));
    assert_eq!(code(&run(d, &["export", "a.json", "--formulation", "return", "--format", "mps", "--out", "r.mps"])), 0);

    run(d, &["generate", "guo", "--alpha", "0.2", "--orders", "50", "--out", "guo.json"]);
    let o = run(d, &["export", "guo.json", "--formulation", "sshape", "--out", "x.lp"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bench_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir(d.join("set")).unwrap();
    for s in ["1", "2", "3"] {
        random(&d.join("set"), &format!("i{s}.json"), s);
    }
    let args = ["bench", "set", "--policies", "return,optimal", "--no-timing", "--jobs", "2", "--out", "r1"];
    assert_eq!(code(&run(d, &args)), 0);
    let csv = std::fs::read_to_string(d.join("r1.csv")).unwrap();
    let rep = BenchReport::from_csv(&csv).unwrap();
    assert_eq!(rep.rows.len(), 6);
    assert_eq!(rep.groups.len(), 2);
    assert!(d.join("r1.md").exists() && d.join("r1.json").exists());

    let mut args2 = args;
    args2[8] = "r2";
    run(d, &args2);
    assert_eq!(std::fs::read(d.join("r2.csv")).unwrap(), csv.as_bytes());
    assert_eq!(std::fs::read(d.join("r2.json")).unwrap(), std::fs::read(d.join("r1.json")).unwrap());

    let o = run(d, &["bench", "set", "--bounds", "--out", "b"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("| LP | LP-MCF | DW | DW+SL1 | DW+SL |"));
}
