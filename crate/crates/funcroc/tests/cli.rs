use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use funcroc::harness::{IndexKind, StudyReport};
use funcroc::io::write_curves;
use funcroc::core::simulation::{generate_scenario, ScenarioName, ScenarioSpec};

fn funcroc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_funcroc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn curve_file(dir: &Path, name: ScenarioName, seed: u64) -> String {
    let mut spec = ScenarioSpec::new(name, seed).with_sizes(30, 40).with_grid_size(25);
    if name.is_proportional() {
        spec = spec.with_rho(1.0);
    }
    let (d, h) = generate_scenario(&spec).unwrap();
    let path = dir.join("curves.csv");
    write_curves(fs::File::create(&path).unwrap(), &d, &h).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_matches_golden_table() {
    let o = funcroc(&[
        "simulate", "--scenario", "D21", "--nd", "40", "--nh", "40", "--grid-size", "30", "--reps", "5", "--seed", "7",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let golden = include_str!("golden/simulate_d21.txt");
    assert_eq!(stdout(&o), golden);
}

#[test]
fn output_is_independent_of_thread_count() {
    let args = ["simulate", "--scenario", "C11", "--nd", "30", "--nh", "30", "--grid-size", "20", "--reps", "8"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_funcroc"))
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(stdout(&run("1")), stdout(&run("4")));
}

#[test]
fn json_report_parses_back() {
    let o = funcroc(&[
        "simulate", "--scenario", "P1", "--rho", "1", "--nd", "20", "--nh", "20", "--grid-size", "15", "--reps", "3",
        "--indexes", "integral,quad", "--format", "json",
    ]);
    assert!(o.status.success());
    let r: StudyReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.per_index.keys().copied().collect::<Vec<_>>(), vec![IndexKind::Integral, IndexKind::Quad]);
    assert_eq!(r.config.reps, 3);
    assert_eq!(r.seed, Some(0));
}

#[test]
fn exported_replication_curves() {
    let dir = tempfile::tempdir().unwrap();
    let roc = dir.path().join("roc.csv");
    let o = funcroc(&[
        "simulate", "--scenario", "D11", "--nd", "20", "--nh", "20", "--grid-size", "15", "--reps", "2",
        "--indexes", "max,linear", "--p-grid-size", "11", "--export-roc", roc.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&roc).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("replication,index,p,roc"));
    assert_eq!(lines.clone().count(), 2 * 2 * 11);
    assert!(lines.next().unwrap().starts_with("0,max,0,"));
}

#[test]
fn analyze_and_roc_on_a_curve_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = curve_file(dir.path(), ScenarioName::P1, 3);
    let roc = dir.path().join("roc.csv");
    let o = funcroc(&["analyze", "--input", &input, "--indexes", "meandiff,quad", "--export-roc", roc.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    assert!(table.starts_with("input "));
    assert!(table.lines().any(|l| l.starts_with("meandiff")));
    let exported = fs::read_to_string(&roc).unwrap();
    assert_eq!(exported.lines().count(), 1 + 2 * 101);

    let o = funcroc(&["roc", "--input", &input, "--index", "meandiff", "--p-grid-size", "5"]);
    assert!(o.status.success());
    let pairs: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .map(|l| {
            let (p, r) = l.split_once(',').unwrap();
            (p.parse().unwrap(), r.parse().unwrap())
        })
        .collect();
    assert_eq!(pairs.len(), 5);
    assert_eq!(pairs[0], (0.0, 0.0));
    assert_eq!(pairs[4], (1.0, 1.0));
    assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1));
}

#[test]
fn exit_codes() {
    let bad_rho = funcroc(&["simulate", "--scenario", "P0", "--reps", "1"]);
    assert_eq!(bad_rho.status.code(), Some(2));
    let bad_index = funcroc(&["simulate", "--scenario", "D10", "--reps", "1", "--indexes", "nope"]);
    assert_eq!(bad_index.status.code(), Some(2));
    let missing = funcroc(&["analyze", "--input", "/nonexistent/curves.csv"]);
    assert_eq!(missing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "label,0.5,1\nD,1,2\nH,1,NaN\n").unwrap();
    let o = funcroc(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    // three diseased curves cannot support a quadratic fit
    let all_failed = funcroc(&[
        "simulate", "--scenario", "C21", "--nd", "3", "--nh", "30", "--grid-size", "20", "--reps", "2", "--indexes",
        "quad",
    ]);
    assert_eq!(all_failed.status.code(), Some(3));
    assert!(stdout(&all_failed).contains("NA"));
}
