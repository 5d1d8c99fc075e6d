mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::factor_tree_json;
use martpoly::cli::{
    AnalyzeReport, BoundsReport, CompleteReport, KklReport, TreeAnalyzeReport, TreeCompleteReport,
};
use martpoly::exactmath::{parse_rational, parse_vector, ratio};
use martpoly::market::OnePeriodMarket;
use martpoly::multiperiod::{analyze_tree, TreeMarket};
use serde::de::DeserializeOwned;
use tempfile::TempDir;

const EDGE_MIDPOINTS: &str = r#"{"rate": "0", "spot": ["1"], "payoffs": [["2", "0", "0", "0"]]}"#;
const NO_MEASURE: &str = r#"{"rate": "0", "spot": ["15", "123"],
    "payoffs": [["18", "-6", "-6", "75"], ["99", "-33", "-33", "291"]]}"#;
const TRINOMIAL: &str = r#"{"rate": "0", "spot": ["1"], "payoffs": [["1/2", "1", "2"]]}"#;
const NO_ASSETS: &str = r#"{"rate": "0", "spot": [], "payoffs": [], "outcomes": 2}"#;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn martpoly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_martpoly"))
        .args(args)
        .env_remove("MARTPOLY_MAX_OUTCOMES")
        .output()
        .unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn json<T: DeserializeOwned>(out: &Output) -> T {
    assert_eq!(
        code(out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn measures(gens: &[martpoly::cli::GeneratorEntry]) -> Vec<Vec<String>> {
    gens.iter().map(|g| g.measure.clone()).collect()
}

#[test]
fn analyze_three_generator_market() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let r: AnalyzeReport = json(&martpoly(&["analyze", arg(&m), "--json"]));
    assert!(r.viable && !r.complete);
    assert_eq!(
        measures(&r.generators),
        vec![
            vec!["1/2", "1/2", "0", "0"],
            vec!["1/2", "0", "1/2", "0"],
            vec!["1/2", "0", "0", "1/2"]
        ]
    );
    assert_eq!(r.emm_conditions[1], "α1 > 0");
    assert_eq!(r.witness.unwrap(), vec!["1/2", "1/6", "1/6", "1/6"]);
}

#[test]
fn analyze_market_without_measures_still_succeeds() {
    let ws = Workspace::new();
    let m = ws.file("m.json", NO_MEASURE);
    let r: AnalyzeReport = json(&martpoly(&["analyze", arg(&m), "--json"]));
    assert!(!r.viable && !r.complete);
    assert!(r.generators.is_empty());
    assert!(!r.warnings.is_empty());

    let text = martpoly(&["analyze", arg(&m)]);
    assert_eq!(code(&text), 0);
    assert!(String::from_utf8_lossy(&text.stdout).contains("viable: false"));
}

#[test]
fn analyze_market_with_only_the_bond() {
    let ws = Workspace::new();
    let m = ws.file("m.json", NO_ASSETS);
    let r: AnalyzeReport = json(&martpoly(&["analyze", arg(&m), "--json"]));
    assert!(r.viable && !r.complete);
    assert_eq!(
        measures(&r.generators),
        vec![vec!["1", "0"], vec!["0", "1"]]
    );
}

#[test]
fn json_report_round_trips_exactly() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let out = martpoly(&["analyze", arg(&m), "--json"]);
    let r: AnalyzeReport = json(&out);
    let again = serde_json::to_string_pretty(&serde_json::to_value(&r).unwrap()).unwrap();
    assert_eq!(again.trim(), String::from_utf8_lossy(&out.stdout).trim());
    let g = parse_vector(&r.generators[1].measure).unwrap();
    assert_eq!(g[0], ratio(1, 2));
}

#[test]
fn json_keys_are_sorted() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let out = martpoly(&["analyze", arg(&m), "--json"]);
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn generators_with_and_without_pruning() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let a = martpoly(&["generators", arg(&m), "--json"]);
    let b = martpoly(&["generators", arg(&m), "--json", "--no-pruning"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bounds_of_trinomial_claim() {
    let ws = Workspace::new();
    let m = ws.file("m.json", TRINOMIAL);
    let r: BoundsReport = json(&martpoly(&[
        "bounds",
        arg(&m),
        "--payoff",
        "0,0,1",
        "--json",
    ]));
    assert_eq!((r.low.as_str(), r.high.as_str()), ("0", "1/3"));
    assert!(!r.low_attained && !r.high_attained && !r.unique);

    let r: BoundsReport = json(&martpoly(&[
        "bounds",
        arg(&m),
        "--payoff",
        "1/2,1,2",
        "--json",
    ]));
    assert!(r.unique && r.low_attained && r.high_attained);
    assert_eq!(r.low, "1");

    let r: BoundsReport = json(&martpoly(&[
        "bounds",
        arg(&m),
        "--payoff",
        "-1,0,0",
        "--json",
    ]));
    assert_eq!(r.low, "-2/3");
}

#[test]
fn bounds_on_unviable_market_exit_4() {
    let ws = Workspace::new();
    let m = ws.file("m.json", NO_MEASURE);
    let out = martpoly(&["bounds", arg(&m), "--payoff", "1,0,0,0"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not arbitrage-free"));
}

#[test]
fn complete_with_weights_and_apply() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let ext = ws.path("ext.json");
    let r: CompleteReport = json(&martpoly(&[
        "complete",
        arg(&m),
        "--weights",
        "1/3,1/3,1/3",
        "--apply",
        arg(&ext),
        "--json",
    ]));
    assert_eq!(r.plan.prices.unwrap(), vec!["1/6", "1/6"]);
    assert_eq!(
        r.plan.added_payoffs,
        vec![vec!["0", "1", "0", "0"], vec!["0", "0", "1", "0"]]
    );
    assert!(r.extended_complete);
    assert_eq!(
        measures(&r.extended_generators),
        vec![vec!["1/2", "1/6", "1/6", "1/6"]]
    );

    let written = OnePeriodMarket::from_json(&std::fs::read_to_string(ext).unwrap()).unwrap();
    assert_eq!(written.assets(), 3);
    assert_eq!(written.spot()[1], ratio(1, 6));
}

#[test]
fn complete_with_candidate_rows() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let r: CompleteReport = json(&martpoly(&[
        "complete",
        arg(&m),
        "--row",
        "0,1,-1,0",
        "--json",
    ]));
    assert_eq!(r.plan.added_payoffs[0], vec!["0", "1", "-1", "0"]);
    assert_eq!(r.plan.added_payoffs.len(), 2);
    assert!(r.extended_complete);
}

#[test]
fn complete_on_complete_market_is_empty() {
    let ws = Workspace::new();
    let m = ws.file(
        "m.json",
        r#"{"rate": "0", "spot": ["1"], "payoffs": [["1/2", "2"]]}"#,
    );
    let r: CompleteReport = json(&martpoly(&["complete", arg(&m), "--json"]));
    assert!(r.plan.added_payoffs.is_empty());
    assert!(r.extended_complete);
}

#[test]
fn complete_rejects_non_equivalent_weights() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let out = martpoly(&["complete", arg(&m), "--weights", "1,0,0"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("α2 > 0"));
    assert_eq!(
        code(&martpoly(&["complete", arg(&m), "--weights", "1/2,1/2"])),
        2
    );
}

#[test]
fn complete_on_unviable_market_exit_4() {
    let ws = Workspace::new();
    let m = ws.file("m.json", NO_MEASURE);
    assert_eq!(code(&martpoly(&["complete", arg(&m)])), 4);
}

#[test]
fn tree_binomial_is_complete() {
    let ws = Workspace::new();
    let t = ws.file("t.json", &factor_tree_json(4, &[(1, 2), (2, 1)], "0", 2));
    let r: TreeAnalyzeReport = json(&martpoly(&["tree", "analyze", arg(&t), "--json"]));
    assert!(r.viable && r.complete);
    assert_eq!(r.components.len(), 3);
}

#[test]
fn tree_trinomial_gets_four_plans() {
    let ws = Workspace::new();
    let t = ws.file(
        "t.json",
        &factor_tree_json(4, &[(1, 2), (1, 1), (2, 1)], "0", 2),
    );
    let r: TreeAnalyzeReport = json(&martpoly(&["tree", "analyze", arg(&t), "--json"]));
    assert!(r.viable && !r.complete);

    let out = ws.path("done.json");
    let r: TreeCompleteReport = json(&martpoly(&[
        "tree",
        "complete",
        arg(&t),
        "--apply",
        arg(&out),
        "--json",
    ]));
    assert!(!r.complete);
    assert_eq!(r.plans.len(), 4);
    assert_eq!(r.plans[0].time, 0);

    let done = TreeMarket::from_json(&std::fs::read_to_string(out).unwrap()).unwrap();
    let report = analyze_tree(&done).unwrap();
    assert!(report.viable && report.complete);
}

#[test]
fn tree_with_time_gap_exit_2() {
    let ws = Workspace::new();
    let t = ws.file(
        "t.json",
        r#"{"assets": 1, "rates": ["0", "0"], "nodes": [
            {"id": "r", "time": 0, "children": ["a", "b"], "prices": ["1"]},
            {"id": "a", "time": 2, "prices": ["2"]},
            {"id": "b", "time": 1, "prices": ["1/2"]}]}"#,
    );
    let out = martpoly(&["tree", "analyze", arg(&t)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn kkl_writes_put_surface() {
    let ws = Workspace::new();
    let csv = ws.path("surface.csv");
    let r: KklReport = json(&martpoly(&[
        "kkl",
        "--s0",
        "1",
        "--lambda",
        "1/4",
        "--eta",
        "1/4",
        "--rate",
        "0",
        "--horizon",
        "1",
        "--steps",
        "1",
        "--out",
        arg(&csv),
        "--json",
    ]));
    assert!(r.viable);
    assert_eq!(r.put_price.as_deref(), Some("1/4"));
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("t,k,value\n"));
    assert!(text.lines().any(|l| l == "0,1,1/4"));
}

#[test]
fn kkl_reports_unviable_parameters() {
    let r: KklReport = json(&martpoly(&[
        "kkl",
        "--s0",
        "1",
        "--lambda",
        "1/4",
        "--eta",
        "1/4",
        "--rate",
        "1",
        "--horizon",
        "1",
        "--steps",
        "1",
        "--json",
    ]));
    assert!(!r.viable);
    assert!(r.put_price.is_none());
}

#[test]
fn kkl_perturbation() {
    let ws = Workspace::new();
    let csv = ws.path("perturbed.csv");
    let r: KklReport = json(&martpoly(&[
        "kkl",
        "--s0",
        "2",
        "--lambda",
        "1/8",
        "--eta",
        "1/8",
        "--rate",
        "1/10",
        "--horizon",
        "1",
        "--steps",
        "4",
        "--epsilon",
        "1/100",
        "--seed",
        "7",
        "--perturbed-out",
        arg(&csv),
        "--json",
    ]));
    assert!(!r.violations.is_empty());
    let p = r.perturbation.unwrap();
    assert!(p.violations.is_empty());
    assert!(parse_rational(&p.max_deviation).unwrap() < ratio(1, 100));
    assert!(std::fs::read_to_string(csv).unwrap().lines().count() > 1);
}

#[test]
fn kkl_invalid_parameters_exit_2() {
    let out = martpoly(&[
        "kkl",
        "--s0",
        "1",
        "--lambda",
        "1/2",
        "--eta",
        "1/2",
        "--rate",
        "0",
        "--horizon",
        "1",
        "--steps",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    let out = martpoly(&[
        "kkl",
        "--s0",
        "1",
        "--lambda",
        "x",
        "--eta",
        "1/4",
        "--rate",
        "0",
        "--horizon",
        "1",
        "--steps",
        "1",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn outcome_limit_from_environment_exit_3() {
    let ws = Workspace::new();
    let m = ws.file("m.json", EDGE_MIDPOINTS);
    let out = Command::new(env!("CARGO_BIN_EXE_martpoly"))
        .args(["analyze", arg(&m)])
        .env("MARTPOLY_MAX_OUTCOMES", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    assert_eq!(
        code(&martpoly(&["analyze", arg(&m), "--max-outcomes", "3"])),
        3
    );
}

#[test]
fn malformed_input_exit_2() {
    let ws = Workspace::new();
    let bad = ws.file(
        "bad.json",
        r#"{"rate": "0", "spot": ["1"], "payoffs": [["1/0"]]}"#,
    );
    assert_eq!(code(&martpoly(&["analyze", arg(&bad)])), 2);
    let junk = ws.file("junk.json", "not json");
    assert_eq!(code(&martpoly(&["analyze", arg(&junk)])), 2);
    assert_eq!(
        code(&martpoly(&["analyze", arg(&ws.path("missing.json"))])),
        2
    );
    assert_eq!(code(&martpoly(&["bogus"])), 2);
}

#[test]
fn help_exits_0() {
    let out = martpoly(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("analyze"));
}
