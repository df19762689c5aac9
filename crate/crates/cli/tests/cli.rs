use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bbspan::generate::{generate, GenParams, Kind};
use bbspan::Rational;
use bbspan_cli::commands::{EXIT_CAP, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_VALIDATION, EXIT_VERIFY};
use bbspan_cli::doc::{from_json, to_json, InstanceDocument, ReportDocument, Q};
use proptest::prelude::*;
use tempfile::TempDir;

fn bbspan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bbspan")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generated(dir: &TempDir, kind: &str, n: usize, k: usize, seed: u64) -> PathBuf {
    let out = dir.path().join(format!("{kind}-{seed}.json"));
    let o = bbspan(&[
        "generate",
        "--kind",
        kind,
        "--n",
        &n.to_string(),
        "--k",
        &k.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn solved(dir: &TempDir, inst: &Path, algo: &str) -> PathBuf {
    let out = dir.path().join(format!("report-{algo}.json"));
    let o = bbspan(&["solve", "--instance", path_str(inst), "--algo", algo, "--theta", "1/4", "--seed", "3", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn read_report(p: &Path) -> ReportDocument {
    from_json(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn write_report(p: &Path, r: &ReportDocument) {
    std::fs::write(p, to_json(r)).unwrap();
}

fn verify(inst: &Path, report: &Path) -> Output {
    bbspan(&["verify", "--instance", path_str(inst), "--report", path_str(report)])
}

#[test]
fn untampered_reports_verify() {
    let dir = TempDir::new().unwrap();
    let many = generated(&dir, "random", 7, 3, 11);
    let one = generated(&dir, "single-source", 7, 3, 11);
    for (inst, algo) in [(&many, "k"), (&many, "n45"), (&one, "single-source"), (&one, "k")] {
        let report = solved(&dir, inst, algo);
        let o = verify(inst, &report);
        assert!(o.status.success(), "{algo}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));
    }
}

#[test]
fn single_source_rejects_many_sources_as_usage() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 7, 3, 11);
    let doc: InstanceDocument = from_json(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    let sources: std::collections::BTreeSet<usize> = doc.demands.iter().map(|d| d.source).collect();
    assert!(sources.len() > 1);
    let o = bbspan(&["solve", "--instance", path_str(&inst), "--algo", "single-source"]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
}

#[test]
fn deleted_edge_is_reported_with_its_pair() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "hub-planted", 10, 3, 2);
    let report = solved(&dir, &inst, "k");
    let mut r = read_report(&report);
    let route = r.solution.routes.iter_mut().find(|route| !route.edges.is_empty()).unwrap();
    let pair = route.pair;
    route.edges.pop();
    write_report(&report, &r);
    let o = verify(&inst, &report);
    assert_eq!(o.status.code(), Some(EXIT_VERIFY));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("pair {pair}")));
}

#[test]
fn cost_off_by_one_shows_the_recomputed_value() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 6, 2, 4);
    let report = solved(&dir, &inst, "k");
    let mut r = read_report(&report);
    let truth = r.cost.total.clone();
    r.cost.total = Q(truth.0.clone() + Rational::from_integer(1.into()));
    write_report(&report, &r);
    let o = verify(&inst, &report);
    assert_eq!(o.status.code(), Some(EXIT_VERIFY));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("recomputed {truth}")));
}

#[test]
fn n45_reports_are_strict_and_echo_the_request() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 7, 3, 5);
    let report = solved(&dir, &inst, "n45");
    let mut r = read_report(&report);
    assert_eq!(r.solver.theta, "1/4".parse().unwrap());
    assert_eq!(r.solution.theta, "0/1".parse().unwrap());
    assert!(r.margins.iter().all(|m| m.strict.0 >= Rational::from_integer(0.into())));
    r.solution.theta = "1/2".parse().unwrap();
    write_report(&report, &r);
    assert_eq!(verify(&inst, &report).status.code(), Some(EXIT_VERIFY));
}

#[test]
fn stage_cost_tampering_is_caught() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 6, 3, 8);
    let report = solved(&dir, &inst, "k");
    let mut r = read_report(&report);
    r.stages.records[0].cost = Q(r.stages.records[0].cost.0.clone() + Rational::from_integer(2.into()));
    write_report(&report, &r);
    assert_eq!(verify(&inst, &report).status.code(), Some(EXIT_VERIFY));
}

#[test]
fn oracle_reports_verify_and_bound_the_solvers() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "negative-length", 6, 2, 9);
    let oracle = dir.path().join("oracle.json");
    let o = bbspan(&["oracle", "--instance", path_str(&inst), "--theta", "1/4", "--out", path_str(&oracle)]);
    assert!(o.status.success());
    assert!(verify(&inst, &oracle).status.success());
    let best = read_report(&oracle).cost.total;
    let k = read_report(&solved(&dir, &inst, "k")).cost.total;
    assert!(best <= k);
}

#[test]
fn generation_is_seed_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = std::fs::read(generated(&dir, "backbone-planted", 9, 3, 21)).unwrap();
    let b = bbspan(&["generate", "--kind", "backbone-planted", "--n", "9", "--k", "3", "--seed", "21"]);
    assert_eq!(a, b.stdout);
    let c = bbspan(&["generate", "--kind", "backbone-planted", "--n", "9", "--k", "3", "--seed", "22"]);
    assert_ne!(a, c.stdout);
}

#[test]
fn hub_planted_metadata_routes_transit_the_hub() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "hub-planted", 20, 4, 6);
    let doc: InstanceDocument = from_json(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    let meta = doc.metadata.as_ref().unwrap();
    assert_eq!(meta.generator.as_ref().unwrap().kind, "hub-planted");
    let planted = meta.planted.as_ref().unwrap();
    assert_eq!(planted.routes.len(), 4);
    for r in &planted.routes {
        assert!(r.edges.iter().any(|&e| doc.edges[e].head == 0));
    }
}

#[test]
fn zero_budget_fails_validation() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 5, 2, 1);
    let mut doc: InstanceDocument = from_json(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    doc.demands[0].dist_budget = "0/1".parse().unwrap();
    std::fs::write(&inst, to_json(&doc)).unwrap();
    for cmd in ["solve", "oracle", "junction"] {
        let o = bbspan(&[cmd, "--instance", path_str(&inst)]);
        assert_eq!(o.status.code(), Some(EXIT_VALIDATION), "{cmd}");
    }
}

#[test]
fn tight_rcsp_budget_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let q = dir.path().join("q.json");
    std::fs::write(
        &q,
        r#"{"n": 3, "source": 0, "sink": 2, "budgets": ["1/1"],
            "arcs": [{"tail": 0, "head": 1, "cost": "1/1", "weights": ["1/1"]},
                     {"tail": 1, "head": 2, "cost": "1/1", "weights": ["1/1"]}]}"#,
    )
    .unwrap();
    assert_eq!(bbspan(&["rcsp", "--query", path_str(&q)]).status.code(), Some(EXIT_INFEASIBLE));
    let o = bbspan(&["rcsp", "--query", path_str(&q), "--mode", "approx", "--epsilon", "1"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"cost\": \"2/1\""));
}

#[test]
fn tiny_caps_report_cap_exceeded() {
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 6, 2, 3);
    let o = bbspan(&["solve", "--instance", path_str(&inst), "--max-layers", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_CAP), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bbspan(&["rcsp", "--instance", path_str(&inst), "--pair", "0", "--max-patterns", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_CAP));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(bbspan(&["solve", "--instance", "x.json", "--algo", "fast"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(bbspan(&["generate", "--kind", "nope"]).status.code(), Some(EXIT_USAGE));
    let dir = TempDir::new().unwrap();
    let inst = generated(&dir, "random", 5, 2, 1);
    assert_eq!(bbspan(&["solve", "--instance", path_str(&inst), "--theta", "-1/2"]).status.code(), Some(EXIT_USAGE));
}

#[test]
fn bench_tables() {
    let empty = bbspan(&["bench", "--count", "0"]);
    assert!(empty.status.success());
    assert_eq!(String::from_utf8_lossy(&empty.stdout).lines().count(), 1);
    let plain = bbspan(&["bench", "--count", "1", "--no-oracle", "--sizes", "5"]);
    let text = String::from_utf8_lossy(&plain.stdout).to_string();
    assert!(!text.contains("ratio") && text.lines().count() == 2);
    let dir = TempDir::new().unwrap();
    let json = dir.path().join("b.json");
    let a = bbspan(&["--threads", "2", "bench", "--count", "2", "--sizes", "5", "--algos", "k,n45", "--json", path_str(&json)]);
    assert!(a.status.success());
    let table: bbspan_cli::bench::BenchTable = from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 4);
    assert!(table.rows.iter().all(|r| r.ratio.is_some_and(|x| x >= 1.0 - 1e-12)));
    let b = bbspan(&["bench", "--count", "2", "--sizes", "5", "--algos", "k,n45", "--json", path_str(&json)]);
    let again: bbspan_cli::bench::BenchTable = from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(b.status.success());
    let costs = |t: &bbspan_cli::bench::BenchTable| t.rows.iter().map(|r| (r.instance.clone(), r.cost.clone())).collect::<Vec<_>>();
    assert_eq!(costs(&table), costs(&again));
}

fn kind_of(i: usize) -> Kind {
    Kind::ALL[i % Kind::ALL.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn instance_documents_round_trip(seed in any::<u64>(), kind in 0usize..5, n in 4usize..9, den in 1i64..5) {
        let p = GenParams { n, k: 2, denominator: den, max_demand: 3, ..GenParams::default() };
        let Ok(g) = generate::<Rational>(kind_of(kind), &p, bbspan::Seed(seed)) else { return Ok(()) };
        let doc = InstanceDocument::from_instance(&g.instance);
        let back: InstanceDocument = from_json(&to_json(&doc)).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_instance().unwrap(), g.instance);
    }

    #[test]
    fn rationals_round_trip(num in any::<i64>(), den in 1i64..i64::MAX) {
        let q = Q(Rational::new(num.into(), den.into()));
        prop_assert_eq!(q.to_string().parse::<Q>().unwrap(), q);
    }
}

#[test]
fn reports_round_trip() {
    let dir = TempDir::new().unwrap();
    for (i, kind) in ["random", "negative-length", "hub-planted"].into_iter().enumerate() {
        let inst = generated(&dir, kind, 7, 3, i as u64);
        for algo in ["k", "n45"] {
            let text = std::fs::read_to_string(solved(&dir, &inst, algo)).unwrap();
            let r: ReportDocument = from_json(&text).unwrap();
            assert_eq!(from_json::<ReportDocument>(&to_json(&r)).unwrap(), r);
            assert_eq!(to_json(&r), text);
        }
    }
}
