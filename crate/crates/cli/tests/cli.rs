use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name]
        .iter()
        .collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ilp-pw"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = run(&all);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    });
    (out.status.code().unwrap(), v)
}

#[test]
fn check_example_is_feasible() {
    let (code, r) = json(&["check", &data("example.ilp")]);
    assert_eq!(code, 0);
    assert_eq!(r["exit_code"], 0);
    assert_eq!(r["results"]["verdict"], "feasible");
    assert_eq!(r["results"]["witness"], "b");
    assert_eq!(r["results"]["residual"], serde_json::json!([0, 0]));
}

#[test]
fn check_parity_is_infeasible() {
    let (code, r) = json(&["check", &data("parity.ilp")]);
    assert_eq!(code, 1);
    assert_eq!(r["results"]["verdict"], "infeasible within bound");
}

#[test]
fn tiny_budget_is_inconclusive() {
    let (code, r) = json(&["check", &data("beyond_box.ilp"), "--max-states", "3"]);
    assert_eq!(code, 3);
    assert_eq!(r["results"]["verdict"], "inconclusive");
}

#[test]
fn solve_projects_slack() {
    let (code, r) = json(&["solve", &data("knapsack.ilp")]);
    assert_eq!(code, 0);
    let vals = r["results"]["values"].as_object().unwrap();
    assert_eq!(vals.keys().collect::<Vec<_>>(), ["a", "c"]);
    let (a, c) = (vals["a"].as_i64().unwrap(), vals["c"].as_i64().unwrap());
    assert!(3 * a + 5 * c <= 11 && a + c >= 2 && a - c == 1);
}

#[test]
fn human_report_matches_json() {
    let text = String::from_utf8(run(&["check", &data("example.ilp")]).stdout).unwrap();
    let (_, r) = json(&["check", &data("example.ilp")]);
    for (k, v) in r["results"].as_object().unwrap() {
        let shown = match v {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        assert!(
            text.contains(&format!("{k}: {shown}\n")),
            "{k} missing from\n{text}"
        );
    }
    assert!(text.ends_with("exit code: 0\n"));
}

#[test]
fn graph_prints_dot() {
    let out = run(&["graph", &data("example.ilp"), "--solution", "5,3,1"]);
    assert_eq!(out.status.code(), Some(0));
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("graph"));
    // 10 edges for the first constraint, 6 for the second
    assert_eq!(dot.matches(" -- ").count(), 16);
    let out = run(&["graph", &data("example.ilp"), "--solution", "1,1,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn decompose_writes_bags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bags.json");
    let (code, r) = json(&[
        "decompose",
        &data("example.ilp"),
        "--solution",
        "(5,3,1)",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["valid"], true);
    assert!(r["results"]["width"].as_u64().unwrap() <= 5);
    assert_eq!(r["results"]["trace"].as_array().unwrap().len(), 14);
    assert_eq!(r["outputs"][0], path.to_str().unwrap());
    let bags: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(bags["width"], r["results"]["width"]);
}

#[test]
fn emit_bp_is_exact() {
    let out = run(&["emit-bp", &data("example.ilp")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "bp 1\n\
         var r1 in [-24, 24] init 0\n\
         var r2 in [-16, 16] init 0\n\
         bit B init 0\n\
         rule x1: true -> r1 += -2, r2 += 1\n\
         rule x2: true -> r1 += 3, r2 += -2\n\
         rule x3: true -> r1 += 1, r2 += 1\n\
         rule b: B == 0 -> B := 1\n\
         target: B == 1 && r1 == 0 && r2 == 0\n"
    );
}

#[test]
fn oracle_csv_and_box() {
    let out = run(&["oracle", &data("pair.ilp"), "--box", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "x1,x2\n0,0\n1,1\n2,2\n"
    );
    let (code, r) = json(&["oracle", &data("beyond_box.ilp"), "--box", "10"]);
    assert_eq!(code, 1);
    assert_eq!(r["results"]["verdict"], "infeasible within box");
    assert_eq!(r["artifact"], "x,y\n");
}

#[test]
fn automaton_export_is_gated() {
    let out = run(&["automaton", &data("pair.ilp"), "--export"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("digraph automaton"));
    let out = run(&[
        "automaton",
        &data("example.ilp"),
        "--export",
        "--max-states",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let (code, r) = json(&["automaton", &data("parity.ilp")]);
    assert_eq!(code, 1);
    assert_eq!(r["results"]["final_reachable"], false);
}

#[test]
fn verify_example_and_random() {
    let (code, r) = json(&["verify", &data("example.ilp"), "--box", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["breaches"], serde_json::json!([]));
    assert!(r["results"]["oracle_solutions"].as_u64().unwrap() >= 2);
    let (code, r) = json(&["verify", "--random", "20", "--seed", "11"]);
    assert_eq!(code, 0);
    assert_eq!(r["results"]["instances"], 20);
    assert_eq!(r["results"]["breach_count"], 0);
}

#[test]
fn usage_and_parse_errors_exit_2() {
    assert_eq!(run(&["check"]).status.code(), Some(2));
    assert_eq!(run(&["check", "/no/such/file.ilp"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ilp");
    std::fs::write(&bad, "1 x1 + * x2 = 3\n").unwrap();
    let out = run(&["check", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1:8"));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
}

#[test]
fn shipped_corpus_never_contradicts_oracle() {
    for name in [
        "example.ilp",
        "parity.ilp",
        "pair.ilp",
        "knapsack.ilp",
        "coins.ilp",
        "beyond_box.ilp",
    ] {
        let (check, _) = json(&["check", &data(name)]);
        let (oracle, _) = json(&["oracle", &data(name), "--box", "10"]);
        assert!(
            !(oracle == 0 && check != 0),
            "{name}: oracle feasible, check exit {check}"
        );
    }
}
