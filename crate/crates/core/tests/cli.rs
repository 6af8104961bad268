mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use cse_core::harness::{
    parse_tree_json, run_cli_with, EXIT_CHECK_FAILED, EXIT_INTERNAL, EXIT_OK, EXIT_USAGE,
};

use common::corpus_path;

struct Output {
    code: i32,
    out: String,
    err: String,
}

fn cli(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_cli_with(std::iter::once("cse").chain(args.iter().copied()), &mut out, &mut err);
    Output { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn program(name: &str) -> String {
    corpus_path(name).display().to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const INVALID: &str = "fn f(a: int) -> int start {
  entry l0;
  exit x;
  l0 -> l1 : a < 0;
  l0 -> x : a >= 0;
  l1 -> x : ret a;
  x -> l0 : skip;
}
";

#[test]
fn validate_accepts_the_corpus() {
    for name in common::CORPUS {
        let o = cli(&["validate", &program(name)]);
        assert_eq!(o.code, EXIT_OK, "{name}: {}", o.out);
        assert!(o.out.contains(": ok ("));
    }
}

#[test]
fn validate_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.cse");
    fs::write(&file, INVALID).unwrap();
    let o = cli(&["validate", path(&file)]);
    assert_eq!(o.code, EXIT_CHECK_FAILED);
    assert!(o.out.contains("entry location f:l0 has an in-edge"));
    assert!(o.out.contains("exit location f:x has an out-edge"));
    assert_eq!(cli(&["run", path(&file)]).code, EXIT_USAGE);
}

#[test]
fn missing_file_is_a_usage_error() {
    let o = cli(&["run", "missing.cse"]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.starts_with("error: cannot read missing.cse"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(cli(&["run", &program("lin_srch"), "--mode", "sideways"]).code, EXIT_USAGE);
    assert_eq!(cli(&["run", &program("lin_srch"), "--choose", "nope"]).code, EXIT_USAGE);
    assert_eq!(cli(&["run", &program("lin_srch"), "--backend", "nope"]).code, EXIT_USAGE);
    assert_eq!(cli(&["run", &program("lin_srch"), "--tree", "out.txt"]).code, EXIT_USAGE);
    assert_eq!(cli(&["frobnicate"]).code, EXIT_USAGE);
    assert_eq!(cli(&["--help"]).code, EXIT_OK);
}

#[test]
fn unavailable_solver_is_an_internal_error() {
    let o = cli(&["run", &program("lin_srch"), "--mode", "classic", "--backend", "external", "--solver", "/nonexistent/z3"]);
    assert_eq!(o.code, EXIT_INTERNAL);
    assert!(o.err.contains("solver could not be started"));
}

#[test]
fn templates_reports_the_search_loop() {
    let o = cli(&["templates", &program("lin_srch")]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.starts_with("1 templates\n"));
    assert!(o.out.contains("template t0 (loop linSrch:b,c,d,b) at linSrch:b, 2 exits"), "{}", o.out);
}

#[test]
fn templates_reports_failures_with_reasons() {
    let o = cli(&["templates", &program("sum_globals")]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.contains("no template for"));
    assert!(o.out.contains("NotClosedForm"), "{}", o.out);
}

#[test]
fn run_prints_statistics_and_finals() {
    let o = cli(&["run", &program("lin_srch")]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.starts_with("processed 6, vertices 6, final states 2,"), "{}", o.out);
    assert!(o.out.contains("template t0 instantiated 1 times"));
    assert_eq!(o.out.lines().filter(|l| l.starts_with("final linSrch:g")).count(), 2);

    let classic = cli(&["run", &program("lin_srch"), "--mode", "classic", "--budget", "200"]);
    assert!(classic.out.contains("budget exhausted true"));
}

#[test]
fn tree_files_match_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let dot = dir.path().join("t.dot");
    assert_eq!(cli(&["run", &program("lin_srch"), "--tree", path(&json)]).code, EXIT_OK);
    assert_eq!(cli(&["run", &program("lin_srch"), "--tree", path(&dot)]).code, EXIT_OK);
    let tree = parse_tree_json(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(tree.format, "cse-tree");
    assert_eq!(tree.version, 1);
    assert_eq!(tree.vertices.len(), 6);
    assert!(tree.is_well_formed());
    let dot = fs::read_to_string(&dot).unwrap();
    assert!(dot.starts_with("digraph tree {"));
    assert_eq!(dot.matches(" [label=").count(), 6 + 5);
    assert_eq!(dot.matches("peripheries=2").count(), 2);
}

#[test]
fn dumps_queries_and_templates() {
    let dir = tempfile::tempdir().unwrap();
    let smt = dir.path().join("smt");
    let tpl = dir.path().join("tpl");
    let o = cli(&["run", &program("count_if"), "--visit-bound", "4", "--dump-smt", path(&smt), "--dump-templates", path(&tpl)]);
    assert_eq!(o.code, EXIT_OK);
    let queries: Vec<_> = fs::read_dir(&smt).unwrap().collect();
    assert!(!queries.is_empty());
    let first = fs::read_to_string(smt.join("query-00001.smt2")).unwrap();
    assert!(first.contains("(check-sat)"));
    let text = fs::read_to_string(tpl.join("templates.txt")).unwrap();
    assert!(text.contains("template t0"));
}

#[test]
fn diff_passes_on_the_paper_programs() {
    for name in ["lin_srch", "count_if", "lin_srch_rec"] {
        let o = cli(&["diff", &program(name), "--bound", "3"]);
        assert_eq!(o.code, EXIT_OK, "{name}: {}", o.out);
        assert!(o.out.starts_with("pass: "));
    }
}

#[test]
fn configuration_file_sets_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cse.toml");
    fs::write(&cfg, "[run]\nbudget = 5\n").unwrap();
    let o = cli(&["--config", path(&cfg), "run", &program("lin_srch"), "--mode", "classic"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.out.starts_with("processed 5,"), "{}", o.out);

    fs::write(&cfg, "[run]\nbudgett = 5\n").unwrap();
    let o = cli(&["--config", path(&cfg), "run", &program("lin_srch")]);
    assert_eq!(o.code, EXIT_USAGE);
    assert!(o.err.contains("invalid configuration"));
}

#[test]
fn environment_overrides_the_solver_path() {
    let o = Command::new(env!("CARGO_BIN_EXE_cse"))
        .args(["run", &program("lin_srch"), "--mode", "classic", "--backend", "external"])
        .env("CSE_SOLVER", "/nonexistent/z3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_INTERNAL));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/z3"));
}
