mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use serde_json::Value;

fn utdebug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_utdebug"))
        .args(args)
        .env_remove("UTD_API_BASE")
        .env_remove("UTD_MODEL")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn debug_with_the_fixture_script_fixes_the_bug() {
    let tmp = tempfile::tempdir().unwrap();
    let script = format!("scripted:{}", p(&crate_path("fixtures/backtrack.json")));
    let out = utdebug(&[
        "debug",
        "--corpus",
        p(&crate_path("fixtures/backtrack_corpus.jsonl")),
        "--out",
        p(tmp.path()),
        "--backend",
        &script,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&tmp.path().join("summary.json"));
    assert_eq!(summary["pass_at_1_initial"], 0.0);
    assert_eq!(summary["pass_at_1_final"], 100.0);
    let traces = std::fs::read_to_string(tmp.path().join("traces.jsonl")).unwrap();
    assert_eq!(traces.lines().count(), 1);
    let manifest = read_json(&tmp.path().join("manifest.json"));
    assert_eq!(manifest["command"], "debug");
    assert_eq!(manifest["item_errors"], 0);
    assert!(tmp.path().join("errors.jsonl").exists());
}

#[test]
fn oracle_commands_run_without_a_backend() {
    let tmp = tempfile::tempdir().unwrap();
    let out = utdebug(&[
        "gen-uts",
        "--corpus",
        p(&crate_path("fixtures/backtrack_corpus.jsonl")),
        "--out",
        p(tmp.path()),
        "--strategy",
        "oracle",
        "--n",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let suites = std::fs::read_to_string(tmp.path().join("suites.jsonl")).unwrap();
    let first: Value = serde_json::from_str(suites.lines().next().unwrap()).unwrap();
    assert!(first.to_string().contains("max_of_list") || first.to_string().contains("toy03"));
}

#[test]
fn build_corpus_writes_a_loadable_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let out = utdebug(&[
        "build-corpus",
        "--corpus",
        p(&crate_path("data/toy_pools.jsonl")),
        "--out",
        p(tmp.path()),
        "--split",
        "hard",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let corpus = utdebug::model::read_corpus(&tmp.path().join("corpus.jsonl")).unwrap();
    assert!(!corpus.is_empty());
    assert!(corpus.iter().all(|e| e.candidates.len() == 1));
}

#[test]
fn configuration_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = crate_path("data/toy_corpus.jsonl");
    let cases: Vec<Vec<&str>> = vec![
        // live backend with no endpoint configured
        vec!["debug", "--corpus", p(&corpus), "--out", p(tmp.path())],
        vec!["debug", "--corpus", p(&corpus), "--out", p(tmp.path()), "--strategy", "psychic"],
        vec!["debug", "--corpus", p(&corpus), "--out", p(tmp.path()), "--regen", "never", "--backend", "scripted:/nonexistent.json"],
        vec!["eval-intrinsic", "--corpus", "/no/such/corpus.jsonl", "--out", p(tmp.path()), "--strategy", "oracle"],
        vec!["debug", "--corpus", p(&corpus), "--out", p(tmp.path()), "--backend", "replay:/no/such/dir"],
        vec!["build-corpus", "--corpus", p(&corpus), "--out", p(tmp.path()), "--split", "medium"],
    ];
    for args in cases {
        let out = utdebug(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn a_replay_cache_miss_is_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("empty-cache");
    std::fs::create_dir(&cache).unwrap();
    let backend = format!("replay:{}", p(&cache));
    let out = utdebug(&[
        "debug",
        "--corpus",
        p(&crate_path("fixtures/backtrack_corpus.jsonl")),
        "--out",
        p(&tmp.path().join("out")),
        "--backend",
        &backend,
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn item_failures_are_recorded_not_fatal() {
    let tmp = tempfile::tempdir().unwrap();
    // the backtrack script only covers toy03; every other problem runs dry
    let script = format!("scripted:{}", p(&crate_path("fixtures/backtrack.json")));
    let corpus = crate_path("data/toy_corpus.jsonl");
    let out = utdebug(&["debug", "--corpus", p(&corpus), "--out", p(tmp.path()), "--backend", &script, "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = std::fs::read_to_string(tmp.path().join("errors.jsonl")).unwrap();
    assert_eq!(errors.lines().count(), 19);
    assert_eq!(read_json(&tmp.path().join("manifest.json"))["item_errors"], 19);
}

#[test]
fn every_documented_flag_parses() {
    let out = utdebug(&["debug", "--help"]);
    let help = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--corpus", "--out", "--backend", "--model", "--strategy", "--n", "--k", "--rounds", "--runs", "--seed",
        "--jobs", "--timeout-ms", "--regen", "--feedback",
    ] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
    for sub in ["gen-uts", "debug", "eval-intrinsic", "rerank", "bootstrap-sft", "build-corpus"] {
        assert!(utdebug(&[sub, "--help"]).status.success(), "{sub}");
    }
}
