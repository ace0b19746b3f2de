mod common;

use std::collections::BTreeMap;

use common::*;
use utdebug::gateway::ChatMessage;
use utdebug::model::{corpus_to_string, SftLine};
use utdebug::pipeline::{
    assemble_completion, bootstrap_sft, build_debug_split, extract_assert_tests, problem_rng, read_source,
    source_problems, verify_sft_records, SourceFilter, SourceItem, SplitKind, SplitSpec,
};
use utdebug::prompts::parse_unit_test;
use rand::Rng;

#[test]
fn bootstrap_on_the_fixture_keeps_and_drops_the_expected_items() {
    let runner = runner();
    let items = read_source(&crate_path("data/sft_source.jsonl")).unwrap();
    let gateway = fixture_gateway("fixtures/sft_script.json");
    let report = bootstrap_sft(&gateway, &runner, &items, &SourceFilter::default(), 0, 2).unwrap();

    let mut per_item: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &report.records {
        *per_item.entry(r.problem_id.as_str()).or_default() += 1;
    }
    assert_eq!(per_item, BTreeMap::from([("src01", 4), ("src02", 2), ("src07", 5)]));

    let dropped: BTreeMap<&str, &str> = report.dropped.iter().map(|(id, why)| (id.as_str(), why.as_str())).collect();
    assert!(dropped["src03"].starts_with("filtered: missing keyword"));
    assert_eq!(dropped["src04"], "no failing unit tests");
    assert_eq!(dropped["src05"], "no usable corruption");
    assert!(dropped["src06"].starts_with("filtered: prompt has"));

    let problems = source_problems(&items, &SourceFilter::default(), &runner);
    assert!(verify_sft_records(&runner, &problems, &report.records).unwrap().is_empty());
}

#[test]
fn training_completions_parse_back_to_their_test() {
    let runner = runner();
    let items = read_source(&crate_path("data/sft_source.jsonl")).unwrap();
    let gateway = fixture_gateway("fixtures/sft_script.json");
    let report = bootstrap_sft(&gateway, &runner, &items, &SourceFilter::default(), 0, 1).unwrap();
    let problems = source_problems(&items, &SourceFilter::default(), &runner);
    for r in &report.records {
        let entry = &problems.iter().find(|p| p.id == r.problem_id).unwrap().entry_point;
        let parsed = parse_unit_test(&r.completion, entry).unwrap();
        assert_eq!(parsed.args, r.unit_test.args);
        assert_eq!(parsed.output.as_deref(), Some(r.unit_test.expected.text.as_str()));
        assert!(r.completion.contains("step by step"));
        let line = SftLine::from(r);
        assert_eq!(line.buggy_code, r.buggy_code.source);
    }
}

#[test]
fn tampered_records_fail_verification() {
    let runner = runner();
    let items = read_source(&crate_path("data/sft_source.jsonl")).unwrap();
    let gateway = fixture_gateway("fixtures/sft_script.json");
    let mut report = bootstrap_sft(&gateway, &runner, &items, &SourceFilter::default(), 0, 1).unwrap();
    let problems = source_problems(&items, &SourceFilter::default(), &runner);
    report.records[0].unit_test.expected.text = "12345".into();
    report.records[1].buggy_code = problems
        .iter()
        .find(|p| p.id == report.records[1].problem_id)
        .unwrap()
        .reference()
        .unwrap();
    let violations = verify_sft_records(&runner, &problems, &report.records).unwrap();
    assert!(violations.len() >= 2, "{violations:?}");
}

#[test]
fn completion_assembly_puts_rationale_before_the_answer() {
    let reply = "## Hypothesis\n\nh\n\n## Unit Test\n\n### Input Arguments\n\nArguments: f(1)\n\n### Output\n\nOutput: 9";
    let out = assemble_completion(reply, "### Reasoning\n\nbecause", "2");
    let reasoning = out.find("because").unwrap();
    let answer = out.rfind("Output: 2").unwrap();
    assert!(reasoning < answer);
    assert!(!out.contains("Output: 9"));
}

#[test]
fn source_filter_explains_rejections() {
    let runner = runner();
    let filter = SourceFilter::default();
    let item = |user: &str, assistant: &str| SourceItem {
        id: "x".into(),
        messages: vec![ChatMessage::user(user), ChatMessage::assistant(assistant)],
    };
    let ok = filter
        .accept(&item("Write a python function to add.", "```python\ndef add(a, b):\n    return a + b\n```"), &runner)
        .unwrap();
    assert_eq!((ok.entry_point.as_str(), ok.signature.as_str()), ("add", "add(a, b)"));
    let no_code = filter.accept(&item("Write a python function, def it.", "No code today."), &runner);
    assert!(no_code.unwrap_err().contains("code block"));
    let broken = filter.accept(&item("python please", "```python\ndef f(:\n```"), &runner);
    assert!(broken.is_err());
}

#[test]
fn assert_lines_become_gold_tests() {
    let source = "\
assert f(1, [2, 3]) == 6
assert (f(0, [])) == (0)
assert f(2, 'a,b') == (1, 2), 'message'
assert f(1) != 2
x = f(3)

assert g(1) == 1
";
    let ex = extract_assert_tests(source, "f").unwrap();
    let got: Vec<(Vec<String>, String)> = ex.tests.iter().map(|t| (t.args.clone(), t.expected.text.clone())).collect();
    assert_eq!(
        got,
        [
            (vec!["1".to_string(), "[2, 3]".into()], "6".to_string()),
            (vec!["0".into(), "[]".into()], "0".into()),
            (vec!["2".into(), "'a,b'".into()], "(1, 2)".into()),
        ]
    );
    assert_eq!(ex.skipped, 3);
    assert!(extract_assert_tests("print(1)", "f").is_err());
}

#[test]
fn split_builder_samples_within_the_band_and_is_seeded() {
    let runner = runner();
    let pools = toy_pools();
    let spec = SplitSpec::new(SplitKind::FixHard);
    let a = build_debug_split(&runner, &pools, &spec, 11, 2).unwrap();
    let b = build_debug_split(&runner, &pools, &spec, 11, 1).unwrap();
    assert_eq!(corpus_to_string(&a.corpus).unwrap(), corpus_to_string(&b.corpus).unwrap());
    assert_eq!(a.corpus.len() + a.dropped.len(), pools.len());
    for e in &a.corpus {
        let rate = e.initial_pass_rate.unwrap();
        assert!((0.5..=0.95).contains(&rate), "{}: {rate}", e.problem.id);
    }
    assert!(a.dropped.iter().all(|(_, why)| why == "no eligible candidate"));

    let fix = build_debug_split(&runner, &pools, &SplitSpec::new(SplitKind::Fix), 11, 2).unwrap();
    assert!(fix.corpus.len() >= a.corpus.len());
    assert!(fix.corpus.iter().all(|e| e.initial_pass_rate.unwrap() < 1.0));
}

#[test]
fn per_problem_rng_depends_on_seed_and_id() {
    let draw = |seed, id: &str| problem_rng(seed, id).random::<u64>();
    assert_eq!(draw(1, "a"), draw(1, "a"));
    assert_ne!(draw(1, "a"), draw(2, "a"));
    assert_ne!(draw(1, "a"), draw(1, "b"));
}

#[test]
fn split_spec_validation() {
    let mut spec = SplitSpec::new(SplitKind::FixHard);
    spec.hard_band = (0.9, 0.5);
    assert!(spec.validate().is_err());
    assert!(SplitKind::parse("fix").is_ok() && SplitKind::parse("hard").is_ok());
    assert!(SplitKind::parse("easy").is_err());
}
