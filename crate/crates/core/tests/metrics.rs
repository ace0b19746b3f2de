mod common;

use common::*;
use utdebug::gateway::{Matcher, ScriptEntry};
use utdebug::metrics::{
    aggregate_intrinsic, brute_force_oracle, intrinsic, judge_ut, pass_at_1, rerank_best_of_n, select_best,
    ProblemIntrinsic, UtJudgement,
};
use utdebug::model::{CandidateCode, CorpusEntry, Provenance, UnitTest, UtOrigin};
use utdebug::testgen::{GenStrategy, StrategyKind};

fn toy(id: &str) -> CorpusEntry {
    toy_corpus().into_iter().find(|e| e.problem.id == id).unwrap()
}

fn ut(args: &[&str], expected: &str) -> UnitTest {
    UnitTest::new(args.iter().map(|s| s.to_string()).collect(), expected, UtOrigin::GeneratedPrompted)
}

#[test]
fn judge_separates_attack_from_accuracy() {
    let runner = runner();
    let e = toy("toy01"); // the bug adds 2 when x > 3
    let buggy = &e.candidates[0];
    let cases = [
        (ut(&["5"], "6"), true, true),
        (ut(&["5"], "7"), true, false),
        (ut(&["1"], "2"), false, true),
        (ut(&["1"], "9"), false, false),
        (ut(&["'a'"], "'a1'"), false, false),
    ];
    for (u, attacked, correct) in cases {
        let j = judge_ut(&runner, &e.problem, buggy, u.clone()).unwrap();
        assert_eq!((j.attacked, j.output_correct), (attacked, correct), "{u:?}");
    }
}

#[test]
fn aggregation_averages_runs_as_percentages() {
    let j = |a, o| UtJudgement { ut: None, attacked: a, output_correct: o };
    let per_problem = vec![
        ProblemIntrinsic { problem_id: "a".into(), runs: vec![j(true, true), j(true, false)], errors: vec![] },
        ProblemIntrinsic { problem_id: "b".into(), runs: vec![j(false, true), j(true, true)], errors: vec![] },
    ];
    assert_eq!(aggregate_intrinsic(&per_problem, 2), (75.0, 75.0, 50.0));
    assert_eq!(aggregate_intrinsic(&[], 2), (0.0, 0.0, 0.0));
}

#[test]
fn scripted_prompted_strategy_is_scored_against_the_reference() {
    let runner = runner();
    let corpus: Vec<CorpusEntry> = vec![toy("toy01"), toy("toy02")];
    // toy01: attacking input, wrong output; toy02: non-attacking input, right output
    let script = vec![
        tag_repeat("intrinsic/run0/toy01/input/", vec![ask("add_one", "5")]),
        tag_repeat("intrinsic/run0/toy01/output", vec![answer("7")]),
        tag_repeat("intrinsic/run0/toy02/input/", vec![ask("is_even", "3")]),
        tag_repeat("intrinsic/run0/toy02/output", vec![answer("False")]),
    ];
    let gateway = scripted(script);
    let report = intrinsic(&gateway, &runner, &GenStrategy::default(), &corpus, 1, 1).unwrap();
    assert_eq!((report.attack_rate, report.output_accuracy, report.acc_and_attack), (50.0, 50.0, 0.0));
    assert!(report.acc_and_attack <= report.attack_rate.min(report.output_accuracy));
}

#[test]
fn failed_generation_counts_as_neither() {
    let runner = runner();
    let corpus = vec![toy("toy03")];
    let gateway = scripted(vec![ScriptEntry::repeating(Matcher::any(), vec!["no test".into()])]);
    let report = intrinsic(&gateway, &runner, &GenStrategy::default(), &corpus, 2, 1).unwrap();
    assert_eq!(report.attack_rate, 0.0);
    assert!(report.per_problem[0].runs.iter().all(|j| j.ut.is_none()));
}

#[test]
fn brute_force_finds_planted_bugs_and_clears_the_reference() {
    let runner = runner();
    for e in toy_corpus() {
        assert!(brute_force_oracle(&runner, &e.problem, &e.candidates[0]).unwrap(), "{}", e.problem.id);
        let reference = e.problem.reference().unwrap();
        assert!(!brute_force_oracle(&runner, &e.problem, &reference).unwrap(), "{}", e.problem.id);
    }
}

#[test]
fn pass_at_one_is_a_percentage_of_items() {
    let runner = runner();
    let a = toy("toy04");
    let b = toy("toy05");
    let ra = a.problem.reference().unwrap();
    let items = [(&a.problem, &ra), (&b.problem, &b.candidates[0])];
    assert_eq!(pass_at_1(&runner, &items).unwrap(), 50.0);
    assert_eq!(pass_at_1(&runner, &[]).unwrap(), 0.0);
}

#[test]
fn ties_go_to_the_lowest_index() {
    assert_eq!(select_best(&[1, 3, 3, 2]), 1);
    assert_eq!(select_best(&[0, 0]), 0);
    assert_eq!(select_best(&[2]), 0);
}

#[test]
fn rerank_without_tests_keeps_the_first_candidate() {
    let runner = runner();
    let e = toy("toy09");
    let gateway = scripted(vec![ScriptEntry::repeating(Matcher::any(), vec!["nothing".into()])]);
    let pool = vec![e.candidates[0].clone(), e.problem.reference().unwrap()];
    let r = rerank_best_of_n(&gateway, &runner, &GenStrategy::default(), &e.problem, &pool).unwrap();
    assert_eq!(r.chosen, 0);
    assert!(r.warning.is_some());
}

#[test]
fn rerank_with_oracle_tests_prefers_the_correct_candidate() {
    let runner = runner();
    let e = toy("toy10");
    let good = CandidateCode::new(
        format!("{}# tidy\n", e.problem.reference_code.clone().unwrap()),
        Provenance::SampledModel,
    );
    let pool = vec![e.candidates[0].clone(), good];
    let gateway = scripted(Vec::new());
    let r = rerank_best_of_n(&gateway, &runner, &GenStrategy::new(StrategyKind::Oracle), &e.problem, &pool).unwrap();
    assert_eq!(r.chosen, 1);
    assert_eq!(r.scores[1], r.suite.len());
    assert!(r.scores[0] < r.scores[1]);
}
