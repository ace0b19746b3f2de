mod common;

use std::sync::{Arc, Mutex};

use common::*;
use utdebug::gateway::{FnBackend, Gateway, GenRequest, Role};
use utdebug::model::CandidateCode;
use utdebug::testgen::{
    oracle_suite, GenStrategy, InputSample, RejectReason, StrategyKind, UtGenerator, VoteOutcome,
};
use utdebug::Error;

fn toy(id: &str) -> utdebug::model::CorpusEntry {
    toy_corpus().into_iter().find(|e| e.problem.id == id).unwrap()
}

#[test]
fn random_strategy_never_sees_the_code() {
    let entry = toy("toy03");
    let seen = Arc::new(Mutex::new(Vec::<String>::new()));
    let log = Arc::clone(&seen);
    let backend = FnBackend::new("spy", move |req: &GenRequest| {
        let seen = &log;
        seen.lock().unwrap().push(req.prompt_text());
        Ok((0..req.n_samples)
            .map(|_| {
                if req.seed_tag.ends_with("/output") {
                    answer("3")
                } else {
                    ask("max_of_list", "[1, 3]")
                }
            })
            .collect())
    });
    let gateway = Gateway::new(backend);
    let runner = runner();
    let gen = UtGenerator::new(&gateway, &runner, GenStrategy::new(StrategyKind::Random));
    let report = gen.build_ut(&entry.problem, None, "rand").unwrap();
    assert_eq!(report.suite.len(), 1, "identical inputs collapse to one UT");

    let buggy = &entry.candidates[0].source;
    let prompts = seen.lock().unwrap();
    assert!(!prompts.is_empty());
    for prompt in prompts.iter() {
        assert!(!prompt.contains(buggy.as_str()));
        assert!(!prompt.contains("max(xs[:-1])"));
        assert!(!prompt.contains("def max_of_list"));
    }

    let err = gen.build_ut(&entry.problem, Some(&entry.candidates[0]), "rand").unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn prompted_strategies_require_code() {
    let entry = toy("toy01");
    let gateway = scripted(Vec::new());
    let runner = runner();
    for kind in [StrategyKind::Prompted, StrategyKind::Utgen] {
        let gen = UtGenerator::new(&gateway, &runner, GenStrategy::new(kind));
        assert!(matches!(gen.build_ut(&entry.problem, None, "t"), Err(Error::Config(_))));
    }
}

#[test]
fn utgen_output_prompt_pins_the_sampled_input() {
    let entry = toy("toy11");
    let gateway = scripted(Vec::new());
    let runner = runner();
    let gen = UtGenerator::new(&gateway, &runner, GenStrategy::new(StrategyKind::Utgen));
    let args = vec!["5".to_string(), "0".into(), "3".into()];
    let msgs = gen.output_messages(&entry.problem, Some(&entry.candidates[0]), &args).unwrap();
    let last = msgs.last().unwrap();
    assert_eq!(last.role, Role::Assistant);
    assert!(last.content.contains("Arguments: clamp(5, 0, 3)"));
    assert!(last.content.trim_end().ends_with("### Output"));
}

#[test]
fn a_slot_fails_after_three_unusable_replies() {
    let entry = toy("toy01");
    let gateway = scripted(vec![tag(
        "s/input/",
        vec![
            "no arguments here".into(),
            ask("add_one", "[1, 2"),
            ask("wrong_name", "1"),
        ],
    )]);
    let runner = runner();
    let gen = UtGenerator::new(&gateway, &runner, GenStrategy::default());
    let (sample, requests) = gen.sample_input(&entry.problem, Some(&entry.candidates[0]), "s").unwrap();
    assert_eq!(requests, 3);
    assert!(matches!(sample, InputSample::SlotFailed { attempts: 3, .. }), "{sample:?}");
}

#[test]
fn build_ut_spends_at_most_three_n_slots() {
    let entry = toy("toy01");
    let runner = runner();
    for n in 1..=4 {
        let backend = FnBackend::new("same", |req: &GenRequest| {
            Ok((0..req.n_samples)
                .map(|_| {
                    if req.seed_tag.ends_with("/output") {
                        answer("2")
                    } else {
                        ask("add_one", "1")
                    }
                })
                .collect())
        });
        let gateway = Gateway::new(backend);
        let strategy = GenStrategy { n, ..GenStrategy::default() };
        let gen = UtGenerator::new(&gateway, &runner, strategy);
        let report = gen.build_ut(&entry.problem, Some(&entry.candidates[0]), "b").unwrap();
        // one distinct UT fills a suite of one; otherwise every slot is spent
        let slots = if n == 1 { 1 } else { 3 * n };
        assert_eq!(report.slots_tried, slots);
        assert_eq!(report.suite.len(), 1);
        assert_eq!(report.duplicates, slots - 1);
        assert_eq!(report.output_samples, slots * 8);
    }
}

#[test]
fn build_ut_stops_once_n_distinct_tests_exist() {
    let entry = toy("toy01");
    let runner = runner();
    let counter = Mutex::new(0);
    let backend = FnBackend::new("distinct", move |req: &GenRequest| {
        if req.seed_tag.ends_with("/output") {
            return Ok(vec![answer("0"); req.n_samples]);
        }
        let mut c = counter.lock().unwrap();
        *c += 1;
        Ok(vec![ask("add_one", &c.to_string())])
    });
    let gateway = Gateway::new(backend);
    let gen = UtGenerator::new(&gateway, &runner, GenStrategy::default());
    let report = gen.build_ut(&entry.problem, Some(&entry.candidates[0]), "d").unwrap();
    assert_eq!(report.suite.len(), 3);
    assert_eq!(report.slots_tried, 3);
    let inputs: Vec<&str> = report.suite.iter().map(|u| u.args[0].as_str()).collect();
    assert_eq!(inputs, ["1", "2", "3"]);
}

#[test]
fn votes_reject_split_and_unparsed_answers() {
    let entry = toy("toy01");
    let runner = runner();
    let buggy = &entry.candidates[0];
    let split = [answer("1"), answer("1"), answer("1"), answer("2"), answer("2"), answer("2"), answer("3"), answer("3")];
    let gateway = scripted(vec![tag("split/", split.to_vec()), tag("blank/", vec!["I cannot tell.".into(); 8])]);
    let gen = UtGenerator::new(&gateway, &runner, GenStrategy::default());
    match gen.predict_output_sc(&entry.problem, Some(buggy), &["0".into()], "split").unwrap() {
        VoteOutcome::Rejected { reason, tally } => {
            assert_eq!(reason, RejectReason::BelowFloor);
            assert_eq!(tally.modal_group().unwrap().representative, "1");
        }
        other => panic!("{other:?}"),
    }
    match gen.predict_output_sc(&entry.problem, Some(buggy), &["0".into()], "blank").unwrap() {
        VoteOutcome::Rejected { reason, .. } => assert_eq!(reason, RejectReason::AllUnparsed),
        other => panic!("{other:?}"),
    }
}

#[test]
fn float_answers_group_by_harness_equality() {
    let entry = toy("toy13");
    let runner = runner();
    let outs = vec![
        answer("2.0"),
        answer("2.0000000001"),
        answer("2"),
        answer("1.9999999999"),
        answer("3.5"),
        answer("3.5"),
        answer("3.5"),
        answer("3.5"),
    ];
    let gateway = scripted(vec![tag("f/", outs)]);
    let gen = UtGenerator::new(&gateway, &runner, GenStrategy::default());
    match gen.predict_output_sc(&entry.problem, Some(&entry.candidates[0]), &["[1, 3]".into()], "f").unwrap() {
        // 4 vs 4: the group seen first wins the tie
        VoteOutcome::Accepted { value, votes, .. } => {
            assert_eq!(votes, 4);
            assert_eq!(value.text, "2.0");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn oracle_suites_lead_with_diverging_inputs() {
    let runner = runner();
    for entry in toy_corpus() {
        let buggy = &entry.candidates[0];
        let suite = oracle_suite(&runner, &entry.problem, buggy, 3).unwrap();
        assert_eq!(suite.len(), 3, "{}", entry.problem.id);
        assert!(!runner.check(buggy, &entry.problem, &suite[0]).passed(), "{}", entry.problem.id);
        let reference = entry.problem.reference().unwrap();
        assert!(suite.iter().all(|ut| runner.check(&reference, &entry.problem, ut).passed()));
    }
}

#[test]
fn oracle_without_inputs_is_unavailable() {
    let mut entry = toy("toy01");
    entry.problem.input_domain = None;
    entry.problem.gold_tests = None;
    let runner = runner();
    let code = CandidateCode::new("def add_one(x):\n    return x\n", utdebug::model::Provenance::SampledModel);
    assert!(matches!(
        oracle_suite(&runner, &entry.problem, &code, 3),
        Err(Error::OracleUnavailable(_))
    ));
}
