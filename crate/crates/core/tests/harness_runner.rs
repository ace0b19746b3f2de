mod common;

use std::time::Instant;

use common::*;
use utdebug::harness::{HarnessMode, HarnessResponse, HarnessStatus};
use utdebug::model::{CandidateCode, Problem, Provenance, UnitTest, UtOrigin};
use utdebug::runner::ExecStatus;

fn problem(entry: &str) -> Problem {
    Problem {
        id: "p".into(),
        description: "test".into(),
        entry_point: entry.into(),
        signature: format!("{entry}(x)"),
        reference_code: None,
        gold_tests: None,
        source_tag: String::new(),
        input_domain: None,
    }
}

fn code(src: &str) -> CandidateCode {
    CandidateCode::new(src, Provenance::SampledModel)
}

#[test]
fn call_returns_canonical_value() {
    let r = runner();
    let out = r.call(&code("def f(x):\n    return (x, [x * 2], {'k': x})\n"), &problem("f"), &["3".into()]);
    assert_eq!(out.status, ExecStatus::Ok);
    assert_eq!(out.observed_text(), "(3, [6], {'k': 3})");
}

#[test]
fn check_compares_with_tolerance_and_strict_bools() {
    let r = runner();
    let p = problem("f");
    let half = code("def f(x):\n    return x / 3\n");
    assert!(r.check_expected(&half, &p, &["1".into()], "0.3333333").passed());
    assert!(!r.check_expected(&half, &p, &["1".into()], "0.334").passed());
    let truthy = code("def f(x):\n    return x > 0\n");
    assert!(r.check_expected(&truthy, &p, &["1".into()], "True").passed());
    assert!(!r.check_expected(&truthy, &p, &["1".into()], "1").passed());
}

#[test]
fn float_equality_is_symmetric() {
    let r = runner();
    for (a, b) in [("1e-7", "0.0"), ("100.0", "100.00001"), ("[1.0, 2.0]", "[1.0000001, 2.0]")] {
        assert_eq!(r.literals_equal(a, b).unwrap(), r.literals_equal(b, a).unwrap(), "{a} vs {b}");
    }
}

#[test]
fn failures_are_reported_as_data() {
    let r = runner();
    let p = problem("f");
    let cases = [
        ("def f(x):\n    raise KeyError(x)\n", "1", ExecStatus::Exception),
        ("def f(x)\n    return x\n", "1", ExecStatus::LoadError),
        ("def g(x):\n    return x\n", "1", ExecStatus::LoadError),
        ("def f(x):\n    return x\n", "[1, 2", ExecStatus::ArgError),
        ("def f(x):\n    return x\n", "__import__('os')", ExecStatus::ArgError),
    ];
    for (src, arg, want) in cases {
        let out = r.call(&code(src), &p, &[arg.into()]);
        assert_eq!(out.status, want, "{src:?} with {arg}: {out:?}");
    }
}

#[test]
fn candidate_output_does_not_corrupt_the_protocol() {
    let r = runner();
    let out = r.call(
        &code("import sys\nprint('{\"status\": \"ok\"}')\ndef f(x):\n    print('noise')\n    sys.stderr.write('x' * 100000)\n    return x\n"),
        &problem("f"),
        &["5".into()],
    );
    assert_eq!(out.status, ExecStatus::Ok);
    assert_eq!(out.observed_text(), "5");
}

#[test]
fn timeouts_return_within_the_slack() {
    let r = raw_runner(300);
    let p = problem("f");
    for src in [
        "def f(x):\n    while True:\n        pass\n",
        "def f(x):\n    while True:\n        try:\n            pass\n        except BaseException:\n            pass\n",
        "def f(x):\n    import time\n    try:\n        time.sleep(2)\n    except BaseException:\n        return 1\n",
    ] {
        let started = Instant::now();
        let out = r.call(&code(src), &p, &["1".into()]);
        assert_eq!(out.status, ExecStatus::Timeout, "{src:?}");
        assert!(started.elapsed().as_millis() <= 800, "{src:?} took {:?}", started.elapsed());
    }
}

#[test]
fn garbage_requests_get_one_bad_request_line() {
    let r = runner();
    for body in [&b""[..], b"not json", b"{\"mode\": 3}", b"[1, 2]", b"\xff\xfe"] {
        let reply = r.command().exchange_raw(body, 2000).unwrap();
        let lines: Vec<&str> = reply.stdout.lines().collect();
        assert_eq!(lines.len(), 1, "{body:?}: {:?}", reply.stdout);
        let resp: HarnessResponse = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(resp.status, HarnessStatus::LoadError);
        assert_eq!(resp.error_type.as_deref(), Some("bad_request"));
    }
}

#[test]
fn responses_validate_against_their_mode() {
    let r = runner();
    let p = problem("f");
    let ut = UnitTest::new(vec!["2".into()], "4", UtOrigin::Gold);
    let req = r.request(HarnessMode::Check, "def f(x):\n    return x * 2\n", &p.entry_point, &ut.args, Some("4"));
    let resp = r.command().exchange(&req).unwrap();
    resp.validate(HarnessMode::Check).unwrap();
    assert_eq!(resp.equal, Some(true));
}

#[test]
fn writes_stay_in_a_throwaway_directory() {
    let r = runner();
    let p = problem("f");
    let writer = code("def f(x):\n    with open('marker.txt', 'w') as fh:\n        fh.write('x')\n    import os\n    return os.path.exists('marker.txt')\n");
    assert_eq!(r.call(&writer, &p, &["0".into()]).observed_text(), "True");
    let reader = code("def f(x):\n    import os\n    return os.path.exists('marker.txt')\n");
    assert_eq!(r.call(&reader, &p, &["0".into()]).observed_text(), "False");
}

#[test]
fn memoized_runner_agrees_with_fresh_calls() {
    let memo = runner();
    let fresh = raw_runner(5000);
    let p = problem("f");
    let c = code("def f(x):\n    return sorted(x)\n");
    for arg in ["[3, 1, 2]", "[]", "'cba'", "5"] {
        let a = memo.call(&c, &p, &[arg.into()]);
        let b = memo.call(&c, &p, &[arg.into()]);
        let c2 = fresh.call(&c, &p, &[arg.into()]);
        assert_eq!(a, b);
        assert_eq!((a.status, a.value), (c2.status, c2.value), "{arg}");
    }
}

#[test]
fn suite_verdicts_keep_suite_order() {
    let r = runner();
    let p = problem("f");
    let c = code("def f(x):\n    return x + 1\n");
    let suite: Vec<UnitTest> = (0..5)
        .map(|i| UnitTest::new(vec![i.to_string()], if i % 2 == 0 { (i + 1).to_string() } else { "0".into() }, UtOrigin::Gold))
        .collect();
    let verdicts = r.suite_verdicts(&c, &p, &suite).unwrap();
    let passed: Vec<bool> = verdicts.iter().map(|v| v.passed()).collect();
    assert_eq!(passed, [true, false, true, false, true]);
    assert_eq!(r.pass_rate(&c, &p, &suite).unwrap(), 0.6);
}
