//! Runs candidate code in the sandboxed Python harness.
use utdebug::model::{CandidateCode, Provenance, UnitTest, UtOrigin};
use utdebug::model::read_corpus;
use utdebug::runner::SubjectRunner;

fn main() -> utdebug::Result<()> {
    let corpus = read_corpus(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_corpus.jsonl"))?;
    let problem = &corpus[0].problem;
    let runner = SubjectRunner::with_defaults()?;

    let buggy = &corpus[0].candidates[0];
    let reference = problem.reference()?;
    let ut = UnitTest::new(vec!["5".into()], "6", UtOrigin::GeneratedPrompted);
    for (name, code) in [("buggy", buggy), ("reference", &reference)] {
        let out = runner.check(code, problem, &ut);
        println!("{name:9} {:?} observed={} passed={}", out.status, out.observed_text(), out.passed());
    }

    let looping = CandidateCode::new(format!("def {}(x):\n    while True:\n        pass\n", problem.entry_point), Provenance::SampledModel);
    let out = runner.call(&looping, problem, &["1".into()]);
    println!("looping   {:?} after {} ms", out.status, out.duration_ms);
    Ok(())
}
