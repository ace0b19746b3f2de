//! Replays a scripted debugging session that backtracks once, then accepts a fix.
use std::path::Path;

use utdebug::debug::{DebugConfig, Debugger};
use utdebug::gateway::{Gateway, ScriptedBackend};
use utdebug::model::read_corpus;
use utdebug::runner::SubjectRunner;

fn main() -> utdebug::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let entry = &read_corpus(&root.join("fixtures/backtrack_corpus.jsonl"))?[0];
    let gateway = Gateway::new(ScriptedBackend::load(&root.join("fixtures/backtrack.json"))?);
    let runner = SubjectRunner::with_defaults()?;
    let trace = Debugger::new(&gateway, &runner, DebugConfig::default()).debug(&entry.problem, &entry.candidates[0])?;
    for r in &trace.rounds {
        println!(
            "round {} suite#{} {:?} pre={:?} post={:?}",
            r.round, r.suite_generation, r.outcome, r.pre_pass, r.post_pass
        );
    }
    println!("\nfinal code:\n{}", trace.final_code.source);
    Ok(())
}
