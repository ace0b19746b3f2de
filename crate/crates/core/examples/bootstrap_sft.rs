//! Builds training records by corrupting reference solutions.
use std::path::Path;

use utdebug::gateway::{Gateway, ScriptedBackend};
use utdebug::pipeline::{bootstrap_sft, read_source, SourceFilter};
use utdebug::runner::SubjectRunner;

fn main() -> utdebug::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let items = read_source(&root.join("data/sft_source.jsonl"))?;
    let gateway = Gateway::new(ScriptedBackend::load(&root.join("fixtures/sft_script.json"))?);
    let runner = SubjectRunner::with_defaults()?;
    let report = bootstrap_sft(&gateway, &runner, &items, &SourceFilter::default(), 0, 2)?;
    for r in &report.records {
        println!("{} {:?} -> {}", r.problem_id, r.unit_test.args, r.unit_test.expected.text);
    }
    for (id, why) in &report.dropped {
        println!("dropped {id}: {why}");
    }
    if let Some(r) = report.records.first() {
        println!("\nexample completion:\n{}", r.completion);
    }
    Ok(())
}
