//! Best-of-N selection: the candidate passing most of the pooled tests wins.
use std::path::Path;

use utdebug::gateway::{Gateway, ScriptedBackend};
use utdebug::metrics::rerank_best_of_n;
use utdebug::model::read_corpus;
use utdebug::runner::SubjectRunner;
use utdebug::testgen::{GenStrategy, StrategyKind};

fn main() -> utdebug::Result<()> {
    let pools = read_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_pools.jsonl"))?;
    let runner = SubjectRunner::with_defaults()?;
    let gateway = Gateway::new(ScriptedBackend::new(Vec::new()));
    let strategy = GenStrategy::new(StrategyKind::Oracle);
    for entry in pools.iter().take(4) {
        let r = rerank_best_of_n(&gateway, &runner, &strategy, &entry.problem, &entry.candidates)?;
        println!("{}: scores {:?} -> candidate {}", r.problem_id, r.scores, r.chosen);
    }
    Ok(())
}
