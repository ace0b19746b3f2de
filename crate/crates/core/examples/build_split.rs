//! Samples a debugging split from candidate pools scored on gold tests.
use std::path::Path;

use utdebug::model::read_corpus;
use utdebug::pipeline::{build_debug_split, extract_assert_tests, SplitKind, SplitSpec};
use utdebug::runner::SubjectRunner;

fn main() -> utdebug::Result<()> {
    let ex = extract_assert_tests("assert f(1, [2]) == 3\nassert f(0, []) == 0\nassert f(9) != 1\n", "f")?;
    println!("extracted {} asserts, skipped {}", ex.tests.len(), ex.skipped);

    let pools = read_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_pools.jsonl"))?;
    let runner = SubjectRunner::with_defaults()?;
    for kind in [SplitKind::Fix, SplitKind::FixHard] {
        let split = build_debug_split(&runner, &pools, &SplitSpec::new(kind), 7, 2)?;
        println!("{kind:?}: kept {} dropped {}", split.corpus.len(), split.dropped.len());
        for e in &split.corpus {
            println!("  {} initial pass rate {:.2}", e.problem.id, e.initial_pass_rate.unwrap_or(0.0));
        }
    }
    Ok(())
}
