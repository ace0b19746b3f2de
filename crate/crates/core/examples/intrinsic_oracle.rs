//! Scores the oracle strategy on the toy corpus and cross-checks with brute force.
use std::path::Path;

use utdebug::gateway::{Gateway, ScriptedBackend};
use utdebug::metrics::{brute_force_oracle, intrinsic};
use utdebug::model::read_corpus;
use utdebug::runner::SubjectRunner;
use utdebug::testgen::{GenStrategy, StrategyKind};

fn main() -> utdebug::Result<()> {
    let corpus = read_corpus(&Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy_corpus.jsonl"))?;
    let runner = SubjectRunner::with_defaults()?;
    // the oracle never asks the model anything
    let gateway = Gateway::new(ScriptedBackend::new(Vec::new()));
    let report = intrinsic(&gateway, &runner, &GenStrategy::new(StrategyKind::Oracle), &corpus, 1, 2)?;
    println!(
        "attack {:.1}  output acc {:.1}  acc & attack {:.1}",
        report.attack_rate, report.output_accuracy, report.acc_and_attack
    );
    let detectable = corpus
        .iter()
        .filter(|e| brute_force_oracle(&runner, &e.problem, &e.candidates[0]).unwrap_or(false))
        .count();
    println!("brute force finds a failing input for {detectable}/{}", corpus.len());
    Ok(())
}
