//! Self-consistency voting over sampled output predictions.
use utdebug::testgen::tally_votes;

fn main() -> utdebug::Result<()> {
    let k: usize = 8;
    let threshold = k.div_ceil(2);
    let samples = ["[1, 2]", "[1,2]", "[2, 1]", "[1, 2]", "x", "[1, 2]", "[2, 1]", "[1,  2]"];
    let answers: Vec<Option<String>> = samples
        .iter()
        .map(|s| (*s != "x").then(|| s.to_string()))
        .collect();
    let tally = tally_votes(&answers, threshold, |a, b| Ok(a == b))?;
    for g in &tally.groups {
        println!("{:8} first at {} count {}", g.representative, g.first_index, g.count);
    }
    let modal = tally.modal_group().expect("some answer parsed");
    println!("modal {} with {} of {k}, threshold {threshold}, accepted={}", modal.representative, modal.count, tally.accepted);
    Ok(())
}
