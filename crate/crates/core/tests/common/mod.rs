#![allow(dead_code)]

use std::path::PathBuf;

use utdebug::gateway::{Gateway, Matcher, ScriptEntry, ScriptedBackend};
use utdebug::model::{read_corpus, CorpusEntry};
use utdebug::runner::{RunnerConfig, SubjectRunner};

pub fn crate_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

pub fn toy_corpus() -> Vec<CorpusEntry> {
    read_corpus(&crate_path("data/toy_corpus.jsonl")).expect("toy corpus")
}

pub fn toy_pools() -> Vec<CorpusEntry> {
    read_corpus(&crate_path("data/toy_pools.jsonl")).expect("toy pools")
}

pub fn runner() -> SubjectRunner {
    SubjectRunner::new(RunnerConfig {
        memoize: true,
        ..RunnerConfig::default()
    })
    .expect("runner")
}

pub fn raw_runner(timeout_ms: u64) -> SubjectRunner {
    SubjectRunner::new(RunnerConfig {
        timeout_ms,
        ..RunnerConfig::default()
    })
    .expect("runner")
}

pub fn scripted(entries: Vec<ScriptEntry>) -> Gateway {
    Gateway::new(ScriptedBackend::new(entries))
}

pub fn fixture_gateway(name: &str) -> Gateway {
    Gateway::new(ScriptedBackend::load(&crate_path(name)).expect("fixture"))
}

/// An input-sampling reply naming `call` as the arguments.
pub fn ask(entry: &str, call: &str) -> String {
    format!(
        "## Hypothesis\n\nSomething is off.\n\nError Pattern: edge values\n\n\
         ## Unit Test\n\n### Input Arguments\n\nArguments: {entry}({call})\n\n### Output\n\nOutput: 0"
    )
}

pub fn answer(value: &str) -> String {
    format!("Working through it gives {value}.\nOutput: {value}")
}

pub fn fenced(code: &str) -> String {
    format!("Fixed.\n\n```python\n{code}```")
}

pub fn tag(prefix: &str, completions: Vec<String>) -> ScriptEntry {
    ScriptEntry::new(Matcher::tag(prefix), completions)
}

pub fn tag_repeat(prefix: &str, completions: Vec<String>) -> ScriptEntry {
    ScriptEntry::repeating(Matcher::tag(prefix), completions)
}
