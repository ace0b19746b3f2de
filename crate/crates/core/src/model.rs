//! Shared domain types and the line-delimited corpus format.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::literal;

/// A single-function programming task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub description: String,
    pub entry_point: String,
    pub signature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_tests: Option<Vec<UnitTest>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source_tag: String,
    /// Finite input enumeration (argument lists) for brute-force oracles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<Vec<Vec<String>>>,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        let ident_ok = !self.entry_point.is_empty()
            && self
                .entry_point
                .chars()
                .all(|c| c.is_alphanumeric() || c == '_')
            && !self.entry_point.starts_with(|c: char| c.is_ascii_digit());
        if !ident_ok {
            return Err(Error::Config(format!(
                "problem {}: entry point `{}` is not an identifier",
                self.id, self.entry_point
            )));
        }
        if !self.signature.contains(&self.entry_point) {
            return Err(Error::Config(format!(
                "problem {}: signature does not mention `{}`",
                self.id, self.entry_point
            )));
        }
        if matches!(&self.gold_tests, Some(t) if t.is_empty()) {
            return Err(Error::Config(format!(
                "problem {}: gold test list is present but empty",
                self.id
            )));
        }
        Ok(())
    }

    pub fn reference(&self) -> Result<CandidateCode> {
        self.reference_code
            .as_ref()
            .map(|src| CandidateCode::new(src.clone(), Provenance::Reference))
            .ok_or_else(|| Error::Config(format!("problem {} has no reference code", self.id)))
    }

    pub fn gold(&self) -> Result<&[UnitTest]> {
        self.gold_tests
            .as_deref()
            .ok_or_else(|| Error::Config(format!("problem {} has no gold tests", self.id)))
    }
}

/// Where a candidate program came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    HumanBug,
    SampledModel,
    Perturbed,
    EditedRound,
    Reference,
}

/// A program under test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateCode {
    pub source: String,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<u32>,
}

impl CandidateCode {
    pub fn new(source: impl Into<String>, provenance: Provenance) -> Self {
        Self {
            source: source.into(),
            provenance,
            round: None,
        }
    }

    pub fn edited(source: impl Into<String>, round: u32) -> Self {
        Self {
            source: source.into(),
            provenance: Provenance::EditedRound,
            round: Some(round),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Scalar,
    Sequence,
    Mapping,
    Set,
    None,
    Other,
}

/// Canonical literal rendering of a runtime value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonValue {
    pub text: String,
    pub kind: ValueKind,
}

impl CanonValue {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into().trim().to_string();
        let kind = literal::infer_kind(&text);
        Self { text, kind }
    }

    pub fn has_float(&self) -> bool {
        literal::contains_float(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtOrigin {
    GeneratedRandom,
    GeneratedPrompted,
    GeneratedUtgen,
    Gold,
    Oracle,
}

/// An (input, expected output) pair for one entry point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitTest {
    pub args: Vec<String>,
    pub expected: CanonValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub votes: Option<u32>,
    pub origin: UtOrigin,
}

impl UnitTest {
    pub fn new(args: Vec<String>, expected: impl Into<String>, origin: UtOrigin) -> Self {
        Self {
            args,
            expected: CanonValue::new(expected),
            rationale: None,
            votes: None,
            origin,
        }
    }

    pub fn dedup_key(&self) -> String {
        dedup_key(self)
    }

    /// The call as it appears in prompts: `f(1, [2])`.
    pub fn call_text(&self, entry_point: &str) -> String {
        format!("{entry_point}({})", self.args.join(", "))
    }
}

/// Two-line textual form used in prompts and training completions.
pub fn render_unit_test(ut: &UnitTest, entry_point: &str) -> String {
    format!(
        "Arguments: {}\nOutput: {}",
        ut.call_text(entry_point),
        ut.expected.text
    )
}

/// Identity of a UT for deduplication: canonical args and expected output.
pub fn dedup_key(ut: &UnitTest) -> String {
    let mut key = String::new();
    for (i, arg) in ut.args.iter().enumerate() {
        if i > 0 {
            key.push('\u{1f}');
        }
        key.push_str(&literal::canonical_literal(arg));
    }
    key.push('\u{1e}');
    key.push_str(&literal::canonical_literal(&ut.expected.text));
    key
}

/// Removes later duplicates, keeping first occurrences in order.
pub fn dedup_tests(tests: impl IntoIterator<Item = UnitTest>) -> Vec<UnitTest> {
    let mut seen = std::collections::HashSet::new();
    tests
        .into_iter()
        .filter(|ut| seen.insert(dedup_key(ut)))
        .collect()
}

/// Why a debug round ended the way it did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundOutcome {
    Accepted,
    Backtracked,
    /// The edit completion held no parseable code; treated as a backtrack.
    EditUnparsed,
    /// Every generated UT passed; debugging stops.
    NoFailingTests,
    /// Test generation produced nothing to validate against.
    NoTests,
    /// The critique declared the code correct (no-UT baseline).
    DeclaredCorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    /// Index of the suite generation this round validated against.
    pub suite_generation: u32,
    pub suite: Vec<UnitTest>,
    pub failing_used: Option<UnitTest>,
    /// Suite position of `failing_used`.
    pub failing_index: Option<usize>,
    /// Pass rates are absent when no suite exists (no-UT baseline).
    pub pre_pass: Option<f64>,
    pub post_pass: Option<f64>,
    pub accepted: bool,
    pub outcome: RoundOutcome,
    pub code_after: CandidateCode,
}

impl RoundRecord {
    /// Suite pass rate of the code retained after this round.
    pub fn retained_pass(&self) -> Option<f64> {
        if self.accepted {
            self.post_pass
        } else {
            self.pre_pass
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugTrace {
    pub problem_id: String,
    pub initial_code: CandidateCode,
    pub rounds: Vec<RoundRecord>,
    pub final_code: CandidateCode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl DebugTrace {
    /// Accept/backtrack decisions of the rounds that attempted an edit.
    pub fn decisions(&self) -> Vec<RoundOutcome> {
        self.rounds
            .iter()
            .filter(|r| {
                matches!(
                    r.outcome,
                    RoundOutcome::Accepted | RoundOutcome::Backtracked | RoundOutcome::EditUnparsed
                )
            })
            .map(|r| r.outcome)
            .collect()
    }

    /// Checks the trace invariants, returning one message per violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rounds {
            if let (true, Some(pre), Some(post)) = (r.accepted, r.pre_pass, r.post_pass) {
                if post <= pre {
                    out.push(format!(
                        "round {}: accepted with post {post} <= pre {pre}",
                        r.round
                    ));
                }
            }
            if let (Some(pre), Some(kept)) = (r.pre_pass, r.retained_pass()) {
                if kept < pre {
                    out.push(format!("round {}: retained pass {kept} < pre {pre}", r.round));
                }
            }
        }
        for pair in self.rounds.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.suite_generation == b.suite_generation {
                if let (Some(kept), Some(next)) = (a.retained_pass(), b.pre_pass) {
                    if next < kept {
                        out.push(format!(
                            "round {}: pass rate on suite {} fell from {kept} to {next}",
                            b.round, b.suite_generation
                        ));
                    }
                }
            }
        }
        let expected_final = self
            .rounds
            .iter()
            .rev()
            .find(|r| r.accepted)
            .map(|r| &r.code_after)
            .unwrap_or(&self.initial_code);
        if expected_final.source != self.final_code.source {
            out.push("final code is not the last accepted edit".into());
        }
        out
    }
}

/// One emitted training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub completion: String,
    pub problem_id: String,
    pub buggy_code: CandidateCode,
    pub unit_test: UnitTest,
}

/// Flat JSONL shape of an [`SftRecord`] consumed by finetuning tooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SftLine {
    pub prompt: String,
    pub completion: String,
    pub problem_id: String,
    pub buggy_code: String,
    pub ut_args: Vec<String>,
    pub ut_expected: String,
}

impl From<&SftRecord> for SftLine {
    fn from(r: &SftRecord) -> Self {
        Self {
            prompt: r.prompt.clone(),
            completion: r.completion.clone(),
            problem_id: r.problem_id.clone(),
            buggy_code: r.buggy_code.source.clone(),
            ut_args: r.unit_test.args.clone(),
            ut_expected: r.unit_test.expected.text.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Corpus file format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldTestLine {
    pub args: Vec<String>,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLine {
    pub source: String,
    pub provenance: String,
}

/// One line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub id: String,
    pub description: String,
    pub entry_point: String,
    pub signature: String,
    #[serde(default)]
    pub reference_code: Option<String>,
    #[serde(default)]
    pub gold_tests: Option<Vec<GoldTestLine>>,
    #[serde(default)]
    pub candidates: Vec<CandidateLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_domain: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_pass_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_tag: Option<String>,
}

/// A problem together with its candidate pool.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub problem: Problem,
    pub candidates: Vec<CandidateCode>,
    pub initial_pass_rate: Option<f64>,
}

fn parse_provenance(text: &str) -> Result<(Provenance, Option<u32>)> {
    Ok(match text {
        "human_bug" => (Provenance::HumanBug, None),
        "sampled_model" => (Provenance::SampledModel, None),
        "perturbed" => (Provenance::Perturbed, None),
        "reference" => (Provenance::Reference, None),
        other => match other.strip_prefix("edited_round_") {
            Some(k) => (
                Provenance::EditedRound,
                Some(k.parse().map_err(|_| {
                    Error::Parse(format!("bad provenance `{other}`"))
                })?),
            ),
            None => return Err(Error::Parse(format!("unknown provenance `{other}`"))),
        },
    })
}

fn provenance_text(code: &CandidateCode) -> String {
    match code.provenance {
        Provenance::HumanBug => "human_bug".into(),
        Provenance::SampledModel => "sampled_model".into(),
        Provenance::Perturbed => "perturbed".into(),
        Provenance::Reference => "reference".into(),
        Provenance::EditedRound => format!("edited_round_{}", code.round.unwrap_or(0)),
    }
}

impl CorpusLine {
    pub fn into_entry(self) -> Result<CorpusEntry> {
        let gold_tests = self.gold_tests.map(|tests| {
            tests
                .into_iter()
                .map(|t| UnitTest::new(t.args, t.expected, UtOrigin::Gold))
                .collect()
        });
        let problem = Problem {
            id: self.id,
            description: self.description,
            entry_point: self.entry_point,
            signature: self.signature,
            reference_code: self.reference_code,
            gold_tests,
            source_tag: self.source_tag.unwrap_or_default(),
            input_domain: self.input_domain,
        };
        problem.validate()?;
        let candidates = self
            .candidates
            .into_iter()
            .map(|c| {
                let (provenance, round) = parse_provenance(&c.provenance)?;
                if c.source.trim().is_empty() {
                    return Err(Error::Parse(format!(
                        "problem {}: empty candidate source",
                        problem.id
                    )));
                }
                Ok(CandidateCode {
                    source: c.source,
                    provenance,
                    round,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CorpusEntry {
            problem,
            candidates,
            initial_pass_rate: self.initial_pass_rate,
        })
    }

    pub fn from_entry(entry: &CorpusEntry) -> Self {
        let p = &entry.problem;
        Self {
            id: p.id.clone(),
            description: p.description.clone(),
            entry_point: p.entry_point.clone(),
            signature: p.signature.clone(),
            reference_code: p.reference_code.clone(),
            gold_tests: p.gold_tests.as_ref().map(|tests| {
                tests
                    .iter()
                    .map(|t| GoldTestLine {
                        args: t.args.clone(),
                        expected: t.expected.text.clone(),
                    })
                    .collect()
            }),
            candidates: entry
                .candidates
                .iter()
                .map(|c| CandidateLine {
                    source: c.source.clone(),
                    provenance: provenance_text(c),
                })
                .collect(),
            input_domain: p.input_domain.clone(),
            initial_pass_rate: entry.initial_pass_rate,
            source_tag: (!p.source_tag.is_empty()).then(|| p.source_tag.clone()),
        }
    }
}

/// Parses a corpus from JSONL text; blank lines are ignored.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let parsed: CorpusLine = serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("corpus line {}: {e}", i + 1)))?;
            parsed.into_entry()
        })
        .collect()
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let file = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| Error::file(path, e))?);
        text.push('\n');
    }
    parse_corpus(&text)
}

pub fn corpus_to_string(entries: &[CorpusEntry]) -> Result<String> {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(&CorpusLine::from_entry(entry))?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `contents` to `path` via a sibling temp file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::file(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::file(path, e))?;
    tmp.persist(path).map_err(|e| Error::file(path, e.error))?;
    Ok(())
}
