//! Training-data bootstrapping and debug-corpus construction.

use std::collections::HashSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gateway::{ChatMessage, Gateway, GenRequest, Role};
use crate::literal;
use crate::model::{
    CandidateCode, CanonValue, CorpusEntry, Problem, Provenance, SftRecord, UnitTest, UtOrigin, ValueKind,
};
use crate::parallel::par_map;
use crate::prompts::{self, Bindings, TemplateName};
use crate::runner::{ExecStatus, SubjectRunner};

pub const CORRUPTIONS_PER_ITEM: usize = 2;
pub const INPUT_ATTEMPTS_PER_CORRUPTION: usize = 5;

// ---------------------------------------------------------------------------
// Source items

/// One instruction-tuning conversation from a source corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceItem {
    pub id: String,
    pub messages: Vec<ChatMessage>,
}

pub fn read_source(path: &Path) -> Result<Vec<SourceItem>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("source line {}: {e}", i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceFilter {
    pub require_keywords: Vec<String>,
    pub max_prompt_tokens: usize,
    pub require_clean_execution: bool,
}

impl Default for SourceFilter {
    fn default() -> Self {
        Self {
            require_keywords: vec!["python".into(), "def ".into()],
            max_prompt_tokens: 2000,
            require_clean_execution: true,
        }
    }
}

impl SourceFilter {
    pub fn validate(&self) -> Result<()> {
        if self.max_prompt_tokens == 0 {
            return Err(Error::Config("max_prompt_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Turns a conversation into a problem with reference code, or says why
    /// it was dropped. Keywords match case-insensitively anywhere in the
    /// conversation.
    pub fn accept(&self, item: &SourceItem, runner: &SubjectRunner) -> Result<Problem, String> {
        let all: String = item
            .messages
            .iter()
            .map(|m| m.content.to_lowercase())
            .collect::<Vec<_>>()
            .join("\n");
        for kw in &self.require_keywords {
            if !all.contains(&kw.to_lowercase()) {
                return Err(format!("missing keyword `{kw}`"));
            }
        }
        let prompt: Vec<&str> = item
            .messages
            .iter()
            .filter(|m| m.role != Role::Assistant)
            .map(|m| m.content.as_str())
            .collect();
        let tokens: usize = prompt.iter().map(|p| p.split_whitespace().count()).sum();
        if tokens > self.max_prompt_tokens {
            return Err(format!("prompt has {tokens} tokens"));
        }
        let description = item
            .messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.content.trim().to_string())
            .ok_or("no user message")?;
        let answer = item
            .messages
            .iter()
            .rev()
            .find(|m| m.role == Role::Assistant)
            .ok_or("no assistant message")?;
        let code = last_fenced_block(&answer.content).ok_or("no code block in the last answer")?;
        let (entry_point, signature) = first_def(&code).ok_or("no function definition")?;
        let problem = Problem {
            id: item.id.clone(),
            description,
            entry_point,
            signature,
            reference_code: Some(code),
            gold_tests: None,
            source_tag: "sft_source".into(),
            input_domain: None,
        };
        if self.require_clean_execution {
            let reference = problem.reference().map_err(|e| e.to_string())?;
            if !loads_cleanly(runner, &problem, &reference) {
                return Err("reference code does not load".into());
            }
        }
        Ok(problem)
    }
}

fn last_fenced_block(text: &str) -> Option<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(body) => blocks.push(body.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(body) = current.as_mut() {
            body.push(line);
        }
    }
    blocks.into_iter().rev().find(|b| !b.trim().is_empty())
}

/// Name and `name(params)` of the first top-level `def`.
fn first_def(code: &str) -> Option<(String, String)> {
    for line in code.lines() {
        let Some(rest) = line.strip_prefix("def ") else { continue };
        let open = rest.find('(')?;
        let name = rest[..open].trim().to_string();
        let close = literal::matching_close(rest, open).ok()?;
        return Some((name, rest[..=close].to_string()));
    }
    None
}

/// Loading and calling with no arguments may raise, but must not fail to
/// load or hang.
fn loads_cleanly(runner: &SubjectRunner, problem: &Problem, code: &CandidateCode) -> bool {
    matches!(
        runner.call(code, problem, &[]).status,
        ExecStatus::Ok | ExecStatus::Exception
    )
}

// ---------------------------------------------------------------------------
// SFT bootstrapping

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SftReport {
    pub records: Vec<SftRecord>,
    /// `(item id, reason)` for every item that produced nothing.
    pub dropped: Vec<(String, String)>,
}

/// Generates corruption-based training records for each source item.
pub fn bootstrap_sft(
    gateway: &Gateway,
    runner: &SubjectRunner,
    items: &[SourceItem],
    filter: &SourceFilter,
    seed: u64,
    jobs: usize,
) -> Result<SftReport> {
    filter.validate()?;
    let mut items: Vec<&SourceItem> = items.iter().collect();
    items.sort_by(|a, b| a.id.cmp(&b.id));
    let results = par_map(jobs, &items, |item| -> Result<Result<Vec<SftRecord>, String>> {
        let problem = match filter.accept(item, runner) {
            Ok(p) => p,
            Err(reason) => return Ok(Err(format!("filtered: {reason}"))),
        };
        match bootstrap_item(gateway, runner, &problem, seed) {
            Ok((0, _)) => Ok(Err("no usable corruption".into())),
            Ok((_, records)) if records.is_empty() => Ok(Err("no failing unit tests".into())),
            Ok((_, records)) => Ok(Ok(records)),
            Err(e) if e.is_config() || matches!(e, Error::CacheMiss(_)) => Err(e),
            Err(e) => Ok(Err(e.to_string())),
        }
    })?;
    let mut report = SftReport::default();
    for (item, result) in items.iter().zip(results) {
        match result? {
            Ok(records) => report.records.extend(records),
            Err(reason) => {
                log::info!("sft item {} dropped: {reason}", item.id);
                report.dropped.push((item.id.clone(), reason));
            }
        }
    }
    Ok(report)
}

fn problem_bindings(problem: &Problem) -> Bindings {
    Bindings::new()
        .set("signature", problem.signature.clone())
        .set("description", problem.description.clone())
        .set("entry_point", problem.entry_point.clone())
}

/// Corrupted versions of the reference that load, differ textually from it
/// and from each other.
pub fn corrupt_reference(
    gateway: &Gateway,
    runner: &SubjectRunner,
    problem: &Problem,
    tag: &str,
) -> Result<Vec<CandidateCode>> {
    let reference = problem.reference()?;
    let messages = prompts::render(
        TemplateName::Corruption,
        &problem_bindings(problem).set("code", reference.source.clone()),
    )?;
    let completions = gateway
        .generate(&GenRequest::new(messages, CORRUPTIONS_PER_ITEM, format!("{tag}/corrupt")))?
        .completions;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for completion in completions {
        let Ok(source) = prompts::parse_code_block(&completion, &problem.entry_point) else {
            continue;
        };
        if source.trim() == reference.source.trim() || !seen.insert(source.trim().to_string()) {
            continue;
        }
        let code = CandidateCode::new(source, Provenance::Perturbed);
        if loads_cleanly(runner, problem, &code) {
            out.push(code);
        }
    }
    Ok(out)
}

/// Keeps the reasoning up to and including the last `Arguments:` line of an
/// input-sampling reply.
fn input_section(completion: &str) -> String {
    let start = completion.rfind("Arguments:").unwrap_or(0);
    let end = completion[start..]
        .find('\n')
        .map(|i| start + i)
        .unwrap_or(completion.len());
    completion[..end].trim_end().to_string()
}

/// Training completion: the input reasoning, then the rationale, then the
/// reference output as the final answer.
pub fn assemble_completion(input_reply: &str, rationale: &str, expected: &str) -> String {
    format!(
        "{}\n\n### Output\n\n{}\n\nOutput: {expected}",
        input_section(input_reply),
        rationale.trim()
    )
}

/// Usable corruption count and the records built from them.
fn bootstrap_item(
    gateway: &Gateway,
    runner: &SubjectRunner,
    problem: &Problem,
    seed: u64,
) -> Result<(usize, Vec<SftRecord>)> {
    let tag = format!("sft/s{seed}/{}", problem.id);
    let reference = problem.reference()?;
    let corruptions = corrupt_reference(gateway, runner, problem, &tag)?;
    let usable = corruptions.len();
    let mut records = Vec::new();
    for (c, buggy) in corruptions.into_iter().enumerate() {
        let prompt_messages = prompts::render(
            TemplateName::UtgenFailing,
            &problem_bindings(problem).set("code", buggy.source.clone()),
        )?;
        let prompt = prompt_messages[0].content.clone();
        let mut kept: Vec<(String, Vec<String>, CanonValue)> = Vec::new();
        let mut seen = HashSet::new();
        for attempt in 0..INPUT_ATTEMPTS_PER_CORRUPTION {
            let reply = gateway
                .generate(&GenRequest::new(
                    prompt_messages.clone(),
                    1,
                    format!("{tag}/c{c}/input/{attempt}"),
                ))?
                .completions
                .remove(0);
            let Ok(args) = prompts::parse_arguments(&reply, &problem.entry_point) else {
                continue;
            };
            let truth = runner.call(&reference, problem, &args);
            let value = match (truth.status, truth.value) {
                (ExecStatus::Ok, Some(v)) if v.kind != ValueKind::Other => v,
                (ExecStatus::InfraError, _) => return Err(Error::Infra(truth.error_msg.unwrap_or_default())),
                _ => continue,
            };
            let verdict = runner.check_expected(&buggy, problem, &args, &value.text);
            if verdict.status == ExecStatus::InfraError {
                return Err(Error::Infra(verdict.error_msg.unwrap_or_default()));
            }
            let key: Vec<String> = args.iter().map(|a| literal::canonical_literal(a)).collect();
            if !verdict.passed() && seen.insert(key) {
                kept.push((reply, args, value));
            }
        }
        for (t, (reply, args, value)) in kept.into_iter().enumerate() {
            let messages = prompts::render(
                TemplateName::Rationalization,
                &problem_bindings(problem)
                    .set("unit_input", args.join(", "))
                    .set("unit_output", value.text.clone()),
            )?;
            let rationale_reply = gateway
                .generate(&GenRequest::new(messages, 1, format!("{tag}/c{c}/ut{t}/rationale")))?
                .completions
                .remove(0);
            let rationale = prompts::parse_reasoning(&rationale_reply);
            let completion = assemble_completion(&reply, &rationale, &value.text);
            records.push(SftRecord {
                prompt: prompt.clone(),
                completion,
                problem_id: problem.id.clone(),
                buggy_code: buggy.clone(),
                unit_test: UnitTest {
                    args,
                    expected: value,
                    rationale: Some(rationale),
                    votes: None,
                    origin: UtOrigin::Oracle,
                },
            });
        }
    }
    Ok((usable, records))
}

/// Re-runs every record: the UT must fail on the buggy code, the reference
/// must produce the expected value, and the completion must parse back to
/// the same UT. Returns one message per violation.
pub fn verify_sft_records(
    runner: &SubjectRunner,
    problems: &[Problem],
    records: &[SftRecord],
) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let Some(problem) = problems.iter().find(|p| p.id == r.problem_id) else {
            out.push(format!("record {i}: unknown problem {}", r.problem_id));
            continue;
        };
        let reference = problem.reference()?;
        let on_buggy = runner.check(&r.buggy_code, problem, &r.unit_test);
        let on_reference = runner.check(&reference, problem, &r.unit_test);
        for o in [&on_buggy, &on_reference] {
            if o.status == ExecStatus::InfraError {
                return Err(Error::Infra(o.error_msg.clone().unwrap_or_default()));
            }
        }
        if on_buggy.passed() {
            out.push(format!("record {i} ({}): UT passes on the buggy code", r.problem_id));
        }
        if !on_reference.passed() {
            out.push(format!("record {i} ({}): expected differs from the reference", r.problem_id));
        }
        match prompts::parse_unit_test(&r.completion, &problem.entry_point) {
            Ok(parsed)
                if parsed.args == r.unit_test.args
                    && parsed.output.as_deref() == Some(r.unit_test.expected.text.as_str()) => {}
            _ => out.push(format!("record {i} ({}): completion does not parse back", r.problem_id)),
        }
    }
    Ok(out)
}

/// Problems recovered from source items that pass `filter`.
pub fn source_problems(items: &[SourceItem], filter: &SourceFilter, runner: &SubjectRunner) -> Vec<Problem> {
    items.iter().filter_map(|i| filter.accept(i, runner).ok()).collect()
}

// ---------------------------------------------------------------------------
// Debug split construction

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Fix,
    FixHard,
}

impl SplitKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fix" => Ok(SplitKind::Fix),
            "hard" | "fix_hard" | "fix-hard" => Ok(SplitKind::FixHard),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub samples_per_problem: usize,
    /// Inclusive gold pass-rate band for `fix_hard`, resolved to whole
    /// percentage points.
    pub hard_band: (f64, f64),
}

impl SplitSpec {
    pub fn new(kind: SplitKind) -> Self {
        Self {
            kind,
            samples_per_problem: 16,
            hard_band: (0.50, 0.95),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.hard_band;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
            return Err(Error::Config(format!("bad hard band [{lo}, {hi}]")));
        }
        if self.samples_per_problem == 0 {
            return Err(Error::Config("samples_per_problem must be positive".into()));
        }
        Ok(())
    }

    fn band_percent(&self) -> (u64, u64) {
        let (lo, hi) = self.hard_band;
        ((lo * 100.0).round() as u64, (hi * 100.0).round() as u64)
    }

    /// Eligibility of a candidate passing `passed` of `total` gold tests.
    pub fn eligible(&self, passed: usize, total: usize) -> bool {
        if total == 0 || passed >= total {
            return false;
        }
        match self.kind {
            SplitKind::Fix => true,
            SplitKind::FixHard => {
                let (lo, hi) = self.band_percent();
                let scaled = passed as u64 * 100;
                scaled >= lo * total as u64 && scaled <= hi * total as u64
            }
        }
    }
}

/// Per-problem RNG derived from the run seed and the problem id.
pub fn problem_rng(seed: u64, problem_id: &str) -> ChaCha8Rng {
    let digest = Sha256::digest(format!("{seed}/{problem_id}").as_bytes());
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitReport {
    pub corpus: Vec<CorpusEntry>,
    pub dropped: Vec<(String, String)>,
}

/// Scores each pooled candidate on the gold tests and samples one eligible
/// candidate per problem.
pub fn build_debug_split(
    runner: &SubjectRunner,
    pools: &[CorpusEntry],
    spec: &SplitSpec,
    seed: u64,
    jobs: usize,
) -> Result<SplitReport> {
    spec.validate()?;
    let mut pools: Vec<&CorpusEntry> = pools.iter().collect();
    pools.sort_by(|a, b| a.problem.id.cmp(&b.problem.id));
    let results = par_map(jobs, &pools, |entry| -> Result<Result<CorpusEntry, String>> {
        let problem = &entry.problem;
        let gold = match problem.gold() {
            Ok(g) => g,
            Err(e) => return Ok(Err(e.to_string())),
        };
        if entry.candidates.is_empty() {
            return Ok(Err("empty pool".into()));
        }
        let mut eligible = Vec::new();
        for candidate in entry.candidates.iter().take(spec.samples_per_problem) {
            let verdicts = runner.suite_verdicts(candidate, problem, gold)?;
            let passed = verdicts.iter().filter(|v| v.passed()).count();
            if spec.eligible(passed, gold.len()) {
                eligible.push((candidate, passed as f64 / gold.len() as f64));
            }
        }
        if eligible.is_empty() {
            return Ok(Err("no eligible candidate".into()));
        }
        let pick = problem_rng(seed, &problem.id).random_range(0..eligible.len());
        let (candidate, rate) = eligible[pick];
        Ok(Ok(CorpusEntry {
            problem: problem.clone(),
            candidates: vec![candidate.clone()],
            initial_pass_rate: Some(rate),
        }))
    })?;
    let mut report = SplitReport::default();
    for (entry, result) in pools.iter().zip(results) {
        match result? {
            Ok(e) => report.corpus.push(e),
            Err(reason) => {
                log::info!("problem {} dropped from split: {reason}", entry.problem.id);
                report.dropped.push((entry.problem.id.clone(), reason));
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Assert-style test extraction

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub tests: Vec<UnitTest>,
    pub skipped: usize,
}

fn strip_wrapping_parens(mut text: &str) -> &str {
    loop {
        text = text.trim();
        if text.starts_with('(') && literal::matching_close(text, 0).ok() == Some(text.len() - 1) {
            text = &text[1..text.len() - 1];
        } else {
            return text;
        }
    }
}

fn parse_assert(line: &str, entry_point: &str) -> Option<UnitTest> {
    let body = line.trim().strip_prefix("assert")?;
    if !body.starts_with(|c: char| c.is_whitespace() || c == '(') {
        return None;
    }
    // drop a trailing `, message`
    let pieces = literal::split_top_level(body.trim()).ok()?;
    let body = strip_wrapping_parens(pieces.first()?);
    // `(f(x)) == y`: the call itself may sit in parentheses
    let (call, tail) = match body.starts_with('(') {
        true => {
            let close = literal::matching_close(body, 0).ok()?;
            (strip_wrapping_parens(&body[..=close]), &body[close + 1..])
        }
        false => (body, ""),
    };
    let rest = call.strip_prefix(entry_point)?;
    if !rest.starts_with('(') {
        return None;
    }
    let close = literal::matching_close(rest, 0).ok()?;
    let args = literal::split_top_level(&rest[1..close]).ok()?;
    let after = if tail.is_empty() { &rest[close + 1..] } else { tail };
    if !tail.is_empty() && !rest[close + 1..].trim().is_empty() {
        return None;
    }
    let expected = after.trim().strip_prefix("==")?.trim();
    if expected.is_empty() || expected.starts_with('=') {
        return None;
    }
    Some(UnitTest::new(args, strip_wrapping_parens_keep_tuples(expected), UtOrigin::Gold))
}

/// Removes redundant parentheses around a non-tuple expected value.
fn strip_wrapping_parens_keep_tuples(text: &str) -> String {
    let inner = strip_wrapping_parens(text);
    match literal::split_top_level(inner) {
        Ok(parts) if parts.len() == 1 && !inner.trim_end().ends_with(',') => inner.to_string(),
        _ => text.trim().to_string(),
    }
}

/// Extracts `assert entry(args) == expected` lines. Every other non-blank
/// line is skipped and counted.
pub fn extract_assert_tests(source: &str, entry_point: &str) -> Result<Extraction> {
    let mut tests = Vec::new();
    let mut skipped = 0;
    for line in source.lines().filter(|l| !l.trim().is_empty()) {
        match parse_assert(line, entry_point) {
            Some(ut) => tests.push(ut),
            None => skipped += 1,
        }
    }
    if tests.is_empty() {
        return Err(Error::ExtractionFailed(format!(
            "no `assert {entry_point}(...) == ...` lines ({skipped} skipped)"
        )));
    }
    Ok(Extraction { tests, skipped })
}
