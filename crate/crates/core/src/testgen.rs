//! Unit test generation strategies and suite building.
//!
//! A suite is built slot by slot: sample an input, predict its output with
//! `k` self-consistency samples, keep the UT if the modal answer holds at
//! least `ceil(vote_floor * k)` votes. At most `3n` slots are tried and the
//! loop stops as soon as `n` distinct UTs are held.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{ChatMessage, Gateway, GenRequest};
use crate::literal;
use crate::model::{dedup_key, CandidateCode, CanonValue, Problem, UnitTest, UtOrigin, ValueKind};
use crate::prompts::{self, Bindings, TemplateName};
use crate::runner::{ExecStatus, SubjectRunner};

/// Completion attempts per input slot before it is given up.
pub const INPUT_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Inputs sampled from the description alone.
    Random,
    /// Failing-UT prompt conditioned on the code under test.
    Prompted,
    /// Same prompt, served by a model trained for the task.
    Utgen,
    /// Test-only: reads the reference solution and the input domain.
    Oracle,
}

impl StrategyKind {
    pub fn origin(self) -> UtOrigin {
        match self {
            StrategyKind::Random => UtOrigin::GeneratedRandom,
            StrategyKind::Prompted => UtOrigin::GeneratedPrompted,
            StrategyKind::Utgen => UtOrigin::GeneratedUtgen,
            StrategyKind::Oracle => UtOrigin::Oracle,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(StrategyKind::Random),
            "prompted" => Ok(StrategyKind::Prompted),
            "utgen" => Ok(StrategyKind::Utgen),
            "oracle" => Ok(StrategyKind::Oracle),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenStrategy {
    pub kind: StrategyKind,
    /// Target suite size.
    pub n: usize,
    /// Self-consistency samples per input.
    pub k: usize,
    pub vote_floor: f64,
    /// Model id override sent with every request of this strategy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

impl Default for GenStrategy {
    fn default() -> Self {
        Self {
            kind: StrategyKind::Prompted,
            n: 3,
            k: 8,
            vote_floor: 0.5,
            model: None,
        }
    }
}

impl GenStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 {
            return Err(Error::Config("n and k must be at least 1".into()));
        }
        if !(self.vote_floor > 0.0 && self.vote_floor <= 1.0) {
            return Err(Error::Config("vote_floor must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Minimum modal tally for acceptance.
    pub fn vote_threshold(&self) -> usize {
        vote_threshold(self.k, self.vote_floor)
    }
}

pub fn vote_threshold(k: usize, floor: f64) -> usize {
    // guard against 0.5 * 8 landing a hair above 4.0
    ((floor * k as f64) - 1e-9).ceil().max(1.0) as usize
}

// ---------------------------------------------------------------------------
// Voting

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteGroup {
    /// Answer text of the first sample in the group.
    pub representative: String,
    pub first_index: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    AllUnparsed,
    BelowFloor,
    InvalidOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tally {
    pub groups: Vec<VoteGroup>,
    /// Index into `groups` of the modal answer, if any answer parsed.
    pub modal: Option<usize>,
    pub accepted: bool,
}

impl Tally {
    pub fn modal_group(&self) -> Option<&VoteGroup> {
        self.modal.map(|i| &self.groups[i])
    }
}

/// Groups answers and picks the mode.
///
/// Answers group by canonical literal text; when any answer holds a float,
/// a new answer also joins the first group whose representative `equal`
/// accepts. Ties go to the group whose first sample came earliest.
pub fn tally_votes<F>(answers: &[Option<String>], threshold: usize, mut equal: F) -> Result<Tally>
where
    F: FnMut(&str, &str) -> Result<bool>,
{
    let float_mode = answers.iter().flatten().any(|a| literal::contains_float(a));
    let mut groups: Vec<VoteGroup> = Vec::new();
    let mut keys: Vec<String> = Vec::new();
    for (index, answer) in answers.iter().enumerate() {
        let Some(answer) = answer else { continue };
        let key = literal::canonical_literal(answer);
        let mut slot = keys.iter().position(|k| *k == key);
        if slot.is_none() && float_mode {
            for (i, g) in groups.iter().enumerate() {
                if equal(&g.representative, answer)? {
                    slot = Some(i);
                    break;
                }
            }
        }
        match slot {
            Some(i) => groups[i].count += 1,
            None => {
                groups.push(VoteGroup {
                    representative: answer.clone(),
                    first_index: index,
                    count: 1,
                });
                keys.push(key);
            }
        }
    }
    let mut modal: Option<usize> = None;
    for (i, g) in groups.iter().enumerate() {
        if modal.is_none_or(|m| g.count > groups[m].count) {
            modal = Some(i);
        }
    }
    let accepted = modal.is_some_and(|m| groups[m].count >= threshold);
    Ok(Tally {
        groups,
        modal,
        accepted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum VoteOutcome {
    Accepted {
        value: CanonValue,
        votes: usize,
        rationale: Option<String>,
    },
    Rejected {
        reason: RejectReason,
        tally: Tally,
    },
}

// ---------------------------------------------------------------------------
// Slot sampling

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum InputSample {
    Args { args: Vec<String> },
    SlotFailed { attempts: usize, last_error: String },
}

/// Accounting for one suite build.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    pub suite: Vec<UnitTest>,
    pub slots_tried: usize,
    pub input_requests: usize,
    pub output_samples: usize,
    pub slot_failures: usize,
    pub rejections: usize,
    pub duplicates: usize,
}

/// Generates UTs for one problem with one strategy.
pub struct UtGenerator<'a> {
    pub gateway: &'a Gateway,
    pub runner: &'a SubjectRunner,
    pub strategy: GenStrategy,
}

fn problem_bindings(problem: &Problem) -> Bindings {
    Bindings::new()
        .set("signature", problem.signature.clone())
        .set("description", problem.description.clone())
        .set("entry_point", problem.entry_point.clone())
}

/// Assistant prefix that pins the input so completions start at the output.
pub fn output_prefix(entry_point: &str, args: &[String]) -> String {
    format!(
        "## Unit Test\n\n### Input Arguments\n\nArguments: {entry_point}({})\n\n### Output\n\n",
        args.join(", ")
    )
}

/// Chain of thought preceding the final `Output:` line.
fn rationale_of(completion: &str) -> Option<String> {
    let end = completion.rfind("Output:")?;
    let text = completion[..end].trim();
    (!text.is_empty()).then(|| text.to_string())
}

impl<'a> UtGenerator<'a> {
    pub fn new(gateway: &'a Gateway, runner: &'a SubjectRunner, strategy: GenStrategy) -> Self {
        Self {
            gateway,
            runner,
            strategy,
        }
    }

    fn request(&self, messages: Vec<ChatMessage>, n: usize, tag: String) -> GenRequest {
        let mut req = GenRequest::new(messages, n, tag);
        req.model = self.strategy.model.clone();
        req
    }

    fn check_code_arg(&self, buggy: Option<&CandidateCode>) -> Result<()> {
        match (self.strategy.kind, buggy) {
            (StrategyKind::Random, Some(_)) => Err(Error::Config(
                "the random strategy must not see the code under test".into(),
            )),
            (StrategyKind::Prompted | StrategyKind::Utgen, None) => Err(Error::Config(
                "prompted strategies need the code under test".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Input-sampling messages for this strategy.
    pub fn input_messages(&self, problem: &Problem, buggy: Option<&CandidateCode>) -> Result<Vec<ChatMessage>> {
        match (self.strategy.kind, buggy) {
            (StrategyKind::Random, _) => prompts::render(TemplateName::RandomUtInput, &problem_bindings(problem)),
            (_, Some(code)) => prompts::render(
                TemplateName::UtgenFailing,
                &problem_bindings(problem).set("code", code.source.clone()),
            ),
            (_, None) => Err(Error::Config("no code to condition on".into())),
        }
    }

    /// Output-prediction messages for a fixed input.
    pub fn output_messages(
        &self,
        problem: &Problem,
        buggy: Option<&CandidateCode>,
        args: &[String],
    ) -> Result<Vec<ChatMessage>> {
        match (self.strategy.kind, buggy) {
            (StrategyKind::Random, _) => prompts::render(
                TemplateName::RandomUtOutput,
                &problem_bindings(problem).set("unit_input", args.join(", ")),
            ),
            (_, Some(code)) => {
                let mut messages = prompts::render(
                    TemplateName::UtgenFailing,
                    &problem_bindings(problem).set("code", code.source.clone()),
                )?;
                messages.push(ChatMessage::assistant(output_prefix(&problem.entry_point, args)));
                Ok(messages)
            }
            (_, None) => Err(Error::Config("no code to condition on".into())),
        }
    }

    /// Samples one input list, retrying on parse failures and literals the
    /// harness cannot evaluate.
    pub fn sample_input(
        &self,
        problem: &Problem,
        buggy: Option<&CandidateCode>,
        tag: &str,
    ) -> Result<(InputSample, usize)> {
        self.check_code_arg(buggy)?;
        let messages = self.input_messages(problem, buggy)?;
        let mut last_error = String::new();
        for attempt in 0..INPUT_ATTEMPTS {
            let req = self.request(messages.clone(), 1, format!("{tag}/input/{attempt}"));
            let completion = self.gateway.generate(&req)?.completions.remove(0);
            let args = match prompts::parse_arguments(&completion, &problem.entry_point) {
                Ok(args) => args,
                Err(e) => {
                    last_error = e.to_string();
                    continue;
                }
            };
            let probe = self.runner.check_args(&args);
            match probe.status {
                ExecStatus::ArgError => {
                    last_error = format!(
                        "argument literal failed to evaluate: {}",
                        probe.error_msg.unwrap_or_default()
                    );
                }
                ExecStatus::InfraError => {
                    return Err(Error::Infra(probe.error_msg.unwrap_or_default()));
                }
                _ => return Ok((InputSample::Args { args }, attempt + 1)),
            }
        }
        Ok((
            InputSample::SlotFailed {
                attempts: INPUT_ATTEMPTS,
                last_error,
            },
            INPUT_ATTEMPTS,
        ))
    }

    /// Predicts the output for `args` by majority vote over `k` samples.
    pub fn predict_output_sc(
        &self,
        problem: &Problem,
        buggy: Option<&CandidateCode>,
        args: &[String],
        tag: &str,
    ) -> Result<VoteOutcome> {
        let k = self.strategy.k;
        let messages = self.output_messages(problem, buggy, args)?;
        let completions = self
            .gateway
            .generate(&self.request(messages, k, format!("{tag}/output")))?
            .completions;
        let answers: Vec<Option<String>> = completions.iter().map(|c| prompts::parse_output(c)).collect();
        let tally = tally_votes(&answers, self.strategy.vote_threshold(), |a, b| {
            self.runner.literals_equal(a, b)
        })?;
        let Some(group) = tally.modal_group().cloned() else {
            return Ok(VoteOutcome::Rejected {
                reason: RejectReason::AllUnparsed,
                tally,
            });
        };
        if !tally.accepted {
            return Ok(VoteOutcome::Rejected {
                reason: RejectReason::BelowFloor,
                tally,
            });
        }
        let canon = self.runner.canonicalize_literal(&group.representative);
        match (canon.status, canon.value) {
            (ExecStatus::Ok, Some(value)) if value.kind != ValueKind::Other => Ok(VoteOutcome::Accepted {
                value,
                votes: group.count,
                rationale: rationale_of(&completions[group.first_index]),
            }),
            (ExecStatus::InfraError, _) => Err(Error::Infra(canon.error_msg.unwrap_or_default())),
            _ => Ok(VoteOutcome::Rejected {
                reason: RejectReason::InvalidOutput,
                tally,
            }),
        }
    }

    /// One slot: input then voted output. `None` when the slot fails or the
    /// vote is rejected.
    pub fn sample_one(
        &self,
        problem: &Problem,
        buggy: Option<&CandidateCode>,
        tag: &str,
        report: &mut BuildReport,
    ) -> Result<Option<UnitTest>> {
        if self.strategy.kind == StrategyKind::Oracle {
            report.slots_tried += 1;
            return oracle_slot(self.runner, problem, buggy);
        }
        report.slots_tried += 1;
        let (sample, requests) = self.sample_input(problem, buggy, tag)?;
        report.input_requests += requests;
        let args = match sample {
            InputSample::Args { args } => args,
            InputSample::SlotFailed { last_error, .. } => {
                log::debug!("{tag}: slot failed: {last_error}");
                report.slot_failures += 1;
                return Ok(None);
            }
        };
        report.output_samples += self.strategy.k;
        match self.predict_output_sc(problem, buggy, &args, tag)? {
            VoteOutcome::Accepted {
                value,
                votes,
                rationale,
            } => Ok(Some(UnitTest {
                args,
                expected: value,
                rationale,
                votes: Some(votes as u32),
                origin: self.strategy.kind.origin(),
            })),
            VoteOutcome::Rejected { reason, .. } => {
                log::debug!("{tag}: output vote rejected ({reason:?})");
                report.rejections += 1;
                Ok(None)
            }
        }
    }

    /// Builds a suite of up to `n` distinct UTs from at most `3n` slots.
    pub fn build_ut(&self, problem: &Problem, buggy: Option<&CandidateCode>, tag: &str) -> Result<BuildReport> {
        self.strategy.validate()?;
        self.check_code_arg(buggy)?;
        if self.strategy.kind == StrategyKind::Oracle {
            let code = match buggy {
                Some(code) => code.clone(),
                None => problem.reference()?,
            };
            let suite = oracle_suite(self.runner, problem, &code, self.strategy.n)?;
            return Ok(BuildReport {
                slots_tried: suite.len(),
                suite,
                ..BuildReport::default()
            });
        }
        let n = self.strategy.n;
        let mut report = BuildReport::default();
        let mut seen = HashSet::new();
        for slot in 0..3 * n {
            let slot_tag = format!("{tag}/slot{slot}");
            if let Some(ut) = self.sample_one(problem, buggy, &slot_tag, &mut report)? {
                if seen.insert(dedup_key(&ut)) {
                    report.suite.push(ut);
                } else {
                    report.duplicates += 1;
                }
            }
            if report.suite.len() >= n {
                break;
            }
        }
        Ok(report)
    }
}

// ---------------------------------------------------------------------------
// Oracle strategy

fn oracle_domain(problem: &Problem) -> Result<Vec<Vec<String>>> {
    if let Some(domain) = &problem.input_domain {
        return Ok(domain.clone());
    }
    match &problem.gold_tests {
        Some(tests) => Ok(tests.iter().map(|t| t.args.clone()).collect()),
        None => Err(Error::OracleUnavailable(problem.id.clone())),
    }
}

/// Outcome of running one input through reference and candidate.
enum OracleProbe {
    /// The reference rejects the input; not a valid UT.
    Invalid,
    Agree(UnitTest),
    Diverge(UnitTest),
}

fn oracle_probe(
    runner: &SubjectRunner,
    problem: &Problem,
    reference: &CandidateCode,
    code: Option<&CandidateCode>,
    args: &[String],
) -> Result<OracleProbe> {
    let expected = runner.call(reference, problem, args);
    let value = match (expected.status, expected.value) {
        (ExecStatus::Ok, Some(v)) if v.kind != ValueKind::Other => v,
        (ExecStatus::InfraError, _) => return Err(Error::Infra(expected.error_msg.unwrap_or_default())),
        _ => return Ok(OracleProbe::Invalid),
    };
    let ut = UnitTest {
        args: args.to_vec(),
        expected: value,
        rationale: None,
        votes: None,
        origin: UtOrigin::Oracle,
    };
    let Some(code) = code.filter(|c| c.source != reference.source) else {
        return Ok(OracleProbe::Agree(ut));
    };
    let verdict = runner.check(code, problem, &ut);
    if verdict.status == ExecStatus::InfraError {
        return Err(Error::Infra(verdict.error_msg.unwrap_or_default()));
    }
    Ok(if verdict.passed() {
        OracleProbe::Agree(ut)
    } else {
        OracleProbe::Diverge(ut)
    })
}

/// First diverging input with its reference output, else the first valid
/// input.
pub fn oracle_slot(
    runner: &SubjectRunner,
    problem: &Problem,
    code: Option<&CandidateCode>,
) -> Result<Option<UnitTest>> {
    let reference = problem.reference()?;
    let mut fallback = None;
    for args in oracle_domain(problem)? {
        match oracle_probe(runner, problem, &reference, code, &args)? {
            OracleProbe::Diverge(ut) => return Ok(Some(ut)),
            OracleProbe::Agree(ut) => {
                fallback.get_or_insert(ut);
                if code.is_none_or(|c| c.source == reference.source) {
                    break;
                }
            }
            OracleProbe::Invalid => {}
        }
    }
    Ok(fallback)
}

/// Up to `n` correct UTs, diverging ones first, in domain order.
pub fn oracle_suite(
    runner: &SubjectRunner,
    problem: &Problem,
    code: &CandidateCode,
    n: usize,
) -> Result<Vec<UnitTest>> {
    let reference = problem.reference()?;
    let mut diverging = Vec::new();
    let mut agreeing = Vec::new();
    for args in oracle_domain(problem)? {
        match oracle_probe(runner, problem, &reference, Some(code), &args)? {
            OracleProbe::Diverge(ut) => diverging.push(ut),
            OracleProbe::Agree(ut) => agreeing.push(ut),
            OracleProbe::Invalid => {}
        }
        if diverging.len() >= n || (code.source == reference.source && agreeing.len() >= n) {
            break;
        }
    }
    diverging.extend(agreeing);
    diverging.truncate(n);
    Ok(diverging)
}
