//! Multi-round debugging validated against generated unit tests.
//!
//! Each round builds (or reuses) a UT suite, measures the current code, and
//! if some UT fails asks the model for one edit driven by the first failing
//! UT. The edit is kept only if the suite pass rate strictly rises;
//! otherwise the previous code is restored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{Gateway, GenRequest};
use crate::model::{CandidateCode, CorpusEntry, DebugTrace, Problem, RoundOutcome, RoundRecord, UnitTest};
use crate::prompts::{self, Bindings, TemplateName};
use crate::parallel::par_map;
use crate::runner::{pass_fraction, SubjectRunner};
use crate::testgen::{GenStrategy, StrategyKind, UtGenerator};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// When a fresh suite is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegenPolicy {
    /// Keep the suite until an edit is accepted.
    OnAccept,
    EveryRound,
}

impl RegenPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "on-accept" | "on_accept" => Ok(RegenPolicy::OnAccept),
            "every-round" | "every_round" => Ok(RegenPolicy::EveryRound),
            other => Err(Error::Config(format!("unknown regen policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackStyle {
    /// Feedback from the first failing generated UT, with backtracking.
    Ut,
    /// Self-critique only; every parsed edit is kept.
    NoUt,
}

impl FeedbackStyle {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ut" => Ok(FeedbackStyle::Ut),
            "no-ut" | "no_ut" => Ok(FeedbackStyle::NoUt),
            other => Err(Error::Config(format!("unknown feedback style `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugConfig {
    pub rounds: u32,
    pub strategy: GenStrategy,
    pub regen: RegenPolicy,
    pub feedback: FeedbackStyle,
    /// Leading component of every seed tag this engine emits.
    pub tag_prefix: String,
}

impl Default for DebugConfig {
    fn default() -> Self {
        Self {
            rounds: 3,
            strategy: GenStrategy::default(),
            regen: RegenPolicy::OnAccept,
            feedback: FeedbackStyle::Ut,
            tag_prefix: "debug".into(),
        }
    }
}

impl DebugConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        self.strategy.validate()
    }
}

pub struct Debugger<'a> {
    pub gateway: &'a Gateway,
    pub runner: &'a SubjectRunner,
    pub config: DebugConfig,
}

fn edit_request(messages: Vec<crate::gateway::ChatMessage>, tag: String) -> GenRequest {
    GenRequest::new(messages, 1, tag)
}

impl<'a> Debugger<'a> {
    pub fn new(gateway: &'a Gateway, runner: &'a SubjectRunner, config: DebugConfig) -> Self {
        Self {
            gateway,
            runner,
            config,
        }
    }

    fn tag(&self, problem: &Problem, rest: &str) -> String {
        format!("{}/{}/{rest}", self.config.tag_prefix, problem.id)
    }

    pub fn debug(&self, problem: &Problem, code: &CandidateCode) -> Result<DebugTrace> {
        self.config.validate()?;
        match self.config.feedback {
            FeedbackStyle::Ut => self.debug_with_uts(problem, code),
            FeedbackStyle::NoUt => self.debug_no_ut(problem, code),
        }
    }

    fn build_suite(&self, problem: &Problem, code: &CandidateCode, generation: u32) -> Result<Vec<UnitTest>> {
        let generator = UtGenerator::new(self.gateway, self.runner, self.config.strategy.clone());
        let conditioned = (self.config.strategy.kind != StrategyKind::Random).then_some(code);
        let report = generator.build_ut(problem, conditioned, &self.tag(problem, &format!("g{generation}")))?;
        Ok(report.suite)
    }

    /// Prompt for one edit driven by a failing UT.
    pub fn ut_edit_messages(
        &self,
        problem: &Problem,
        code: &CandidateCode,
        failing: &UnitTest,
        observed: &str,
    ) -> Result<Vec<crate::gateway::ChatMessage>> {
        let feedback = prompts::render_text(
            TemplateName::UtFeedback,
            &Bindings::new()
                .set("wrong_testcase_input", failing.call_text(&problem.entry_point))
                .set("wrong_testcase_output", observed)
                .set("wrong_testcase_expected", failing.expected.text.clone()),
        )?;
        fix_messages(problem, code, &feedback)
    }

    fn debug_with_uts(&self, problem: &Problem, initial: &CandidateCode) -> Result<DebugTrace> {
        let mut trace = DebugTrace {
            problem_id: problem.id.clone(),
            initial_code: initial.clone(),
            rounds: Vec::new(),
            final_code: initial.clone(),
            notes: Vec::new(),
        };
        let mut code = initial.clone();
        let mut suite: Option<Vec<UnitTest>> = None;
        let mut generation = 0u32;

        for round in 1..=self.config.rounds {
            if suite.is_none() || self.config.regen == RegenPolicy::EveryRound {
                generation += 1;
                suite = Some(self.build_suite(problem, &code, generation)?);
            }
            let current = suite.clone().unwrap_or_default();
            let mut record = RoundRecord {
                round,
                suite_generation: generation,
                suite: current.clone(),
                failing_used: None,
                failing_index: None,
                pre_pass: None,
                post_pass: None,
                accepted: false,
                outcome: RoundOutcome::NoTests,
                code_after: code.clone(),
            };
            if current.is_empty() {
                trace.notes.push(format!("no_tests: round {round} produced an empty suite"));
                trace.rounds.push(record);
                break;
            }

            let verdicts = self.runner.suite_verdicts(&code, problem, &current)?;
            let pre = pass_fraction(&verdicts);
            record.pre_pass = Some(pre);
            let Some(index) = verdicts.iter().position(|v| !v.passed()) else {
                record.outcome = RoundOutcome::NoFailingTests;
                trace.rounds.push(record);
                break;
            };
            let failing = current[index].clone();
            record.failing_used = Some(failing.clone());
            record.failing_index = Some(index);

            let messages = self.ut_edit_messages(problem, &code, &failing, &verdicts[index].observed_text())?;
            let completion = self
                .gateway
                .generate(&edit_request(messages, self.tag(problem, &format!("r{round}/edit"))))?
                .completions
                .remove(0);
            let edited = match prompts::parse_code_block(&completion, &problem.entry_point) {
                Ok(src) => CandidateCode::edited(src, round),
                Err(e) => {
                    log::debug!("{}: round {round} edit unparsed: {e}", problem.id);
                    record.outcome = RoundOutcome::EditUnparsed;
                    trace.rounds.push(record);
                    continue;
                }
            };
            let post = self.runner.pass_rate(&edited, problem, &current)?;
            record.post_pass = Some(post);
            if post > pre {
                record.accepted = true;
                record.outcome = RoundOutcome::Accepted;
                record.code_after = edited.clone();
                code = edited;
                if self.config.regen == RegenPolicy::OnAccept {
                    suite = None;
                }
            } else {
                record.outcome = RoundOutcome::Backtracked;
            }
            trace.rounds.push(record);
        }
        trace.final_code = code;
        Ok(trace)
    }

    fn debug_no_ut(&self, problem: &Problem, initial: &CandidateCode) -> Result<DebugTrace> {
        let mut trace = DebugTrace {
            problem_id: problem.id.clone(),
            initial_code: initial.clone(),
            rounds: Vec::new(),
            final_code: initial.clone(),
            notes: Vec::new(),
        };
        let mut code = initial.clone();
        for round in 1..=self.config.rounds {
            let critique_msgs = prompts::render(
                TemplateName::NoUtFeedback,
                &Bindings::new()
                    .set("description", problem.description.clone())
                    .set("code", code.source.clone()),
            )?;
            let critique = self
                .gateway
                .generate(&edit_request(critique_msgs, self.tag(problem, &format!("r{round}/critique"))))?
                .completions
                .remove(0);
            let mut record = RoundRecord {
                round,
                suite_generation: 0,
                suite: Vec::new(),
                failing_used: None,
                failing_index: None,
                pre_pass: None,
                post_pass: None,
                accepted: false,
                outcome: RoundOutcome::DeclaredCorrect,
                code_after: code.clone(),
            };
            if prompts::is_declared_correct(&critique) {
                trace.rounds.push(record);
                break;
            }
            let messages = fix_messages(problem, &code, &critique)?;
            let completion = self
                .gateway
                .generate(&edit_request(messages, self.tag(problem, &format!("r{round}/edit"))))?
                .completions
                .remove(0);
            match prompts::parse_code_block(&completion, &problem.entry_point) {
                Ok(src) => {
                    code = CandidateCode::edited(src, round);
                    record.accepted = true;
                    record.outcome = RoundOutcome::Accepted;
                    record.code_after = code.clone();
                }
                Err(_) => record.outcome = RoundOutcome::EditUnparsed,
            }
            trace.rounds.push(record);
        }
        trace.final_code = code;
        Ok(trace)
    }
}

fn fix_messages(
    problem: &Problem,
    code: &CandidateCode,
    feedback: &str,
) -> Result<Vec<crate::gateway::ChatMessage>> {
    prompts::render(
        TemplateName::CodeFix,
        &Bindings::new()
            .set("signature", problem.signature.clone())
            .set("description", problem.description.clone())
            .set("entry_point", problem.entry_point.clone())
            .set("code", code.source.clone())
            .set("feedback", feedback),
    )
}

/// One line of a debug output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub engine_version: String,
    pub config: DebugConfig,
    pub candidate_index: usize,
    pub trace: DebugTrace,
}

/// Item-level result of a corpus run: errors are kept per item.
pub type ItemResult<T> = std::result::Result<T, String>;

/// Debugs every candidate in `corpus` on a pool of `jobs` threads. Results
/// come back ordered by problem id, then candidate index.
pub fn debug_corpus(
    debugger: &Debugger<'_>,
    corpus: &[CorpusEntry],
    jobs: usize,
) -> Result<Vec<(String, usize, ItemResult<TraceRecord>)>> {
    let mut items: Vec<(&CorpusEntry, usize)> = corpus
        .iter()
        .flat_map(|e| (0..e.candidates.len()).map(move |i| (e, i)))
        .collect();
    items.sort_by(|a, b| (&a.0.problem.id, a.1).cmp(&(&b.0.problem.id, b.1)));
    let run = |&(entry, index): &(&CorpusEntry, usize)| {
        let result = debugger
            .debug(&entry.problem, &entry.candidates[index])
            .map(|trace| TraceRecord {
                engine_version: ENGINE_VERSION.into(),
                config: debugger.config.clone(),
                candidate_index: index,
                trace,
            });
        (entry.problem.id.clone(), index, result)
    };
    let results = par_map(jobs, &items, run)?;
    results
        .into_iter()
        .map(|(id, i, r)| match r {
            Ok(rec) => Ok((id, i, Ok(rec))),
            // configuration and cache errors abort the run; everything
            // else is charged to the item
            Err(e) if e.is_config() || matches!(e, Error::CacheMiss(_)) => Err(e),
            Err(e) => Ok((id, i, Err(e.to_string()))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_policy_flags() {
        assert_eq!(RegenPolicy::parse("on-accept").unwrap(), RegenPolicy::OnAccept);
        assert_eq!(RegenPolicy::parse("every-round").unwrap(), RegenPolicy::EveryRound);
        assert!(RegenPolicy::parse("never").is_err());
        assert_eq!(FeedbackStyle::parse("no-ut").unwrap(), FeedbackStyle::NoUt);
        assert!(FeedbackStyle::parse("x").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = DebugConfig::default();
        assert!(c.validate().is_ok());
        c.rounds = 0;
        assert!(c.validate().is_err());
    }
}
