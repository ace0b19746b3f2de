//! Intrinsic UT-generator metrics, pass@1, and best-of-N reranking.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::Gateway;
use crate::model::{dedup_key, CandidateCode, CorpusEntry, Problem, UnitTest, ValueKind};
use crate::parallel::par_map;
use crate::runner::{ExecStatus, SubjectRunner};
use crate::testgen::{oracle_slot, oracle_suite, BuildReport, GenStrategy, StrategyKind, UtGenerator};

/// How one generated UT fared against the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtJudgement {
    pub ut: Option<UnitTest>,
    /// The input makes the buggy code disagree with the reference.
    pub attacked: bool,
    /// The expected output equals the reference output on that input.
    pub output_correct: bool,
}

impl UtJudgement {
    fn failed() -> Self {
        Self {
            ut: None,
            attacked: false,
            output_correct: false,
        }
    }
}

/// Scores `ut` against the reference and the buggy code.
pub fn judge_ut(
    runner: &SubjectRunner,
    problem: &Problem,
    buggy: &CandidateCode,
    ut: UnitTest,
) -> Result<UtJudgement> {
    let reference = problem.reference()?;
    let truth = runner.call(&reference, problem, &ut.args);
    let truth = match (truth.status, truth.value) {
        (ExecStatus::Ok, Some(v)) if v.kind != ValueKind::Other => v,
        (ExecStatus::InfraError, _) => return Err(Error::Infra(truth.error_msg.unwrap_or_default())),
        // the reference rejects the input: neither attacking nor correct
        _ => {
            return Ok(UtJudgement {
                ut: Some(ut),
                attacked: false,
                output_correct: false,
            })
        }
    };
    let on_buggy = runner.check_expected(buggy, problem, &ut.args, &truth.text);
    let on_expected = runner.check_expected(&reference, problem, &ut.args, &ut.expected.text);
    for o in [&on_buggy, &on_expected] {
        if o.status == ExecStatus::InfraError {
            return Err(Error::Infra(o.error_msg.clone().unwrap_or_default()));
        }
    }
    Ok(UtJudgement {
        ut: Some(ut),
        attacked: !on_buggy.passed(),
        output_correct: on_expected.passed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemIntrinsic {
    pub problem_id: String,
    /// One judgement per run.
    pub runs: Vec<UtJudgement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicReport {
    pub strategy: StrategyKind,
    pub runs: usize,
    pub problems: usize,
    pub attack_rate: f64,
    pub output_accuracy: f64,
    pub acc_and_attack: f64,
    pub per_problem: Vec<ProblemIntrinsic>,
}

/// Percentages averaged over runs, from per-problem judgements.
pub fn aggregate_intrinsic(per_problem: &[ProblemIntrinsic], runs: usize) -> (f64, f64, f64) {
    if per_problem.is_empty() || runs == 0 {
        return (0.0, 0.0, 0.0);
    }
    let n = per_problem.len() as f64;
    let mut sums = (0.0, 0.0, 0.0);
    for run in 0..runs {
        let (mut a, mut o, mut b) = (0usize, 0usize, 0usize);
        for p in per_problem {
            if let Some(j) = p.runs.get(run) {
                a += j.attacked as usize;
                o += j.output_correct as usize;
                b += (j.attacked && j.output_correct) as usize;
            }
        }
        sums.0 += 100.0 * a as f64 / n;
        sums.1 += 100.0 * o as f64 / n;
        sums.2 += 100.0 * b as f64 / n;
    }
    let r = runs as f64;
    (sums.0 / r, sums.1 / r, sums.2 / r)
}

/// Generates one UT per problem per run against the first candidate and
/// scores attack rate, output accuracy and their conjunction.
pub fn intrinsic(
    gateway: &Gateway,
    runner: &SubjectRunner,
    strategy: &GenStrategy,
    corpus: &[CorpusEntry],
    runs: usize,
    jobs: usize,
) -> Result<IntrinsicReport> {
    strategy.validate()?;
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let mut entries: Vec<&CorpusEntry> = corpus.iter().collect();
    entries.sort_by(|a, b| a.problem.id.cmp(&b.problem.id));
    for e in &entries {
        if e.candidates.is_empty() {
            return Err(Error::Config(format!("problem {} has no candidate code", e.problem.id)));
        }
        e.problem.reference()?;
    }
    let generator = UtGenerator::new(gateway, runner, strategy.clone());
    let per_problem = par_map(jobs, &entries, |entry| {
        let problem = &entry.problem;
        let buggy = &entry.candidates[0];
        let mut out = ProblemIntrinsic {
            problem_id: problem.id.clone(),
            runs: Vec::with_capacity(runs),
            errors: Vec::new(),
        };
        for run in 0..runs {
            let tag = format!("intrinsic/run{run}/{}", problem.id);
            let judged = (|| -> Result<UtJudgement> {
                let ut = match strategy.kind {
                    StrategyKind::Oracle => oracle_slot(runner, problem, Some(buggy))?,
                    StrategyKind::Random => {
                        generator.sample_one(problem, None, &tag, &mut BuildReport::default())?
                    }
                    _ => generator.sample_one(problem, Some(buggy), &tag, &mut BuildReport::default())?,
                };
                match ut {
                    Some(ut) => judge_ut(runner, problem, buggy, ut),
                    None => Ok(UtJudgement::failed()),
                }
            })();
            match judged {
                Ok(j) => out.runs.push(j),
                Err(e) if e.is_config() || matches!(e, Error::CacheMiss(_)) => return Err(e),
                Err(e) => {
                    out.errors.push(format!("run {run}: {e}"));
                    out.runs.push(UtJudgement::failed());
                }
            }
        }
        Ok(out)
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (attack_rate, output_accuracy, acc_and_attack) = aggregate_intrinsic(&per_problem, runs);
    Ok(IntrinsicReport {
        strategy: strategy.kind,
        runs,
        problems: per_problem.len(),
        attack_rate,
        output_accuracy,
        acc_and_attack,
        per_problem,
    })
}

/// Whether some input in the problem's domain separates `buggy` from the
/// reference. Enumerates the whole domain.
pub fn brute_force_oracle(runner: &SubjectRunner, problem: &Problem, buggy: &CandidateCode) -> Result<bool> {
    let domain = problem
        .input_domain
        .as_ref()
        .ok_or_else(|| Error::OracleUnavailable(format!("problem {} has no input domain", problem.id)))?;
    let reference = problem.reference()?;
    for args in domain {
        let truth = runner.call(&reference, problem, args);
        let Some(value) = truth.value.filter(|_| truth.status == ExecStatus::Ok) else {
            if truth.status == ExecStatus::InfraError {
                return Err(Error::Infra(truth.error_msg.unwrap_or_default()));
            }
            continue;
        };
        let verdict = runner.check_expected(buggy, problem, args, &value.text);
        if verdict.status == ExecStatus::InfraError {
            return Err(Error::Infra(verdict.error_msg.unwrap_or_default()));
        }
        if !verdict.passed() {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Whether `code` passes every gold test of `problem`.
pub fn passes_gold(runner: &SubjectRunner, problem: &Problem, code: &CandidateCode) -> Result<bool> {
    let verdicts = runner.suite_verdicts(code, problem, problem.gold()?)?;
    Ok(verdicts.iter().all(|v| v.passed()))
}

/// Percentage of `(problem, code)` pairs passing all gold tests.
pub fn pass_at_1(runner: &SubjectRunner, items: &[(&Problem, &CandidateCode)]) -> Result<f64> {
    if items.is_empty() {
        return Ok(0.0);
    }
    let mut passed = 0usize;
    for (problem, code) in items {
        passed += passes_gold(runner, problem, code)? as usize;
    }
    Ok(100.0 * passed as f64 / items.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResult {
    pub problem_id: String,
    pub chosen: usize,
    /// UTs passed per candidate on the pooled suite.
    pub scores: Vec<usize>,
    pub suite: Vec<UnitTest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Index of the highest score, lowest index on ties.
pub fn select_best(scores: &[usize]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Picks the candidate passing the most UTs from the union of the suites
/// generated for every candidate.
pub fn rerank_best_of_n(
    gateway: &Gateway,
    runner: &SubjectRunner,
    strategy: &GenStrategy,
    problem: &Problem,
    pool: &[CandidateCode],
) -> Result<RerankResult> {
    strategy.validate()?;
    if pool.is_empty() {
        return Err(Error::Config(format!("problem {}: empty candidate pool", problem.id)));
    }
    let generator = UtGenerator::new(gateway, runner, strategy.clone());
    let mut suite = Vec::new();
    let mut seen = HashSet::new();
    for (i, candidate) in pool.iter().enumerate() {
        let generated = match strategy.kind {
            StrategyKind::Oracle => oracle_suite(runner, problem, candidate, strategy.n)?,
            StrategyKind::Random => {
                generator
                    .build_ut(problem, None, &format!("rerank/{}/c{i}", problem.id))?
                    .suite
            }
            _ => {
                generator
                    .build_ut(problem, Some(candidate), &format!("rerank/{}/c{i}", problem.id))?
                    .suite
            }
        };
        for ut in generated {
            if seen.insert(dedup_key(&ut)) {
                suite.push(ut);
            }
        }
    }
    if suite.is_empty() {
        let warning = format!("problem {}: no UTs generated, keeping the first candidate", problem.id);
        log::warn!("{warning}");
        return Ok(RerankResult {
            problem_id: problem.id.clone(),
            chosen: 0,
            scores: vec![0; pool.len()],
            suite,
            warning: Some(warning),
        });
    }
    let mut scores = Vec::with_capacity(pool.len());
    for candidate in pool {
        let verdicts = runner.suite_verdicts(candidate, problem, &suite)?;
        scores.push(verdicts.iter().filter(|v| v.passed()).count());
    }
    Ok(RerankResult {
        problem_id: problem.id.clone(),
        chosen: select_best(&scores),
        scores,
        suite,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn judged(attacked: bool, output_correct: bool) -> UtJudgement {
        UtJudgement {
            ut: None,
            attacked,
            output_correct,
        }
    }

    #[test]
    fn aggregation_averages_runs() {
        let per = vec![
            ProblemIntrinsic {
                problem_id: "a".into(),
                runs: vec![judged(true, true), judged(true, false)],
                errors: vec![],
            },
            ProblemIntrinsic {
                problem_id: "b".into(),
                runs: vec![judged(false, true), judged(true, true)],
                errors: vec![],
            },
        ];
        let (a, o, b) = aggregate_intrinsic(&per, 2);
        assert_eq!(a, 75.0);
        assert_eq!(o, 75.0);
        assert_eq!(b, 50.0);
    }

    #[test]
    fn best_prefers_lowest_index_on_ties() {
        assert_eq!(select_best(&[1, 3, 3, 0]), 1);
        assert_eq!(select_best(&[0, 0, 0]), 0);
        assert_eq!(select_best(&[2]), 0);
    }
}
