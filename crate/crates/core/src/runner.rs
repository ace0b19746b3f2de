//! Typed execution of candidate code through harness processes.
//!
//! Every call spawns a fresh harness process unless memoization is on. A counting semaphore bounds the
//! number of live processes across all threads sharing a [`SubjectRunner`].

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{HarnessCommand, HarnessMode, HarnessRequest, HarnessResponse, HarnessStatus};
use crate::model::{CandidateCode, CanonValue, Problem, UnitTest};

pub const DEFAULT_TIMEOUT_MS: u64 = 5000;
pub const DEFAULT_FLOAT_TOL: f64 = 1e-6;

/// Function used when only argument literals need evaluating.
const STUB_ENTRY: &str = "__utd_stub";
const IDENTITY_ENTRY: &str = "__utd_identity";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    Exception,
    Timeout,
    LoadError,
    ArgError,
    InfraError,
}

impl From<HarnessStatus> for ExecStatus {
    fn from(s: HarnessStatus) -> Self {
        match s {
            HarnessStatus::Ok => ExecStatus::Ok,
            HarnessStatus::Exception => ExecStatus::Exception,
            HarnessStatus::Timeout => ExecStatus::Timeout,
            HarnessStatus::LoadError => ExecStatus::LoadError,
            HarnessStatus::ArgError => ExecStatus::ArgError,
        }
    }
}

/// Result of one sandboxed call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub status: ExecStatus,
    pub value: Option<CanonValue>,
    pub equal: Option<bool>,
    pub error_type: Option<String>,
    pub error_msg: Option<String>,
    pub duration_ms: u64,
}

impl ExecOutcome {
    fn from_response(resp: HarnessResponse) -> Self {
        Self {
            status: resp.status.into(),
            value: resp.value_canon.map(CanonValue::new),
            equal: resp.equal,
            error_type: resp.error_type,
            error_msg: resp.error_msg,
            duration_ms: resp.duration_ms,
        }
    }

    fn infra(msg: String) -> Self {
        Self {
            status: ExecStatus::InfraError,
            value: None,
            equal: None,
            error_type: Some("infra_error".into()),
            error_msg: Some(msg),
            duration_ms: 0,
        }
    }

    /// A UT passes only on a clean call whose value matched.
    pub fn passed(&self) -> bool {
        self.status == ExecStatus::Ok && self.equal == Some(true)
    }

    pub fn is_ok(&self) -> bool {
        self.status == ExecStatus::Ok
    }

    /// What the candidate "returned", as shown in feedback prompts.
    pub fn observed_text(&self) -> String {
        match (&self.status, &self.value) {
            (ExecStatus::Ok, Some(v)) => v.text.clone(),
            _ => self
                .error_type
                .clone()
                .unwrap_or_else(|| format!("{:?}", self.status)),
        }
    }

    fn require_infra_free(self) -> Result<Self> {
        if self.status == ExecStatus::InfraError {
            Err(Error::Infra(self.error_msg.unwrap_or_default()))
        } else {
            Ok(self)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunnerConfig {
    pub timeout_ms: u64,
    pub max_parallel: usize,
    pub float_abs_tol: f64,
    pub float_rel_tol: f64,
    /// Harness script; the bundled one when absent.
    pub harness_path: Option<PathBuf>,
    pub python: String,
    /// Reuse outcomes of byte-identical requests within this runner.
    /// Timeouts and infrastructure failures are never reused.
    #[serde(default)]
    pub memoize: bool,
}

impl Default for RunnerConfig {
    fn default() -> Self {
        Self {
            timeout_ms: DEFAULT_TIMEOUT_MS,
            max_parallel: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
            float_abs_tol: DEFAULT_FLOAT_TOL,
            float_rel_tol: DEFAULT_FLOAT_TOL,
            harness_path: None,
            python: std::env::var("UTD_PYTHON").unwrap_or_else(|_| "python3".into()),
            memoize: false,
        }
    }
}

impl RunnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::Config("timeout_ms must be positive".into()));
        }
        if self.max_parallel == 0 {
            return Err(Error::Config("max_parallel must be at least 1".into()));
        }
        Ok(())
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Semaphore);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Thread-safe facade over harness processes.
pub struct SubjectRunner {
    config: RunnerConfig,
    command: HarnessCommand,
    permits: Semaphore,
    memo: Mutex<HashMap<String, ExecOutcome>>,
}

impl SubjectRunner {
    pub fn new(config: RunnerConfig) -> Result<Self> {
        config.validate()?;
        let command = match &config.harness_path {
            Some(path) => HarnessCommand::new(config.python.clone(), path.clone()),
            None => {
                let mut cmd = HarnessCommand::bundled()?;
                cmd.python = config.python.clone();
                cmd
            }
        };
        Ok(Self {
            permits: Semaphore::new(config.max_parallel),
            memo: Mutex::new(HashMap::new()),
            config,
            command,
        })
    }

    pub fn with_defaults() -> Result<Self> {
        Self::new(RunnerConfig::default())
    }

    pub fn config(&self) -> &RunnerConfig {
        &self.config
    }

    pub fn command(&self) -> &HarnessCommand {
        &self.command
    }

    pub fn request(
        &self,
        mode: HarnessMode,
        code: &str,
        entry_point: &str,
        args: &[String],
        expected: Option<&str>,
    ) -> HarnessRequest {
        HarnessRequest {
            mode,
            code: code.to_string(),
            entry_point: entry_point.to_string(),
            args_expr: args.to_vec(),
            expected_expr: expected.map(str::to_string),
            timeout_ms: self.config.timeout_ms,
            float_abs_tol: self.config.float_abs_tol,
            float_rel_tol: self.config.float_rel_tol,
        }
    }

    /// One harness round trip, retried once on infrastructure failure.
    pub fn execute(&self, request: &HarnessRequest) -> ExecOutcome {
        if !self.config.memoize {
            return self.execute_uncached(request);
        }
        let key = serde_json::to_string(request).unwrap_or_default();
        if let Some(hit) = self.memo.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
            return hit.clone();
        }
        let out = self.execute_uncached(request);
        if !matches!(out.status, ExecStatus::Timeout | ExecStatus::InfraError) {
            self.memo
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .insert(key, out.clone());
        }
        out
    }

    fn execute_uncached(&self, request: &HarnessRequest) -> ExecOutcome {
        let mut last_err = String::new();
        for attempt in 0..2 {
            let _permit = self.permits.acquire();
            match self.command.exchange(request) {
                Ok(resp) => return ExecOutcome::from_response(resp),
                Err(e) => {
                    log::warn!("harness attempt {} failed: {e}", attempt + 1);
                    last_err = e.to_string();
                }
            }
        }
        ExecOutcome::infra(last_err)
    }

    pub fn call(&self, code: &CandidateCode, problem: &Problem, args: &[String]) -> ExecOutcome {
        let req = self.request(
            HarnessMode::Call,
            &code.source,
            &problem.entry_point,
            args,
            None,
        );
        self.execute(&req)
    }

    pub fn check(&self, code: &CandidateCode, problem: &Problem, ut: &UnitTest) -> ExecOutcome {
        self.check_expected(code, problem, &ut.args, &ut.expected.text)
    }

    pub fn check_expected(
        &self,
        code: &CandidateCode,
        problem: &Problem,
        args: &[String],
        expected: &str,
    ) -> ExecOutcome {
        let req = self.request(
            HarnessMode::Check,
            &code.source,
            &problem.entry_point,
            args,
            Some(expected),
        );
        self.execute(&req)
    }

    /// Verdict per UT, in suite order. Runs concurrently up to the permit
    /// budget; only infrastructure failures are errors.
    pub fn suite_verdicts(
        &self,
        code: &CandidateCode,
        problem: &Problem,
        suite: &[UnitTest],
    ) -> Result<Vec<ExecOutcome>> {
        let outcomes: Vec<ExecOutcome> = if self.config.max_parallel > 1 && suite.len() > 1 {
            std::thread::scope(|scope| {
                let handles: Vec<_> = suite
                    .iter()
                    .map(|ut| scope.spawn(move || self.check(code, problem, ut)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| {
                        h.join()
                            .unwrap_or_else(|_| ExecOutcome::infra("worker panicked".into()))
                    })
                    .collect()
            })
        } else {
            suite.iter().map(|ut| self.check(code, problem, ut)).collect()
        };
        outcomes
            .into_iter()
            .map(ExecOutcome::require_infra_free)
            .collect()
    }

    /// Fraction of `suite` the code passes.
    pub fn pass_rate(&self, code: &CandidateCode, problem: &Problem, suite: &[UnitTest]) -> Result<f64> {
        if suite.is_empty() {
            return Err(Error::Config("pass rate of an empty suite".into()));
        }
        let verdicts = self.suite_verdicts(code, problem, suite)?;
        Ok(pass_fraction(&verdicts))
    }

    /// Evaluates argument literals without running any candidate code.
    pub fn check_args(&self, args: &[String]) -> ExecOutcome {
        let code = format!("def {STUB_ENTRY}(*args, **kwargs):\n    return None\n");
        let req = self.request(HarnessMode::Call, &code, STUB_ENTRY, args, None);
        self.execute(&req)
    }

    /// Canonical text of a literal, or `arg_error` if it does not evaluate.
    pub fn canonicalize_literal(&self, text: &str) -> ExecOutcome {
        let req = self.request(
            HarnessMode::Call,
            &identity_code(),
            IDENTITY_ENTRY,
            &[text.to_string()],
            None,
        );
        self.execute(&req)
    }

    /// Harness equality between two literals.
    pub fn literals_equal(&self, a: &str, b: &str) -> Result<bool> {
        let req = self.request(
            HarnessMode::Check,
            &identity_code(),
            IDENTITY_ENTRY,
            &[a.to_string()],
            Some(b),
        );
        Ok(self.execute(&req).require_infra_free()?.passed())
    }
}

fn identity_code() -> String {
    format!("def {IDENTITY_ENTRY}(x):\n    return x\n")
}

pub fn pass_fraction(verdicts: &[ExecOutcome]) -> f64 {
    if verdicts.is_empty() {
        return 0.0;
    }
    verdicts.iter().filter(|o| o.passed()).count() as f64 / verdicts.len() as f64
}
