//! Command-line front end. The binary only forwards to [`main`].

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::debug::{debug_corpus, DebugConfig, Debugger, FeedbackStyle, RegenPolicy, ENGINE_VERSION};
use crate::error::{Error, Result};
use crate::gateway::{Backend, Gateway, GenRequest, LiveBackend, ReplayCache, ScriptedBackend};
use crate::metrics::{intrinsic, pass_at_1, passes_gold, rerank_best_of_n};
use crate::model::{corpus_to_string, read_corpus, write_atomic, CorpusEntry, SftLine};
use crate::parallel::par_map;
use crate::pipeline::{bootstrap_sft, build_debug_split, read_source, SourceFilter, SplitKind, SplitSpec};
use crate::runner::{RunnerConfig, SubjectRunner, DEFAULT_TIMEOUT_MS};
use crate::testgen::{GenStrategy, StrategyKind, UtGenerator};

#[derive(Debug, Parser)]
#[command(name = "utdebug", version, about = "Unit test generation and test-validated debugging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a UT suite for every candidate in a corpus.
    GenUts(CommonArgs),
    /// Debug every candidate and report pass@1 before and after.
    Debug(CommonArgs),
    /// Score a UT generator by attack rate and output accuracy.
    EvalIntrinsic(CommonArgs),
    /// Pick the best candidate of each pool with generated UTs.
    Rerank(CommonArgs),
    /// Bootstrap training records from a source conversation corpus.
    BootstrapSft(CommonArgs),
    /// Build a fix or fix_hard debugging split from candidate pools.
    BuildCorpus(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenUts(_) => "gen-uts",
            Command::Debug(_) => "debug",
            Command::EvalIntrinsic(_) => "eval-intrinsic",
            Command::Rerank(_) => "rerank",
            Command::BootstrapSft(_) => "bootstrap-sft",
            Command::BuildCorpus(_) => "build-corpus",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::GenUts(a)
            | Command::Debug(a)
            | Command::EvalIntrinsic(a)
            | Command::Rerank(a)
            | Command::BootstrapSft(a)
            | Command::BuildCorpus(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Input corpus (JSONL); the source conversation file for bootstrap-sft.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// `live`, `scripted:<fixture.json>` or `replay:<cache dir>`.
    #[arg(long, default_value = "live")]
    pub backend: String,
    /// Model id for the live backend (overrides UTD_MODEL).
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value = "prompted", value_parser = ["random", "prompted", "utgen", "oracle"])]
    pub strategy: String,
    /// Suite size; for rerank, the number of pool members considered.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub rounds: u32,
    #[arg(long, default_value_t = 3)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Concurrent problems; defaults to the CPU count.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT_MS)]
    pub timeout_ms: u64,
    #[arg(long, default_value = "on-accept", value_parser = ["on-accept", "every-round"])]
    pub regen: String,
    #[arg(long, default_value = "ut", value_parser = ["ut", "no-ut"])]
    pub feedback: String,
    /// Record every completion into this replay cache.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Split for build-corpus.
    #[arg(long, default_value = "fix", value_parser = ["fix", "hard"])]
    pub split: String,
}

impl CommonArgs {
    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    fn strategy(&self, default_n: usize) -> Result<GenStrategy> {
        let mut s = GenStrategy::new(StrategyKind::parse(&self.strategy)?);
        s.n = default_n;
        s.k = self.k;
        if s.kind == StrategyKind::Utgen {
            s.model = self.model.clone();
        }
        s.validate()?;
        Ok(s)
    }

    /// Seed-dependent tag prefix; seed 0 keeps the bare prefix.
    fn tag_prefix(&self, base: &str) -> String {
        if self.seed == 0 {
            base.to_string()
        } else {
            format!("s{}/{base}", self.seed)
        }
    }
}

/// Written once per output directory at the end of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub corpus: String,
    pub out: String,
    pub seed: u64,
    pub engine_version: String,
    pub backend: String,
    pub item_errors: usize,
    pub cache_hit_ratio: f64,
    pub wall_time_secs: f64,
}

struct NoModel;

impl Backend for NoModel {
    fn id(&self) -> String {
        "none".into()
    }

    fn complete(&self, _: &GenRequest) -> Result<Vec<String>> {
        Err(Error::Config("this command needs a model backend".into()))
    }
}

fn needs_model(command: &Command) -> bool {
    let oracle = command.args().strategy == "oracle";
    match command {
        Command::GenUts(_) | Command::EvalIntrinsic(_) | Command::Rerank(_) => !oracle,
        Command::Debug(_) | Command::BootstrapSft(_) => true,
        Command::BuildCorpus(_) => false,
    }
}

/// Builds the gateway named by `--backend`, failing before any model call
/// when it cannot be configured.
pub fn open_gateway(args: &CommonArgs, model_needed: bool) -> Result<Gateway> {
    let spec = args.backend.as_str();
    let gateway = if let Some(dir) = spec.strip_prefix("replay:") {
        if !Path::new(dir).is_dir() {
            return Err(Error::Config(format!("replay cache {dir} does not exist")));
        }
        return Ok(Gateway::replay(ReplayCache::open(dir)?));
    } else if let Some(path) = spec.strip_prefix("scripted:") {
        Gateway::new(ScriptedBackend::load(Path::new(path))?)
    } else if spec == "live" {
        if model_needed {
            Gateway::new(LiveBackend::from_env(args.model.clone())?)
        } else {
            Gateway::new(NoModel)
        }
    } else {
        return Err(Error::Config(format!("unknown backend `{spec}`")));
    };
    Ok(match &args.cache_dir {
        Some(dir) => gateway.with_cache(ReplayCache::open(dir)?),
        None => gateway,
    })
}

fn open_runner(args: &CommonArgs) -> Result<SubjectRunner> {
    SubjectRunner::new(RunnerConfig {
        timeout_ms: args.timeout_ms,
        memoize: true,
        ..RunnerConfig::default()
    })
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    write_atomic(&dir.join(name), text.as_bytes())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

#[derive(Serialize)]
struct ItemError<'a> {
    id: &'a str,
    candidate_index: Option<usize>,
    error: &'a str,
}

/// Runs one command; returns the number of per-item errors.
pub fn run(cli: &Cli) -> Result<usize> {
    let started = Instant::now();
    let command = &cli.command;
    let args = command.args();
    let gateway = open_gateway(args, needs_model(command))?;
    let runner = open_runner(args)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::file(&args.out, e))?;
    let out = args.out.as_path();

    let item_errors = match command {
        Command::GenUts(_) => gen_uts(args, &gateway, &runner, out)?,
        Command::Debug(_) => debug(args, &gateway, &runner, out)?,
        Command::EvalIntrinsic(_) => eval_intrinsic(args, &gateway, &runner, out)?,
        Command::Rerank(_) => rerank(args, &gateway, &runner, out)?,
        Command::BootstrapSft(_) => sft(args, &gateway, &runner, out)?,
        Command::BuildCorpus(_) => build_corpus(args, &runner, out)?,
    };

    let manifest = RunManifest {
        command: command.name().into(),
        config: serde_json::to_value(args)?,
        corpus: args.corpus.display().to_string(),
        out: args.out.display().to_string(),
        seed: args.seed,
        engine_version: ENGINE_VERSION.into(),
        backend: args.backend.clone(),
        item_errors,
        cache_hit_ratio: gateway.stats().hit_ratio(),
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    write_json(out, "manifest.json", &manifest)?;
    Ok(item_errors)
}

fn load_corpus(args: &CommonArgs) -> Result<Vec<CorpusEntry>> {
    let mut corpus = read_corpus(&args.corpus).map_err(|e| match e {
        Error::Parse(m) => Error::Config(format!("{}: {m}", args.corpus.display())),
        other => other,
    })?;
    corpus.sort_by(|a, b| a.problem.id.cmp(&b.problem.id));
    Ok(corpus)
}

fn write_errors(out: &Path, errors: &[(String, Option<usize>, String)]) -> Result<()> {
    let lines: Vec<ItemError> = errors
        .iter()
        .map(|(id, c, e)| ItemError {
            id,
            candidate_index: *c,
            error: e,
        })
        .collect();
    for e in &lines {
        log::error!("{} (candidate {:?}): {}", e.id, e.candidate_index, e.error);
    }
    write_text(out, "errors.jsonl", &jsonl(&lines)?)
}

fn fatal(e: &Error) -> bool {
    e.is_config() || matches!(e, Error::CacheMiss(_))
}

fn gen_uts(args: &CommonArgs, gateway: &Gateway, runner: &SubjectRunner, out: &Path) -> Result<usize> {
    let corpus = load_corpus(args)?;
    let strategy = args.strategy(args.n.unwrap_or(3))?;
    let generator = UtGenerator::new(gateway, runner, strategy.clone());
    let items: Vec<(&CorpusEntry, usize)> = corpus
        .iter()
        .flat_map(|e| (0..e.candidates.len()).map(move |i| (e, i)))
        .collect();
    let prefix = args.tag_prefix("genuts");
    let results = par_map(args.jobs(), &items, |(entry, i)| {
        let code = &entry.candidates[*i];
        let conditioned = (strategy.kind != StrategyKind::Random).then_some(code);
        let tag = format!("{prefix}/{}/c{i}", entry.problem.id);
        generator.build_ut(&entry.problem, conditioned, &tag)
    })?;
    let mut lines = Vec::new();
    let mut errors = Vec::new();
    for ((entry, i), result) in items.iter().zip(results) {
        match result {
            Ok(report) => lines.push(json!({
                "problem_id": entry.problem.id,
                "candidate_index": i,
                "strategy": strategy.kind,
                "report": report,
            })),
            Err(e) if fatal(&e) => return Err(e),
            Err(e) => errors.push((entry.problem.id.clone(), Some(*i), e.to_string())),
        }
    }
    write_text(out, "suites.jsonl", &jsonl(&lines)?)?;
    write_errors(out, &errors)?;
    Ok(errors.len())
}

fn debug(args: &CommonArgs, gateway: &Gateway, runner: &SubjectRunner, out: &Path) -> Result<usize> {
    let corpus = load_corpus(args)?;
    let config = DebugConfig {
        rounds: args.rounds,
        strategy: args.strategy(args.n.unwrap_or(3))?,
        regen: RegenPolicy::parse(&args.regen)?,
        feedback: FeedbackStyle::parse(&args.feedback)?,
        tag_prefix: args.tag_prefix("debug"),
    };
    config.validate()?;
    let debugger = Debugger::new(gateway, runner, config);
    let results = debug_corpus(&debugger, &corpus, args.jobs())?;
    let mut traces = Vec::new();
    let mut errors = Vec::new();
    for (id, i, r) in results {
        match r {
            Ok(t) => traces.push(t),
            Err(e) => errors.push((id, Some(i), e)),
        }
    }
    // pass@1 over problems with gold tests, first candidate only
    let mut initial = Vec::new();
    let mut fin = Vec::new();
    for t in traces.iter().filter(|t| t.candidate_index == 0) {
        if let Some(entry) = corpus.iter().find(|e| e.problem.id == t.trace.problem_id) {
            if entry.problem.gold_tests.is_some() {
                initial.push((&entry.problem, &t.trace.initial_code));
                fin.push((&entry.problem, &t.trace.final_code));
            }
        }
    }
    let summary = json!({
        "problems": corpus.len(),
        "traces": traces.len(),
        "scored": fin.len(),
        "pass_at_1_initial": pass_at_1(runner, &initial)?,
        "pass_at_1_final": pass_at_1(runner, &fin)?,
        "accepted_edits": traces.iter().flat_map(|t| &t.trace.rounds).filter(|r| r.accepted).count(),
        "item_errors": errors.len(),
    });
    write_text(out, "traces.jsonl", &jsonl(&traces)?)?;
    write_json(out, "summary.json", &summary)?;
    write_errors(out, &errors)?;
    Ok(errors.len())
}

fn eval_intrinsic(args: &CommonArgs, gateway: &Gateway, runner: &SubjectRunner, out: &Path) -> Result<usize> {
    let corpus = load_corpus(args)?;
    let strategy = args.strategy(1)?;
    let report = intrinsic(gateway, runner, &strategy, &corpus, args.runs, args.jobs())?;
    let errors: Vec<(String, Option<usize>, String)> = report
        .per_problem
        .iter()
        .flat_map(|p| p.errors.iter().map(|e| (p.problem_id.clone(), Some(0), e.clone())))
        .collect();
    write_json(out, "intrinsic.json", &report)?;
    write_errors(out, &errors)?;
    Ok(errors.len())
}

fn rerank(args: &CommonArgs, gateway: &Gateway, runner: &SubjectRunner, out: &Path) -> Result<usize> {
    let corpus = load_corpus(args)?;
    let strategy = args.strategy(3)?;
    let results = par_map(args.jobs(), &corpus, |entry| -> Result<_> {
        let take = args.n.unwrap_or(entry.candidates.len()).min(entry.candidates.len());
        let pool = &entry.candidates[..take];
        let result = rerank_best_of_n(gateway, runner, &strategy, &entry.problem, pool)?;
        let scored = match entry.problem.gold_tests {
            Some(_) => Some((
                passes_gold(runner, &entry.problem, &pool[0])?,
                passes_gold(runner, &entry.problem, &pool[result.chosen])?,
            )),
            None => None,
        };
        Ok((result, scored))
    })?;
    let mut lines = Vec::new();
    let mut errors = Vec::new();
    let (mut first, mut chosen, mut scored) = (0usize, 0usize, 0usize);
    for (entry, r) in corpus.iter().zip(results) {
        match r {
            Ok((result, gold)) => {
                if let Some((a, b)) = gold {
                    scored += 1;
                    first += a as usize;
                    chosen += b as usize;
                }
                lines.push(json!({ "result": result, "chosen_passes_gold": gold.map(|g| g.1) }));
            }
            Err(e) if fatal(&e) => return Err(e),
            Err(e) => errors.push((entry.problem.id.clone(), None, e.to_string())),
        }
    }
    let pct = |x: usize| if scored == 0 { 0.0 } else { 100.0 * x as f64 / scored as f64 };
    write_text(out, "rerank.jsonl", &jsonl(&lines)?)?;
    write_json(
        out,
        "summary.json",
        &json!({
            "problems": corpus.len(),
            "scored": scored,
            "pass_at_1_first": pct(first),
            "pass_at_1_reranked": pct(chosen),
        }),
    )?;
    write_errors(out, &errors)?;
    Ok(errors.len())
}

fn sft(args: &CommonArgs, gateway: &Gateway, runner: &SubjectRunner, out: &Path) -> Result<usize> {
    let items = read_source(&args.corpus).map_err(|e| match e {
        Error::Parse(m) => Error::Config(m),
        other => other,
    })?;
    let report = bootstrap_sft(gateway, runner, &items, &SourceFilter::default(), args.seed, args.jobs())?;
    let lines: Vec<SftLine> = report.records.iter().map(SftLine::from).collect();
    let dropped: Vec<_> = report
        .dropped
        .iter()
        .map(|(id, reason)| json!({ "id": id, "reason": reason }))
        .collect();
    write_text(out, "sft.jsonl", &jsonl(&lines)?)?;
    write_text(out, "dropped.jsonl", &jsonl(&dropped)?)?;
    // dropped items are expected filter outcomes, not failures
    write_errors(out, &[])?;
    Ok(0)
}

fn build_corpus(args: &CommonArgs, runner: &SubjectRunner, out: &Path) -> Result<usize> {
    let pools = load_corpus(args)?;
    let spec = SplitSpec::new(SplitKind::parse(&args.split)?);
    let report = build_debug_split(runner, &pools, &spec, args.seed, args.jobs())?;
    let dropped: Vec<_> = report
        .dropped
        .iter()
        .map(|(id, reason)| json!({ "id": id, "reason": reason }))
        .collect();
    write_text(out, "corpus.jsonl", &corpus_to_string(&report.corpus)?)?;
    write_text(out, "dropped.jsonl", &jsonl(&dropped)?)?;
    write_errors(out, &[])?;
    Ok(0)
}

/// Parses `std::env::args`, runs, and maps errors to exit codes: 2 for
/// configuration errors, 1 for other fatal errors, 0 otherwise (item
/// failures are logged and written to `errors.jsonl`).
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} item(s) failed; see errors.jsonl");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
