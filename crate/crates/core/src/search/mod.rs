//! The propose/evaluate/record loop.
//!
//! Policy search seeds the history with random params, then for each iteration renders
//! the prompt, asks the provider, parses the answer (re-prompting on protocol errors,
//! then falling back to a perturbation of the incumbent), evaluates it and appends it to
//! the history. Function minimization starts from two Adam steps instead of random
//! seeds. Every evaluation lands in a [`RunRecord`] with enough seeds to replay it.

mod record;

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{evaluate, make, EnvName};
use crate::llm::{build_provider, complete, LlmError, Provider, ProviderConfig, Transcript};
use crate::numopt::{Adam, Function, ObjectiveSpec};
use crate::policies::{build, ParamVector, PolicyKind};
use crate::prompt::{parse_response, HistoryBuffer, HistoryEntry, PromptContext, Templates};
use crate::seeding;

pub use record::{read_record, record_stem, summary_path, write_record, RunHeader, RunSummary, TrialTag};
pub(crate) use record::read_summary;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("provider failure: {error}")]
    ProviderFailure { error: LlmError, partial: Box<RunRecord> },
    #[error("evaluation failure: {error}")]
    Evaluation { error: String, partial: Box<RunRecord> },
    #[error("no records to aggregate")]
    EmptyInput,
    #[error("corrupt record: {0}")]
    RecordCorrupt(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl SearchError {
    /// The record up to the failure, for errors that abort a started run.
    pub fn partial(&self) -> Option<&RunRecord> {
        match self {
            SearchError::ProviderFailure { partial, .. } | SearchError::Evaluation { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// What is being optimized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Target {
    Env { env: EnvName, policy: PolicyKind },
    Objective { function: String, dim: usize },
}

impl Target {
    /// `cart-pole`, or `<function>-<dim>d` such as `levy-2d`.
    pub fn label(&self) -> String {
        match self {
            Target::Env { env, .. } => env.as_str().to_string(),
            Target::Objective { function, dim } => format!("{function}-{dim}d"),
        }
    }

    /// Inverse of [`Target::label`]; environments use `policy` or their default kind.
    pub fn parse(label: &str, policy: Option<PolicyKind>) -> Result<Self, String> {
        if let Ok(env) = label.parse::<EnvName>() {
            let policy = policy.unwrap_or_else(|| crate::policies::default_kind(&env.spec()));
            return Ok(Target::Env { env, policy });
        }
        let parsed = label
            .strip_suffix('d')
            .and_then(|s| s.rsplit_once('-'))
            .and_then(|(f, d)| Some((f, d.parse::<usize>().ok()?)));
        match parsed {
            Some((f, dim)) if dim > 0 && Function::by_name(f).is_ok() => Ok(Target::Objective {
                function: f.to_string(),
                dim,
            }),
            _ => Err(format!(
                "unknown target `{label}` (expected an environment name or `<function>-<dim>d`)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Params and rewards only.
    Props,
    /// Adds the environment description.
    PropsPlus,
    /// Adds the environment description and expert hints.
    PropsPlusHints,
    /// Function minimization.
    Numopt,
}

impl SearchMode {
    pub const ALL: [SearchMode; 4] = [
        SearchMode::Props,
        SearchMode::PropsPlus,
        SearchMode::PropsPlusHints,
        SearchMode::Numopt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SearchMode::Props => "props",
            SearchMode::PropsPlus => "props-plus",
            SearchMode::PropsPlusHints => "props-plus-hints",
            SearchMode::Numopt => "numopt",
        }
    }
}

impl std::str::FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SearchMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub target: Target,
    pub mode: SearchMode,
    pub provider: ProviderConfig,
    pub max_iters: usize,
    pub episodes_per_eval: usize,
    /// `None` keeps every entry.
    pub history_maxlen: Option<usize>,
    pub n_seed_examples: usize,
    pub seed: u64,
    /// Replaces the per-target default shown in the prompt.
    pub optimum_hint: Option<f64>,
    pub step_size: Option<f64>,
    /// Directory of alternative `<mode>.txt` templates.
    pub templates_dir: Option<PathBuf>,
    /// Re-prompts with the identical prompt before falling back.
    pub parse_retries: usize,
    /// Adam learning rate of the two warmup steps (minimization only).
    pub adam_lr: f64,
    /// Starting point for minimization; drawn from U[0, 20]^dim when absent.
    pub initial_point: Option<Vec<f64>>,
}

impl SearchConfig {
    /// 400 iterations of 20 episodes, 5 seed examples, unbounded history.
    pub fn policy(env: EnvName, policy: PolicyKind, mode: SearchMode, provider: ProviderConfig, seed: u64) -> Self {
        Self {
            target: Target::Env { env, policy },
            mode,
            provider,
            max_iters: 400,
            episodes_per_eval: 20,
            history_maxlen: None,
            n_seed_examples: 5,
            seed,
            optimum_hint: None,
            step_size: None,
            templates_dir: None,
            parse_retries: 3,
            adam_lr: 0.5,
            initial_point: None,
        }
    }

    /// 100 steps, the first two taken by Adam.
    pub fn numopt(function: &str, dim: usize, provider: ProviderConfig, seed: u64) -> Self {
        Self {
            target: Target::Objective {
                function: function.to_string(),
                dim,
            },
            mode: SearchMode::Numopt,
            max_iters: 100,
            episodes_per_eval: 1,
            n_seed_examples: 0,
            ..Self::policy(EnvName::CartPole, PolicyKind::Linear, SearchMode::Numopt, provider, seed)
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.provider.violations().into_iter().map(|m| format!("provider: {m}")).collect();
        if self.max_iters == 0 {
            v.push("max_iters must be at least 1".into());
        }
        if self.episodes_per_eval == 0 {
            v.push("episodes_per_eval must be at least 1".into());
        }
        if self.history_maxlen == Some(0) {
            v.push("history_maxlen must be at least 1 (omit it for unbounded)".into());
        }
        match (&self.target, self.mode) {
            (Target::Objective { function, dim }, SearchMode::Numopt) => {
                if let Err(e) = Function::by_name(function) {
                    v.push(e.to_string());
                }
                if *dim == 0 {
                    v.push("objective dimension must be at least 1".into());
                }
                if let Some(x0) = &self.initial_point {
                    if x0.len() != *dim || x0.iter().any(|x| !x.is_finite()) {
                        v.push(format!("initial_point must hold {dim} finite values"));
                    }
                }
                if !(self.adam_lr.is_finite() && self.adam_lr > 0.0) {
                    v.push("adam_lr must be positive".into());
                }
            }
            (Target::Objective { .. }, m) => v.push(format!("mode {} needs an environment target", m.as_str())),
            (Target::Env { .. }, SearchMode::Numopt) => v.push("mode numopt needs an objective target".into()),
            (Target::Env { env, policy }, mode) => {
                if let Err(e) = self.context_for(*env, *policy, mode) {
                    v.push(e);
                }
            }
        }
        if let Some(s) = self.step_size {
            if !(s.is_finite() && s > 0.0) {
                v.push("step_size must be positive".into());
            }
        }
        if self.optimum_hint.is_some_and(|o| !o.is_finite()) {
            v.push("optimum_hint must be finite".into());
        }
        v
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SearchError::InvalidConfig(v.join("; ")))
        }
    }

    fn apply_overrides(&self, mut ctx: PromptContext) -> PromptContext {
        ctx.max_steps = self.max_iters;
        if let Some(o) = self.optimum_hint {
            ctx.optimum_hint = o;
        }
        if let Some(s) = self.step_size {
            ctx.step_size = s;
        }
        ctx
    }

    fn context_for(&self, env: EnvName, kind: PolicyKind, mode: SearchMode) -> Result<PromptContext, String> {
        let (desc, hints) = match mode {
            SearchMode::Props => (false, false),
            SearchMode::PropsPlus => (true, false),
            _ => (true, true),
        };
        PromptContext::for_env(&env.spec(), kind, desc, hints)
            .map(|c| self.apply_overrides(c))
            .map_err(|e| e.to_string())
    }

    /// The prompt context this config renders with.
    pub fn prompt_context(&self) -> Result<PromptContext, SearchError> {
        match &self.target {
            Target::Env { env, policy } => self
                .context_for(*env, *policy, self.mode)
                .map_err(SearchError::InvalidConfig),
            Target::Objective { dim, .. } => Ok(self.apply_overrides(PromptContext::numopt(*dim))),
        }
    }

    fn templates(&self) -> Result<Templates, SearchError> {
        match &self.templates_dir {
            Some(d) => Templates::load_dir(d).map_err(|e| SearchError::InvalidConfig(e.to_string())),
            None => Ok(Templates::builtin()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSource {
    /// Random params evaluated before the first prompt.
    SeedExample,
    /// Adam step before the first prompt (minimization).
    Warmup,
    /// Parsed from the provider's answer.
    Model,
    /// Perturbed incumbent after repeated protocol errors.
    Fallback,
}

/// One evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Position among all evaluations of the run.
    pub index: usize,
    /// Loop iteration (1-based); 0 for seed examples.
    pub iteration: usize,
    pub source: StepSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    /// Answers that failed to parse, in order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<String>,
    pub params: ParamVector,
    pub f: f64,
    /// Seed of the evaluation block; absent for pure objectives.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_seed: Option<u64>,
    #[serde(default)]
    pub explanation: String,
    pub out_of_range: bool,
    /// Re-prompts issued after unparseable answers.
    pub parse_retries: usize,
    pub best_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    Failed { error: String },
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub header: RunHeader,
    pub steps: Vec<StepRecord>,
    pub summary: RunSummary,
}

impl RunRecord {
    fn new(header: RunHeader) -> Self {
        Self {
            header,
            steps: Vec::new(),
            summary: RunSummary {
                best_params: None,
                best_f: None,
                iterations_completed: 0,
                episodes: 0,
                status: RunStatus::Complete,
                wall_clock: 0.0,
            },
        }
    }

    pub fn config(&self) -> &SearchConfig {
        &self.header.config
    }

    pub fn best_f(&self) -> Option<f64> {
        self.summary.best_f
    }

    pub fn is_complete(&self) -> bool {
        self.summary.status == RunStatus::Complete
    }

    /// Maximizing for policy search, minimizing for objectives.
    pub fn minimize(&self) -> bool {
        self.header.config.mode == SearchMode::Numopt
    }

    /// Best-so-far value after each evaluation.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.best_f).collect()
    }

    /// Copy with the wall-clock figure zeroed, for comparing outcomes across runs.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        r.summary.wall_clock = 0.0;
        r
    }

    fn push(&mut self, mut step: StepRecord) {
        let minimize = self.minimize();
        let improved = match self.summary.best_f {
            None => true,
            Some(b) => {
                if minimize {
                    step.f < b
                } else {
                    step.f > b
                }
            }
        };
        if improved {
            self.summary.best_f = Some(step.f);
            self.summary.best_params = Some(step.params.clone());
        }
        step.best_f = self.summary.best_f.expect("just set");
        if step.source != StepSource::SeedExample {
            self.summary.iterations_completed += 1;
        }
        if step.eval_seed.is_some() {
            self.summary.episodes += self.header.config.episodes_per_eval;
        }
        self.steps.push(step);
    }
}

/// Mean and spread of per-trial best values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub n: usize,
    pub mean: f64,
    /// Sample (n−1) standard deviation; 0 for a single record.
    pub std: f64,
    /// `std / sqrt(n)`.
    pub stderr: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Result<Self, SearchError> {
        if values.is_empty() {
            return Err(SearchError::EmptyInput);
        }
        let (mean, std) = crate::numopt::bench::mean_std(values);
        Ok(Self {
            n: values.len(),
            mean,
            std,
            stderr: std / (values.len() as f64).sqrt(),
        })
    }
}

/// Aggregates the best values of `records`; records that never evaluated are skipped.
pub fn aggregate(records: &[RunRecord]) -> Result<Aggregate, SearchError> {
    let v: Vec<f64> = records.iter().filter_map(RunRecord::best_f).collect();
    Aggregate::of(&v)
}

fn eval_seed(seed: u64, index: usize) -> u64 {
    seeding::derive(seeding::derive_tagged(seed, "eval"), index as u64)
}

fn round_to(v: f64, decimals: usize) -> f64 {
    let s = 10f64.powi(decimals.min(15) as i32);
    (v * s).round() / s
}

/// Evaluates params on the configured target; the seed is ignored for objectives.
pub fn evaluate_params(config: &SearchConfig, header: &RunHeader, params: &ParamVector, seed: u64) -> Result<f64, String> {
    match &config.target {
        Target::Env { env, policy } => {
            let mut e = make(*env);
            let spec = e.spec().clone();
            let p = build(*policy, &spec, params.clone()).map_err(|e| e.to_string())?;
            evaluate(e.as_mut(), p.as_ref(), config.episodes_per_eval, seed).map_err(|e| e.to_string())
        }
        Target::Objective { .. } => header
            .objective()
            .ok_or("record has no objective shift")?
            .eval(&params.0)
            .map_err(|e| e.to_string()),
    }
}

struct Loop<'a> {
    config: &'a SearchConfig,
    ctx: PromptContext,
    templates: Templates,
    history: HistoryBuffer,
    record: RunRecord,
    rng: ChaCha8Rng,
    evaluator: Box<dyn FnMut(&ParamVector, u64) -> Result<f64, String> + 'a>,
    uses_seeds: bool,
    started: Instant,
}

impl<'a> Loop<'a> {
    fn evaluate(&mut self, step: StepRecord) -> Result<(), SearchError> {
        let mut step = step;
        step.index = self.record.steps.len();
        step.eval_seed = self.uses_seeds.then(|| eval_seed(self.config.seed, step.index));
        step.out_of_range = {
            let (lo, hi) = self.ctx.value_range;
            step.params.0.iter().any(|v| *v < lo || *v > hi)
        };
        match (self.evaluator)(&step.params, step.eval_seed.unwrap_or(0)) {
            Ok(f) if f.is_finite() => step.f = f,
            Ok(f) => return Err(self.fail_eval(format!("non-finite value {f}"))),
            Err(e) => return Err(self.fail_eval(e)),
        }
        self.history
            .push(HistoryEntry {
                params: step.params.clone(),
                f: step.f,
                iteration: step.index + 1,
            })
            .map_err(|e| self.fail_eval(e.to_string()))?;
        self.record.push(step);
        Ok(())
    }

    fn finish(mut self, status: RunStatus) -> RunRecord {
        self.record.summary.status = status;
        self.record.summary.wall_clock = self.started.elapsed().as_secs_f64();
        self.record
    }

    /// Takes the record so far, marked failed.
    fn abort(&mut self, error: &str) -> Box<RunRecord> {
        let fresh = RunRecord::new(self.record.header.clone());
        let mut partial = std::mem::replace(&mut self.record, fresh);
        partial.summary.status = RunStatus::Failed { error: error.to_string() };
        partial.summary.wall_clock = self.started.elapsed().as_secs_f64();
        Box::new(partial)
    }

    fn fail_eval(&mut self, error: String) -> SearchError {
        let partial = self.abort(&error);
        SearchError::Evaluation { error, partial }
    }

    fn blank(&self, iteration: usize, source: StepSource, params: ParamVector) -> StepRecord {
        StepRecord {
            index: 0,
            iteration,
            source,
            prompt: None,
            response: None,
            rejected: Vec::new(),
            params,
            f: 0.0,
            eval_seed: None,
            explanation: String::new(),
            out_of_range: false,
            parse_retries: 0,
            best_f: 0.0,
        }
    }

    fn random_params(&mut self) -> ParamVector {
        let ctx = &self.ctx;
        let rng = &mut self.rng;
        ParamVector(if ctx.mode.is_tabular() {
            (0..ctx.rank).map(|_| ctx.action_set[rng.random_range(0..ctx.action_set.len())] as f64).collect()
        } else {
            let (lo, hi) = ctx.value_range;
            (0..ctx.rank).map(|_| round_to(rng.random_range(lo..=hi), ctx.decimals)).collect()
        })
    }

    fn fallback_params(&mut self) -> ParamVector {
        let Some(best) = self.record.summary.best_params.clone() else {
            return self.random_params();
        };
        let ctx = &self.ctx;
        let rng = &mut self.rng;
        let mut x = best.0;
        if ctx.mode.is_tabular() {
            let i = rng.random_range(0..x.len());
            x[i] = ctx.action_set[rng.random_range(0..ctx.action_set.len())] as f64;
        } else {
            for v in x.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *v = round_to(*v + ctx.step_size * n, ctx.decimals);
            }
        }
        ParamVector(x)
    }

    /// One prompted iteration; provider errors abort the run.
    fn prompted(&mut self, iteration: usize, provider: &dyn Provider, transcript: &Transcript) -> Result<(), SearchError> {
        let prompt = self
            .templates
            .render(&self.ctx, &self.history, iteration)
            .map_err(|e| self.fail_eval(format!("rendering: {e}")))?;
        let mut rejected = Vec::new();
        loop {
            let text = match complete(provider, &prompt, transcript) {
                Ok(t) => t,
                Err(error) => {
                    let partial = self.abort(&error.to_string());
                    return Err(SearchError::ProviderFailure { error, partial });
                }
            };
            match parse_response(&text, &self.ctx) {
                Ok(parsed) => {
                    let mut step = self.blank(iteration, StepSource::Model, parsed.params);
                    step.prompt = Some(prompt);
                    step.response = Some(text);
                    step.parse_retries = rejected.len();
                    step.rejected = rejected;
                    step.explanation = parsed.explanation;
                    return self.evaluate(step);
                }
                Err(e) if e.is_retriable() && rejected.len() < self.config.parse_retries => rejected.push(text),
                Err(_) => {
                    rejected.push(text);
                    let params = self.fallback_params();
                    let mut step = self.blank(iteration, StepSource::Fallback, params);
                    step.prompt = Some(prompt);
                    step.parse_retries = rejected.len() - 1;
                    step.rejected = rejected;
                    return self.evaluate(step);
                }
            }
        }
    }
}

/// Runs the configured search with a provider built from `config.provider`.
pub fn run_search(config: &SearchConfig) -> Result<RunRecord, SearchError> {
    config.validate()?;
    let provider = build_provider(&config.provider).map_err(|e| SearchError::InvalidConfig(e.to_string()))?;
    run_search_with(config, provider.as_ref(), &Transcript::new())
}

/// Policy search; see [`run_search_with`].
pub fn run_policy_search(config: &SearchConfig) -> Result<RunRecord, SearchError> {
    if config.mode == SearchMode::Numopt {
        return Err(SearchError::InvalidConfig("policy search needs an environment mode".into()));
    }
    run_search(config)
}

/// Function minimization; see [`run_search_with`].
pub fn run_numopt(config: &SearchConfig) -> Result<RunRecord, SearchError> {
    if config.mode != SearchMode::Numopt {
        return Err(SearchError::InvalidConfig("minimization needs mode numopt".into()));
    }
    run_search(config)
}

/// Runs the search against `provider`, logging every exchange to `transcript`.
pub fn run_search_with(config: &SearchConfig, provider: &dyn Provider, transcript: &Transcript) -> Result<RunRecord, SearchError> {
    config.validate()?;
    let ctx = config.prompt_context()?;
    let templates = config.templates()?;
    let mut header = RunHeader {
        config: config.clone(),
        objective_shift: None,
        initial_point: None,
        tag: None,
    };
    let uses_seeds = matches!(config.target, Target::Env { .. });
    let objective = match &config.target {
        Target::Objective { function, dim } => {
            let f = Function::by_name(function).map_err(|e| SearchError::InvalidConfig(e.to_string()))?;
            let spec = ObjectiveSpec::shifted(f, *dim, seeding::derive_tagged(config.seed, "shift"));
            let x0 = config.initial_point.clone().unwrap_or_else(|| {
                crate::numopt::sample_initial_point(*dim, &mut seeding::rng(seeding::derive_tagged(config.seed, "init")))
            });
            header.objective_shift = Some(spec.shift.clone());
            header.initial_point = Some(x0);
            Some(spec)
        }
        Target::Env { .. } => None,
    };
    let evaluator: Box<dyn FnMut(&ParamVector, u64) -> Result<f64, String>> = match &config.target {
        Target::Env { env, policy } => {
            let mut e = make(*env);
            let spec = e.spec().clone();
            let (kind, episodes) = (*policy, config.episodes_per_eval);
            Box::new(move |p: &ParamVector, seed| {
                let pol = build(kind, &spec, p.clone()).map_err(|e| e.to_string())?;
                evaluate(e.as_mut(), pol.as_ref(), episodes, seed).map_err(|e| e.to_string())
            })
        }
        Target::Objective { .. } => {
            let spec = objective.clone().expect("objective target");
            Box::new(move |p: &ParamVector, _| spec.eval(&p.0).map_err(|e| e.to_string()))
        }
    };
    let mut run = Loop {
        config,
        history: HistoryBuffer::new(config.history_maxlen),
        record: RunRecord::new(header),
        rng: seeding::rng(seeding::derive_tagged(config.seed, "search")),
        ctx,
        templates,
        evaluator,
        uses_seeds,
        started: Instant::now(),
    };

    let first_prompted = match &objective {
        None => {
            for _ in 0..config.n_seed_examples {
                let p = run.random_params();
                let step = run.blank(0, StepSource::SeedExample, p);
                run.evaluate(step)?;
            }
            1
        }
        Some(spec) => {
            let warmup = config.max_iters.min(2);
            let mut x = run.record.header.initial_point.clone().expect("set above");
            let mut adam = Adam::new(x.len(), config.adam_lr);
            for it in 1..=warmup {
                x = adam.step(&x, &spec.grad_or_zero(&x));
                let step = run.blank(it, StepSource::Warmup, ParamVector(x.clone()));
                run.evaluate(step)?;
            }
            warmup + 1
        }
    };
    for iteration in first_prompted..=config.max_iters {
        run.prompted(iteration, provider, transcript)?;
    }
    Ok(run.finish(RunStatus::Complete))
}
