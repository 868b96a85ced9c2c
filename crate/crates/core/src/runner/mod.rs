//! Config-driven experiments: fan trials out over a worker pool, persist each trial's
//! record and transcript, and summarize finished records into mean ± std tables.
//!
//! Output layout: `<output_dir>/<provider>/<target>-<mode>-<seed>.jsonl` plus the
//! matching `.summary.json` and `.transcript.jsonl`.

mod config;
mod summary;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::llm::{build_provider, ProviderKind, Transcript};
use crate::search::{
    evaluate_params, read_record, read_summary, record_stem, run_search_with, write_record, RunRecord,
    RunStatus, SearchConfig, SearchError, TrialTag,
};
use crate::seeding;

pub use config::{load_config, parse_config, ExperimentConfig, RowConfig};
pub use summary::{format_cell, metrics_rows, render_summary, summarize, MetricsRow, Summary};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("i/o: {0}")]
    Io(String),
    #[error("no run records under {0}")]
    NoRecords(PathBuf),
    #[error("corrupt record: {0}")]
    RecordCorrupt(String),
}

impl From<SearchError> for RunnerError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Io(m) => RunnerError::Io(m),
            other => RunnerError::RecordCorrupt(other.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Skip trials whose finished record with identical settings is already on disk.
    pub resume: bool,
}

/// A trial that did not complete.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub row: String,
    pub trial: usize,
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// Complete and partial records, in (row, trial) order.
    pub records: Vec<RunRecord>,
    pub rows: Vec<MetricsRow>,
    pub failures: Vec<TrialFailure>,
    /// Trials loaded from disk instead of run.
    pub resumed: usize,
}

impl ExperimentOutcome {
    pub fn all_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Seed of trial `trial` of `row`: distinct per row and trial, fixed by the global seed.
pub fn trial_seed(global: u64, row: &RowConfig, trial: usize) -> u64 {
    seeding::derive(seeding::derive_tagged(global, &row.key()), trial as u64)
}

/// The fully resolved search settings of one trial.
pub fn trial_config(experiment: &ExperimentConfig, row: &RowConfig, trial: usize) -> SearchConfig {
    let seed = trial_seed(experiment.seed, row, trial);
    let mut c = row.search.clone();
    c.seed = seed;
    c.provider.scripted_seed = seeding::derive(row.search.provider.scripted_seed, seed);
    if c.provider.kind == ProviderKind::Replay {
        c.provider.replay_path = c.provider.replay_path.map(|p| {
            PathBuf::from(
                p.to_string_lossy()
                    .replace("{seed}", &seed.to_string())
                    .replace("{trial}", &trial.to_string()),
            )
        });
    }
    c
}

/// Where the record of `config` lands for provider `provider_name`.
pub fn record_path(output_dir: &Path, provider_name: &str, config: &SearchConfig) -> PathBuf {
    output_dir.join(provider_name).join(format!("{}.jsonl", record_stem(config)))
}

fn transcript_path(record: &Path) -> PathBuf {
    let stem = record.file_stem().unwrap_or_default().to_string_lossy();
    record.with_file_name(format!("{stem}.transcript.jsonl"))
}

enum TrialResult {
    Done(RunRecord, bool),
    Failed(Option<RunRecord>, TrialFailure),
}

fn run_trial(experiment: &ExperimentConfig, row: &RowConfig, trial: usize, opts: RunOptions) -> Result<TrialResult, RunnerError> {
    let config = trial_config(experiment, row, trial);
    let tag = TrialTag {
        experiment: experiment.name.clone(),
        provider: row.provider_name.clone(),
        trial,
        trials: row.trials,
    };
    let path = record_path(&experiment.output_dir, &row.provider_name, &config);
    if opts.resume {
        if let Some((header, summary)) = read_summary(&path)? {
            if summary.status == RunStatus::Complete && header.config == config && header.tag.as_ref() == Some(&tag) {
                return Ok(TrialResult::Done(read_record(&path)?, true));
            }
        }
    }
    let failure = |error: String| TrialFailure {
        row: row.key(),
        trial,
        path: path.clone(),
        error,
    };
    let provider = match build_provider(&config.provider) {
        Ok(p) => p,
        Err(e) => return Ok(TrialResult::Failed(None, failure(e.to_string()))),
    };
    let transcript = Transcript::new();
    let result = run_search_with(&config, provider.as_ref(), &transcript);
    let write_transcript = || {
        let tp = transcript_path(&path);
        std::fs::write(&tp, transcript.to_jsonl()).map_err(|e| RunnerError::Io(format!("{}: {e}", tp.display())))
    };
    match result {
        Ok(mut record) => {
            record.header.tag = Some(tag);
            write_record(&record, &path)?;
            write_transcript()?;
            Ok(TrialResult::Done(record, false))
        }
        Err(e) => {
            let message = e.to_string();
            let partial = match e {
                SearchError::ProviderFailure { partial, .. } | SearchError::Evaluation { partial, .. } => {
                    let mut p = *partial;
                    p.header.tag = Some(tag);
                    write_record(&p, &path)?;
                    write_transcript()?;
                    Some(p)
                }
                _ => None,
            };
            Ok(TrialResult::Failed(partial, failure(message)))
        }
    }
}

/// Runs every trial of every row on a pool of `config.parallelism` threads.
///
/// Records are written as trials finish; the returned metrics are computed from the
/// same records [`summarize`] would read back.
pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentOutcome, RunnerError> {
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| RunnerError::Io(format!("{}: {e}", config.output_dir.display())))?;
    for row in &config.rows {
        let d = config.output_dir.join(&row.provider_name);
        std::fs::create_dir_all(&d).map_err(|e| RunnerError::Io(format!("{}: {e}", d.display())))?;
    }
    let jobs: Vec<(&RowConfig, usize)> = config
        .rows
        .iter()
        .flat_map(|r| (0..r.trials).map(move |t| (r, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism.max(1))
        .build()
        .map_err(|e| RunnerError::Io(format!("thread pool: {e}")))?;
    let results: Vec<Result<TrialResult, RunnerError>> =
        pool.install(|| jobs.par_iter().map(|(row, t)| run_trial(config, row, *t, opts)).collect());

    let mut outcome = ExperimentOutcome {
        records: Vec::new(),
        rows: Vec::new(),
        failures: Vec::new(),
        resumed: 0,
    };
    for r in results {
        match r? {
            TrialResult::Done(rec, resumed) => {
                outcome.resumed += usize::from(resumed);
                outcome.records.push(rec);
            }
            TrialResult::Failed(partial, f) => {
                outcome.records.extend(partial);
                outcome.failures.push(f);
            }
        }
    }
    outcome.rows = metrics_rows(&outcome.records);
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub index: usize,
    pub recorded: f64,
    pub replayed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub evaluations: usize,
    pub max_deviation: f64,
    pub mismatches: Vec<Mismatch>,
    /// The recorded best value disagrees with the recorded steps.
    pub summary_mismatch: bool,
}

impl ReplayReport {
    pub fn is_exact(&self) -> bool {
        self.mismatches.is_empty() && !self.summary_mismatch
    }
}

/// Re-evaluates every recorded params with its recorded seed.
pub fn replay(path: &Path) -> Result<ReplayReport, RunnerError> {
    let record = read_record(path)?;
    let config = &record.header.config;
    let mut report = ReplayReport {
        evaluations: 0,
        max_deviation: 0.0,
        mismatches: Vec::new(),
        summary_mismatch: false,
    };
    let is_env = matches!(config.target, crate::search::Target::Env { .. });
    for s in &record.steps {
        let seed = match (is_env, s.eval_seed) {
            (true, Some(seed)) => seed,
            (true, None) => {
                return Err(RunnerError::RecordCorrupt(format!("step {} has no evaluation seed", s.index)))
            }
            (false, _) => 0,
        };
        let replayed = evaluate_params(config, &record.header, &s.params, seed)
            .map_err(|e| RunnerError::RecordCorrupt(format!("step {}: {e}", s.index)))?;
        report.evaluations += 1;
        let dev = (replayed - s.f).abs();
        if dev.is_nan() || dev > 0.0 {
            report.max_deviation = report.max_deviation.max(if dev.is_nan() { f64::INFINITY } else { dev });
            report.mismatches.push(Mismatch {
                index: s.index,
                recorded: s.f,
                replayed,
            });
        }
    }
    let best = if record.minimize() {
        record.steps.iter().map(|s| s.f).reduce(f64::min)
    } else {
        record.steps.iter().map(|s| s.f).reduce(f64::max)
    };
    report.summary_mismatch = best != record.summary.best_f;
    Ok(report)
}
