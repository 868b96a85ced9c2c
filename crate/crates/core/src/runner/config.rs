//! Experiment files: TOML with global settings, named providers and one table per row.
//!
//! ```toml
//! name = "cartpole-es"
//! output_dir = "runs/cartpole-es"   # relative to the config file
//! parallelism = 4                   # worker threads; default: all cores
//! seed = 0
//!
//! [providers.es]
//! kind = "scripted"
//! scripted_strategy = "mu-plus-lambda"
//!
//! [[rows]]
//! target = "cart-pole"              # environment name or `<function>-<dim>d`
//! mode = "props"                    # props | props-plus | props-plus-hints | numopt
//! provider = "es"
//! trials = 10
//! # optional: policy, max_iters, episodes_per_eval, history_maxlen,
//! # n_seed_examples, optimum_hint, step_size, templates_dir, adam_lr
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::RunnerError;
use crate::llm::{ProviderConfig, ProviderKind};
use crate::policies::PolicyKind;
use crate::search::{SearchConfig, SearchMode, Target};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    output_dir: PathBuf,
    parallelism: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    providers: BTreeMap<String, ProviderConfig>,
    #[serde(default)]
    rows: Vec<RawRow>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    target: String,
    mode: String,
    provider: String,
    trials: usize,
    policy: Option<PolicyKind>,
    max_iters: Option<usize>,
    episodes_per_eval: Option<usize>,
    history_maxlen: Option<usize>,
    n_seed_examples: Option<usize>,
    optimum_hint: Option<f64>,
    step_size: Option<f64>,
    templates_dir: Option<PathBuf>,
    adam_lr: Option<f64>,
}

/// One (target, mode, provider) cell of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct RowConfig {
    pub provider_name: String,
    pub trials: usize,
    /// Search settings shared by all trials; seed and provider seed are set per trial.
    pub search: SearchConfig,
}

impl RowConfig {
    /// `<target>/<mode>/<provider>`.
    pub fn key(&self) -> String {
        format!(
            "{}/{}/{}",
            self.search.target.label(),
            self.search.mode.as_str(),
            self.provider_name
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
    pub rows: Vec<RowConfig>,
}

/// Reads and validates an experiment file. Relative paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunnerError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunnerError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base)
}

/// Parses experiment TOML; `base` anchors relative paths.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, RunnerError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| RunnerError::Parse(e.to_string()))?;
    let mut errors = Vec::new();
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    if raw.name.trim().is_empty() {
        errors.push("name: must not be empty".into());
    }
    if raw.parallelism == Some(0) {
        errors.push("parallelism: must be at least 1".into());
    }
    for (name, p) in &raw.providers {
        errors.extend(p.violations().into_iter().map(|m| format!("providers.{name}: {m}")));
    }
    if raw.rows.is_empty() {
        errors.push("rows: at least one row is required".into());
    }

    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, r) in raw.rows.iter().enumerate() {
        let at = |field: &str, m: String| format!("rows[{i}].{field}: {m}");
        let target = Target::parse(&r.target, r.policy).map_err(|m| at("target", m));
        let mode = r.mode.parse::<SearchMode>().map_err(|m| at("mode", m));
        let provider = match raw.providers.get(&r.provider) {
            Some(p) => Ok(p.clone()),
            None => Err(at("provider", format!("no [providers.{}] table", r.provider))),
        };
        if r.trials == 0 {
            errors.push(at("trials", "must be at least 1".into()));
        }
        let (target, mode, provider) = match (target, mode, provider) {
            (Ok(t), Ok(m), Ok(p)) => (t, m, p),
            (t, m, p) => {
                errors.extend([t.err(), m.err(), p.err()].into_iter().flatten());
                continue;
            }
        };
        let mut search = match &target {
            Target::Env { env, policy } => SearchConfig::policy(*env, *policy, mode, provider, 0),
            Target::Objective { function, dim } => {
                let mut c = SearchConfig::numopt(function, *dim, provider, 0);
                c.mode = mode;
                c
            }
        };
        search.target = target;
        if let Some(v) = r.max_iters {
            search.max_iters = v;
        }
        if let Some(v) = r.episodes_per_eval {
            search.episodes_per_eval = v;
        }
        if let Some(v) = r.n_seed_examples {
            search.n_seed_examples = v;
        }
        if let Some(v) = r.adam_lr {
            search.adam_lr = v;
        }
        search.history_maxlen = r.history_maxlen;
        search.optimum_hint = r.optimum_hint;
        search.step_size = r.step_size;
        search.templates_dir = r.templates_dir.as_deref().map(resolve);
        // Replay files are checked when a trial starts; `{seed}` and `{trial}` vary per trial.
        if search.provider.kind == ProviderKind::Replay {
            search.provider.replay_path = search.provider.replay_path.as_deref().map(resolve);
        }
        errors.extend(
            search
                .violations()
                .into_iter()
                .filter(|m| !m.starts_with("provider:"))
                .map(|m| format!("rows[{i}]: {m}")),
        );
        let row = RowConfig {
            provider_name: r.provider.clone(),
            trials: r.trials,
            search,
        };
        if !seen.insert(row.key()) {
            errors.push(format!("rows[{i}]: duplicate row {}", row.key()));
        }
        rows.push(row);
    }

    if !errors.is_empty() {
        return Err(RunnerError::Validation(errors));
    }
    Ok(ExperimentConfig {
        name: raw.name,
        output_dir: resolve(&raw.output_dir),
        parallelism: raw
            .parallelism
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        seed: raw.seed,
        rows,
    })
}
