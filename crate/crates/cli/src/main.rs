//! `props`: run experiments, summarize and replay records, print baseline tables and
//! rendered prompts.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use props_core::envs::EnvName;
use props_core::llm::{ProviderConfig, ScriptedStrategy};
use props_core::numopt::bench::{bench, to_csv, Baseline, BenchConfig};
use props_core::policies::{default_kind, param_count, PolicyKind};
use props_core::prompt::{HistoryBuffer, Templates};
use props_core::runner::{load_config, replay, run_experiment, summarize, RunOptions};
use props_core::search::{SearchConfig, SearchMode, Target};

#[derive(Parser)]
#[command(name = "props", version, about = "Prompted policy search laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of an experiment file.
    Run {
        config: PathBuf,
        /// Keep finished trials already on disk.
        #[arg(long)]
        resume: bool,
    },
    /// Print the mean ± std table of the records under a directory.
    Summarize { dir: PathBuf },
    /// Re-evaluate a record with its recorded seeds.
    Replay { record: PathBuf },
    /// Baseline optimizers on the shifted benchmark functions, as CSV.
    Bench {
        /// Comma-separated function names (default: all).
        #[arg(long, value_delimiter = ',')]
        functions: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Comma-separated optimizer names (default: all).
        #[arg(long, value_delimiter = ',')]
        optimizers: Vec<String>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the environments with their spaces and default policy size.
    ListEnvs,
    /// Print the prompt a run would send at a given iteration (empty history).
    RenderPrompt {
        /// Environment name or `<function>-<dim>d`.
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "props")]
        mode: String,
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, default_value_t = 1)]
        iteration: usize,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        optimum: Option<f64>,
        #[arg(long)]
        step_size: Option<f64>,
        /// Directory of alternative `<mode>.txt` templates.
        #[arg(long)]
        templates: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// `Ok(false)` means the command ran but found failures.
fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run { config, resume } => {
            let cfg = load_config(&config)?;
            let out = run_experiment(&cfg, RunOptions { resume })?;
            print!("{}", props_core::runner::render_summary(&out.records).table);
            if out.resumed > 0 {
                eprintln!("{} trial(s) resumed from disk", out.resumed);
            }
            for f in &out.failures {
                eprintln!("failed: {} trial {}: {}", f.row, f.trial, f.error);
            }
            Ok(out.all_complete())
        }
        Command::Summarize { dir } => {
            let s = summarize(&dir)?;
            print!("{}", s.table);
            Ok(true)
        }
        Command::Replay { record } => {
            let r = replay(&record)?;
            println!(
                "{} evaluations, max deviation {}, {} mismatch(es){}",
                r.evaluations,
                r.max_deviation,
                r.mismatches.len(),
                if r.summary_mismatch { ", summary best disagrees with steps" } else { "" }
            );
            for m in &r.mismatches {
                println!("  step {}: recorded {} replayed {}", m.index, m.recorded, m.replayed);
            }
            Ok(r.is_exact())
        }
        Command::Bench { functions, dims, optimizers, trials, steps, seed, out } => {
            let mut cfg = BenchConfig { trials, steps, seed, ..BenchConfig::default() };
            if !functions.is_empty() {
                cfg.functions = functions;
            }
            if !dims.is_empty() {
                cfg.dims = dims;
            }
            if !optimizers.is_empty() {
                cfg.optimizers = optimizers
                    .iter()
                    .map(|o| Baseline::parse(o).with_context(|| format!("unknown optimizer `{o}`")))
                    .collect::<Result<_>>()?;
            }
            let csv = to_csv(&bench(&cfg)?);
            match out {
                Some(p) => std::fs::write(&p, csv).with_context(|| p.display().to_string())?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::ListEnvs => {
            println!("{:<16}{:<18}{:<30}{:>10}  policy (params)", "name", "observation", "action", "max_steps");
            for name in EnvName::ALL {
                let spec = name.spec();
                let kind = default_kind(&spec);
                println!(
                    "{:<16}{:<18}{:<30}{:>10}  {kind} ({})",
                    name.as_str(),
                    spec.obs_space.to_string(),
                    spec.action_space.to_string(),
                    spec.max_steps,
                    param_count(kind, &spec)?
                );
            }
            Ok(true)
        }
        Command::RenderPrompt { target, mode, policy, iteration, max_iters, optimum, step_size, templates } => {
            let policy = match policy.as_deref() {
                None => None,
                Some("linear") => Some(PolicyKind::Linear),
                Some("tabular") => Some(PolicyKind::Tabular),
                Some(p) => bail!("unknown policy `{p}`"),
            };
            let target = Target::parse(&target, policy).map_err(anyhow::Error::msg)?;
            let mode: SearchMode = mode.parse().map_err(anyhow::Error::msg)?;
            let provider = ProviderConfig::scripted(ScriptedStrategy::GaussianHillClimb, 0);
            let mut cfg = match &target {
                Target::Env { env, policy } => SearchConfig::policy(*env, *policy, mode, provider, 0),
                Target::Objective { function, dim } => SearchConfig::numopt(function, *dim, provider, 0),
            };
            cfg.mode = mode;
            if let Some(m) = max_iters {
                cfg.max_iters = m;
            }
            cfg.optimum_hint = optimum;
            cfg.step_size = step_size;
            cfg.validate()?;
            let ctx = cfg.prompt_context()?;
            let t = match templates {
                Some(d) => Templates::load_dir(&d)?,
                None => Templates::builtin(),
            };
            print!("{}", t.render(&ctx, &HistoryBuffer::unbounded(), iteration)?);
            Ok(true)
        }
    }
}
