//! Baseline benchmark table: every optimizer × function × dimension from shared
//! initial points, reporting the mean and sample std of the value after `steps` steps.
//!
//! Trial `t` of a (function, dim) cell draws its own shift and an initial point uniform
//! over `[0, 20]^D`; every optimizer sees the same `trials` (shift, start) pairs. A "step" is one gradient update for
//! GD/Adam (the reported value is the final iterate's), one simplex iteration for
//! Nelder-Mead, and one objective evaluation for the other derivative-free methods
//! (their reported value is the best found).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::*;
use super::{sample_initial_point, Function, NumoptError, ObjectiveSpec};
use crate::seeding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    Gd,
    Adam,
    NelderMead,
    Random,
    Tabu,
    MuPlusLambda,
    OpenaiEs,
}

impl Baseline {
    pub const ALL: [Baseline; 7] = [
        Baseline::Gd,
        Baseline::Adam,
        Baseline::NelderMead,
        Baseline::Random,
        Baseline::Tabu,
        Baseline::MuPlusLambda,
        Baseline::OpenaiEs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Baseline::Gd => "gd",
            Baseline::Adam => "adam",
            Baseline::NelderMead => "nelder-mead",
            Baseline::Random => "random",
            Baseline::Tabu => "tabu",
            Baseline::MuPlusLambda => "mu-plus-lambda",
            Baseline::OpenaiEs => "openai-es",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub functions: Vec<String>,
    pub dims: Vec<usize>,
    pub optimizers: Vec<Baseline>,
    pub trials: usize,
    pub steps: usize,
    pub seed: u64,
    pub gd_lr: f64,
    pub adam_lr: f64,
    pub random_sigma: f64,
    pub nelder_mead: NelderMeadConfig,
    pub tabu: TabuConfig,
    pub mu_plus_lambda: MuLambdaConfig,
    pub openai_es: EsConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            functions: Function::NAMES.iter().map(|s| s.to_string()).collect(),
            dims: vec![2, 4, 8, 16],
            optimizers: Baseline::ALL.to_vec(),
            trials: 50,
            steps: 100,
            seed: 0,
            gd_lr: 0.005,
            adam_lr: 0.5,
            random_sigma: 0.3,
            nelder_mead: NelderMeadConfig::default(),
            tabu: TabuConfig::default(),
            mu_plus_lambda: MuLambdaConfig::default(),
            openai_es: EsConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub function: String,
    pub dim: usize,
    pub optimizer: String,
    pub trials: usize,
    pub init_mean: f64,
    pub init_std: f64,
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and (n−1) standard deviation; std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Shifted objective of trial `trial` for `(function, dim)` under `seed`.
pub fn bench_objective(function: &Function, dim: usize, trial: usize, seed: u64) -> ObjectiveSpec {
    let tag = format!("shift/{}/{dim}", function.name());
    let s = seeding::derive(seeding::derive_tagged(seed, &tag), trial as u64);
    ObjectiveSpec::shifted(function.clone(), dim, s)
}

/// The shared initial points for `(function, dim)` under `seed`.
pub fn initial_points(function: &Function, dim: usize, trials: usize, seed: u64) -> Vec<Vec<f64>> {
    let tag = format!("init/{}/{dim}", function.name());
    let mut rng = seeding::rng(seeding::derive_tagged(seed, &tag));
    (0..trials).map(|_| sample_initial_point(dim, &mut rng)).collect()
}

/// Final value of one optimizer run from `x0`.
pub fn run_baseline(
    kind: Baseline,
    spec: &ObjectiveSpec,
    x0: &[f64],
    cfg: &BenchConfig,
    seed: u64,
) -> f64 {
    let f = |x: &[f64]| spec.eval(x).expect("dimension checked");
    let mut rng = seeding::rng(seed);
    let steps = cfg.steps;
    match kind {
        Baseline::Gd => {
            let mut x = x0.to_vec();
            for _ in 0..steps {
                x = gd_step(&x, &spec.grad_or_zero(&x), cfg.gd_lr);
            }
            f(&x)
        }
        Baseline::Adam => {
            let mut x = x0.to_vec();
            let mut adam = Adam::new(x.len(), cfg.adam_lr);
            for _ in 0..steps {
                x = adam.step(&x, &spec.grad_or_zero(&x));
            }
            f(&x)
        }
        Baseline::NelderMead => nelder_mead_iterations(f, x0, steps, &cfg.nelder_mead).best_f,
        Baseline::Random => random_search(f, x0, steps, cfg.random_sigma, &mut rng).best_f,
        Baseline::Tabu => tabu_search(f, x0, steps, &cfg.tabu).best_f,
        Baseline::MuPlusLambda => {
            mu_plus_lambda_es(f, x0, steps, &cfg.mu_plus_lambda, &mut rng).best_f
        }
        Baseline::OpenaiEs => openai_es(f, x0, steps, &cfg.openai_es, &mut rng).best_f,
    }
}

/// Runs the full table. Trials run in parallel; results do not depend on scheduling.
pub fn bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, NumoptError> {
    let mut rows = Vec::new();
    for name in &cfg.functions {
        let function = Function::by_name(name)?;
        for &dim in &cfg.dims {
            let specs: Vec<ObjectiveSpec> = (0..cfg.trials)
                .map(|t| bench_objective(&function, dim, t, cfg.seed))
                .collect();
            let starts = initial_points(&function, dim, cfg.trials, cfg.seed);
            let init: Vec<f64> = specs
                .iter()
                .zip(&starts)
                .map(|(spec, x)| spec.eval(x))
                .collect::<Result<_, _>>()?;
            let (init_mean, init_std) = mean_std(&init);
            for &kind in &cfg.optimizers {
                let finals: Vec<f64> = starts
                    .par_iter()
                    .enumerate()
                    .map(|(t, x0)| {
                        let tag = format!("trial/{}/{dim}/{}", function.name(), kind.name());
                        let seed = seeding::derive(seeding::derive_tagged(cfg.seed, &tag), t as u64);
                        run_baseline(kind, &specs[t], x0, cfg, seed)
                    })
                    .collect();
                let (mean, std) = mean_std(&finals);
                rows.push(BenchRow {
                    function: function.name().to_string(),
                    dim,
                    optimizer: kind.name().to_string(),
                    trials: cfg.trials,
                    init_mean,
                    init_std,
                    mean,
                    std,
                });
            }
        }
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("function,dim,optimizer,trials,init_mean,init_std,mean,std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4}\n",
            r.function, r.dim, r.optimizer, r.trials, r.init_mean, r.init_std, r.mean, r.std
        ));
    }
    out
}
