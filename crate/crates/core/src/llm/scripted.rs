//! Deterministic stand-ins for a model. All state comes from the prompt text, so a
//! scripted run exercises exactly the information a model would see.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Completion, LlmError, Provider, ScriptedStrategy};
use crate::prompt::{format_params_line, PromptFacts};
use crate::seeding;

/// Parent pool size of the (μ+λ) strategy.
pub const MU: usize = 5;

#[derive(Clone, Debug)]
pub struct ScriptedProvider {
    strategy: ScriptedStrategy,
    seed: u64,
}

impl ScriptedProvider {
    pub fn new(strategy: ScriptedStrategy, seed: u64) -> Self {
        Self { strategy, seed }
    }
}

impl Provider for ScriptedProvider {
    fn call(&self, prompt: &str) -> Result<Completion, LlmError> {
        Ok(Completion {
            text: scripted_respond(self.strategy, self.seed, prompt)?,
            attempt: 1,
        })
    }
}

/// History entries ordered best first; ties keep prompt order.
pub(crate) fn ranked(facts: &PromptFacts) -> Vec<&(Vec<f64>, f64)> {
    let mut h: Vec<_> = facts.history.iter().collect();
    if facts.minimize {
        h.sort_by(|a, b| a.1.total_cmp(&b.1));
    } else {
        h.sort_by(|a, b| b.1.total_cmp(&a.1));
    }
    h
}

fn uniform(facts: &PromptFacts, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match &facts.actions {
        Some(a) => (0..facts.rank).map(|_| a[rng.random_range(0..a.len())] as f64).collect(),
        None => {
            let (lo, hi) = facts.value_range;
            (0..facts.rank).map(|_| rng.random_range(lo..=hi)).collect()
        }
    }
}

/// Continuous: add N(0, step²) to each coordinate and clamp to the range.
/// Tabular: redraw each entry with probability 1/rank, at least one entry.
fn mutate(facts: &PromptFacts, x: &mut [f64], rng: &mut ChaCha8Rng) {
    match &facts.actions {
        Some(actions) => {
            let forced = rng.random_range(0..x.len());
            let p = 1.0 / x.len() as f64;
            for (i, v) in x.iter_mut().enumerate() {
                if i == forced || rng.random_bool(p) {
                    *v = actions[rng.random_range(0..actions.len())] as f64;
                }
            }
        }
        None => {
            let (lo, hi) = facts.value_range;
            for v in x.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *v = (*v + facts.step_size * n).clamp(lo, hi);
            }
        }
    }
}

/// Proposal for `prompt` under `strategy`: a params line and a one-line explanation.
///
/// Empty history gives uniform draws over the advertised range. Hill-climb mutates the
/// best entry. (μ+λ) picks two parents uniformly from the best [`MU`] entries,
/// averages them (tabular: uniform crossover) and mutates the child.
pub fn scripted_respond(
    strategy: ScriptedStrategy,
    seed: u64,
    prompt: &str,
) -> Result<String, LlmError> {
    let facts = PromptFacts::extract(prompt).map_err(|e| LlmError::UnparseablePrompt(e.to_string()))?;
    let mut rng = seeding::rng(seeding::derive(seed, seeding::fnv1a(prompt.as_bytes())));
    let ranked = ranked(&facts);
    let (params, why) = match (strategy, ranked.first()) {
        (_, None) => (
            uniform(&facts, &mut rng),
            "No history yet, so this is a uniform draw over the allowed range.".to_string(),
        ),
        (ScriptedStrategy::GaussianHillClimb, Some(best)) => {
            let mut x = best.0.clone();
            mutate(&facts, &mut x, &mut rng);
            (
                x,
                format!(
                    "Perturbed the best params so far (f(params) = {}) with step size {}.",
                    best.1, facts.step_size
                ),
            )
        }
        (ScriptedStrategy::MuPlusLambda, Some(_)) => {
            let pool = &ranked[..ranked.len().min(MU)];
            let a = &pool[rng.random_range(0..pool.len())].0;
            let b = &pool[rng.random_range(0..pool.len())].0;
            let mut x: Vec<f64> = match facts.actions {
                Some(_) => a
                    .iter()
                    .zip(b)
                    .map(|(u, v)| if rng.random_bool(0.5) { *u } else { *v })
                    .collect(),
                None => a.iter().zip(b).map(|(u, v)| 0.5 * (u + v)).collect(),
            };
            mutate(&facts, &mut x, &mut rng);
            (
                x,
                format!(
                    "Recombined two of the best {} params seen so far and mutated the child with step size {}.",
                    pool.len(),
                    facts.step_size
                ),
            )
        }
    };
    let decimals = if facts.actions.is_some() { 0 } else { facts.decimals };
    Ok(format!("{}\n{}", format_params_line(&params, decimals), why))
}
