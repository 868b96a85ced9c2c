//! Baseline optimizers, all minimizing.
//!
//! Derivative-free methods run against an evaluation budget enforced by a counting
//! wrapper: they never call the objective more than `budget` times, and every result
//! carries the best-so-far value after each evaluation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Outcome of a derivative-free run.
#[derive(Clone, Debug, PartialEq)]
pub struct OptResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Best-so-far value after each evaluation.
    pub trace: Vec<f64>,
    pub evals: usize,
}

/// Counts calls and tracks the incumbent; refuses calls past the budget.
struct Counter<'a, F> {
    f: &'a mut F,
    budget: usize,
    best_x: Vec<f64>,
    best_f: f64,
    trace: Vec<f64>,
}

impl<'a, F: FnMut(&[f64]) -> f64> Counter<'a, F> {
    fn new(f: &'a mut F, budget: usize, dim: usize) -> Self {
        Self {
            f,
            budget,
            best_x: vec![f64::NAN; dim],
            best_f: f64::INFINITY,
            trace: Vec::with_capacity(budget.min(4096)),
        }
    }

    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.trace.len() >= self.budget {
            return None;
        }
        let v = (self.f)(x);
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        self.trace.push(self.best_f);
        Some(v)
    }

    fn finish(self) -> OptResult {
        OptResult {
            evals: self.trace.len(),
            best_x: self.best_x,
            best_f: self.best_f,
            trace: self.trace,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

// ---- gradient methods ----

/// `x - lr * g`.
pub fn gd_step(x: &[f64], g: &[f64], lr: f64) -> Vec<f64> {
    x.iter().zip(g).map(|(a, b)| a - lr * b).collect()
}

/// Adam moments with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u32,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// Updates the moments with `g` and returns the next iterate from `x`.
    pub fn step(&mut self, x: &[f64], g: &[f64]) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (xi, gi))| {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = self.m[i] / c1;
                let v_hat = self.v[i] / c2;
                xi - self.lr * m_hat / (v_hat.sqrt() + self.eps)
            })
            .collect()
    }
}

pub fn adam_step(state: &mut Adam, x: &[f64], g: &[f64]) -> Vec<f64> {
    state.step(x, g)
}

// ---- Nelder-Mead ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub rho: f64,
    pub sigma: f64,
    /// Vertex `i` of the initial simplex moves coordinate `i` of `x0` by
    /// `initial_step * x0[i]` when `relative_step` is set (by `zero_step` where
    /// `x0[i] == 0`), otherwise by `initial_step`.
    pub initial_step: f64,
    pub relative_step: bool,
    pub zero_step: f64,
}

impl NelderMeadConfig {
    /// Absolute steps of size `step` along each axis.
    pub fn absolute(step: f64) -> Self {
        Self {
            initial_step: step,
            relative_step: false,
            ..Self::default()
        }
    }

    fn offset(&self, xi: f64) -> f64 {
        match (self.relative_step, xi == 0.0) {
            (false, _) => self.initial_step,
            (true, false) => self.initial_step * xi,
            (true, true) => self.zero_step,
        }
    }
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            gamma: 2.0,
            rho: 0.5,
            sigma: 0.5,
            initial_step: 0.05,
            relative_step: true,
            zero_step: 0.00025,
        }
    }
}

/// Simplex state; one [`NelderMead::iterate`] call is one reflection/expansion/
/// contraction/shrink round.
pub struct NelderMead {
    cfg: NelderMeadConfig,
    simplex: Vec<(Vec<f64>, f64)>,
}

impl NelderMead {
    fn init<F: FnMut(&[f64]) -> f64>(
        cfg: NelderMeadConfig,
        c: &mut Counter<'_, F>,
        x0: &[f64],
    ) -> Option<Self> {
        let mut simplex = vec![(x0.to_vec(), c.eval(x0)?)];
        for i in 0..x0.len() {
            let mut v = x0.to_vec();
            v[i] += cfg.offset(x0[i]);
            let fv = c.eval(&v)?;
            simplex.push((v, fv));
        }
        Some(Self { cfg, simplex })
    }

    /// Returns `None` if the budget ran out mid-iteration.
    fn iterate<F: FnMut(&[f64]) -> f64>(&mut self, c: &mut Counter<'_, F>) -> Option<()> {
        self.simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let n = self.simplex.len() - 1;
        let dim = self.simplex[0].0.len();
        let mut centroid = vec![0.0; dim];
        for (v, _) in &self.simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |from: &[f64], to: &[f64], t: f64| -> Vec<f64> {
            from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
        };
        let (f_best, f_second, f_worst) = (self.simplex[0].1, self.simplex[n - 1].1, self.simplex[n].1);
        let worst = self.simplex[n].0.clone();

        let xr = along(&centroid, &worst, -self.cfg.alpha);
        let fr = c.eval(&xr)?;
        if fr < f_best {
            let xe = along(&centroid, &xr, self.cfg.gamma);
            let fe = c.eval(&xe)?;
            self.simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            return Some(());
        }
        if fr < f_second {
            self.simplex[n] = (xr, fr);
            return Some(());
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(&centroid, &xr, self.cfg.rho);
            let fc = c.eval(&xc)?;
            (xc, if fc <= fr { Some(fc) } else { None })
        } else {
            let xc = along(&centroid, &worst, self.cfg.rho);
            let fc = c.eval(&xc)?;
            (xc, if fc < f_worst { Some(fc) } else { None })
        };
        if let Some(fc) = fc {
            self.simplex[n] = (xc, fc);
            return Some(());
        }
        let best = self.simplex[0].0.clone();
        for i in 1..=n {
            let v = along(&best, &self.simplex[i].0, self.cfg.sigma);
            let fv = c.eval(&v)?;
            self.simplex[i] = (v, fv);
        }
        Some(())
    }
}

/// Nelder-Mead limited to `budget` evaluations.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    budget: usize,
    cfg: &NelderMeadConfig,
) -> OptResult {
    let mut c = Counter::new(&mut f, budget, x0.len());
    if let Some(mut nm) = NelderMead::init(cfg.clone(), &mut c, x0) {
        while nm.iterate(&mut c).is_some() {}
    }
    c.finish()
}

/// Nelder-Mead run for a fixed number of simplex iterations (evaluations unbounded).
pub fn nelder_mead_iterations<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    iterations: usize,
    cfg: &NelderMeadConfig,
) -> OptResult {
    let mut c = Counter::new(&mut f, usize::MAX, x0.len());
    if let Some(mut nm) = NelderMead::init(cfg.clone(), &mut c, x0) {
        for _ in 0..iterations {
            nm.iterate(&mut c);
        }
    }
    c.finish()
}

// ---- random search ----

/// Gaussian hill climbing around the incumbent; `budget` includes the evaluation of `x0`.
pub fn random_search<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    budget: usize,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> OptResult {
    let mut c = Counter::new(&mut f, budget, x0.len());
    if c.eval(x0).is_some() {
        loop {
            let cand: Vec<f64> = c
                .best_x
                .iter()
                .zip(gaussian(rng, x0.len()))
                .map(|(b, n)| b + sigma * n)
                .collect();
            if c.eval(&cand).is_none() {
                break;
            }
        }
    }
    c.finish()
}

// ---- tabu search ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabuConfig {
    /// Step magnitudes tried along each coordinate, in both directions.
    pub steps: Vec<f64>,
    /// Iterations for which the reverse of a taken move stays forbidden.
    pub tenure: usize,
}

impl Default for TabuConfig {
    fn default() -> Self {
        Self {
            steps: vec![0.5, 1.0],
            tenure: 10,
        }
    }
}

/// Coordinate-step tabu search. The whole neighbourhood is evaluated each iteration; the
/// best admissible neighbour becomes the current point even if it is worse. A move is
/// tabu if it reverses a recent move on the same coordinate, unless it beats the best
/// value found so far.
pub fn tabu_search<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    budget: usize,
    cfg: &TabuConfig,
) -> OptResult {
    let mut c = Counter::new(&mut f, budget, x0.len());
    let mut current = x0.to_vec();
    if c.eval(&current).is_none() {
        return c.finish();
    }
    // (coordinate, direction sign, expires at iteration)
    let mut tabu: Vec<(usize, i8, usize)> = Vec::new();
    let mut iteration = 0usize;
    'outer: loop {
        iteration += 1;
        tabu.retain(|t| t.2 >= iteration);
        let best_before = c.best_f;
        let mut chosen: Option<(Vec<f64>, f64, usize, i8)> = None;
        let mut fallback: Option<(Vec<f64>, f64, usize, i8)> = None;
        for i in 0..current.len() {
            for &step in &cfg.steps {
                for sign in [1i8, -1] {
                    let mut cand = current.clone();
                    cand[i] += f64::from(sign) * step;
                    let Some(v) = c.eval(&cand) else {
                        break 'outer;
                    };
                    let is_tabu = tabu.iter().any(|t| t.0 == i && t.1 == sign);
                    let slot = if !is_tabu || v < best_before { &mut chosen } else { &mut fallback };
                    if slot.as_ref().is_none_or(|s| v < s.1) {
                        *slot = Some((cand, v, i, sign));
                    }
                }
            }
        }
        let Some((x, _, i, sign)) = chosen.or(fallback) else {
            break;
        };
        current = x;
        tabu.push((i, -sign, iteration + cfg.tenure));
    }
    c.finish()
}

// ---- (mu + lambda)-ES ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuLambdaConfig {
    pub mu: usize,
    pub lambda: usize,
    pub sigma: f64,
}

impl Default for MuLambdaConfig {
    fn default() -> Self {
        Self {
            mu: 5,
            lambda: 10,
            sigma: 1.0,
        }
    }
}

/// (μ+λ)-ES: offspring are the mean of two uniformly drawn parents plus N(0, σ²)
/// mutation; the best μ of parents and offspring survive. The initial population is
/// `x0` plus μ−1 σ-perturbed copies.
pub fn mu_plus_lambda_es<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    budget: usize,
    cfg: &MuLambdaConfig,
    rng: &mut ChaCha8Rng,
) -> OptResult {
    let dim = x0.len();
    let mut c = Counter::new(&mut f, budget, dim);
    let mut pop: Vec<(Vec<f64>, f64)> = Vec::with_capacity(cfg.mu + cfg.lambda);
    for k in 0..cfg.mu.max(1) {
        let x: Vec<f64> = if k == 0 {
            x0.to_vec()
        } else {
            x0.iter()
                .zip(gaussian(rng, dim))
                .map(|(a, n)| a + cfg.sigma * n)
                .collect()
        };
        match c.eval(&x) {
            Some(v) => pop.push((x, v)),
            None => return c.finish(),
        }
    }
    loop {
        let parents = pop.len();
        for _ in 0..cfg.lambda {
            let p1 = &pop[rng.random_range(0..parents)].0;
            let p2 = &pop[rng.random_range(0..parents)].0;
            let child: Vec<f64> = p1
                .iter()
                .zip(p2)
                .zip(gaussian(rng, dim))
                .map(|((a, b), n)| 0.5 * (a + b) + cfg.sigma * n)
                .collect();
            let Some(v) = c.eval(&child) else {
                return c.finish();
            };
            pop.push((child, v));
        }
        pop.sort_by(|a, b| a.1.total_cmp(&b.1));
        pop.truncate(cfg.mu.max(1));
    }
}

// ---- OpenAI-ES ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsConfig {
    /// Evaluations per generation; must be even (antithetic pairs).
    pub population: usize,
    pub sigma: f64,
    pub lr: f64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            population: 20,
            sigma: 0.5,
            lr: 0.1,
        }
    }
}

/// Antithetic estimate `(1/(nσ)) Σ_pairs (f(θ+σε) − f(θ−σε)) ε` of ∇f(θ), where `n`
/// counts evaluations (two per pair). Returns `None` if `f` refuses an evaluation.
pub fn openai_es_gradient<F: FnMut(&[f64]) -> Option<f64>>(
    mut f: F,
    theta: &[f64],
    cfg: &EsConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<f64>> {
    let pairs = (cfg.population / 2).max(1);
    let n = (2 * pairs) as f64;
    let mut g = vec![0.0; theta.len()];
    for _ in 0..pairs {
        let eps = gaussian(rng, theta.len());
        let plus: Vec<f64> = theta.iter().zip(&eps).map(|(t, e)| t + cfg.sigma * e).collect();
        let minus: Vec<f64> = theta.iter().zip(&eps).map(|(t, e)| t - cfg.sigma * e).collect();
        let diff = f(&plus)? - f(&minus)?;
        for (gi, e) in g.iter_mut().zip(&eps) {
            *gi += diff * e / (n * cfg.sigma);
        }
    }
    Some(g)
}

/// OpenAI-ES descent: `θ ← θ − lr·ĝ` with the antithetic estimate above.
pub fn openai_es<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    budget: usize,
    cfg: &EsConfig,
    rng: &mut ChaCha8Rng,
) -> OptResult {
    let mut c = Counter::new(&mut f, budget, x0.len());
    let mut theta = x0.to_vec();
    if c.eval(&theta).is_none() {
        return c.finish();
    }
    while let Some(g) = openai_es_gradient(|x| c.eval(x), &theta, cfg, rng) {
        theta = gd_step(&theta, &g, cfg.lr);
    }
    c.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn monotone(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] <= w[0])
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let x = [1.0, -2.0];
        assert_eq!(gd_step(&x, &[0.0, 0.0], 0.005), x.to_vec());
        let mut adam = Adam::new(2, 0.5);
        assert_eq!(adam.step(&x, &[0.0, 0.0]), x.to_vec());
    }

    #[test]
    fn gd_on_half_sphere() {
        let x = [3.0, -1.0];
        // grad of ½‖x‖² is x.
        let next = gd_step(&x, &x, 0.005);
        for (n, v) in next.iter().zip(x) {
            assert!((n - (1.0 - 0.005) * v).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_first_step_is_lr() {
        let mut adam = Adam::new(3, 0.5);
        let x = [0.0; 3];
        let next = adam.step(&x, &[2.5, 2.5, 2.5]);
        // m_hat = g, v_hat = g², step = lr * g / (|g| + eps).
        for v in next {
            assert!((v + 0.5 * 2.5 / (2.5 + 1e-8)).abs() < 1e-15);
        }
    }

    #[test]
    fn nelder_mead_quadratic() {
        let r = nelder_mead(
            |x: &[f64]| (x[0] - 1.0).powi(2) + 2.0 * (x[1] + 0.5).powi(2),
            &[5.0, 5.0],
            200,
            &NelderMeadConfig::default(),
        );
        assert!(r.best_f < 1e-6, "{}", r.best_f);
        assert!(r.evals <= 200);
        assert!(monotone(&r.trace));
    }

    #[test]
    fn nelder_mead_initial_simplex() {
        let mut seen = Vec::new();
        nelder_mead(
            |x: &[f64]| {
                seen.push(x.to_vec());
                sphere(x)
            },
            &[1.0, 2.0],
            3,
            &NelderMeadConfig::absolute(1.0),
        );
        assert_eq!(seen, vec![vec![1.0, 2.0], vec![2.0, 2.0], vec![1.0, 3.0]]);
        seen.clear();
        nelder_mead(
            |x: &[f64]| {
                seen.push(x.to_vec());
                sphere(x)
            },
            &[0.0, 20.0],
            3,
            &NelderMeadConfig::default(),
        );
        assert_eq!(seen, vec![vec![0.0, 20.0], vec![0.00025, 20.0], vec![0.0, 21.0]]);
    }

    #[test]
    fn random_search_constant_keeps_x0() {
        let mut rng = seeding::rng(1);
        let r = random_search(|_: &[f64]| 4.0, &[1.5, 2.5], 50, 0.3, &mut rng);
        assert_eq!(r.best_x, vec![1.5, 2.5]);
        assert_eq!(r.evals, 50);
    }

    #[test]
    fn random_search_one_d_square() {
        let mut rng = seeding::rng(2);
        let r = random_search(|x: &[f64]| x[0] * x[0], &[1.0], 1001, 0.3, &mut rng);
        assert!(r.best_f < 0.01, "{}", r.best_f);
        assert!(monotone(&r.trace));
    }

    #[test]
    fn budgets_respected_exactly() {
        let mut rng = seeding::rng(3);
        for budget in [1, 7, 57, 200] {
            let mut calls = 0;
            let mut f = |x: &[f64]| {
                calls += 1;
                sphere(x)
            };
            let results = [
                nelder_mead(&mut f, &[3.0, 1.0], budget, &NelderMeadConfig::default()),
                random_search(&mut f, &[3.0, 1.0], budget, 0.3, &mut rng),
                tabu_search(&mut f, &[3.0, 1.0], budget, &TabuConfig::default()),
                mu_plus_lambda_es(&mut f, &[3.0, 1.0], budget, &MuLambdaConfig::default(), &mut rng),
                openai_es(&mut f, &[3.0, 1.0], budget, &EsConfig::default(), &mut rng),
            ];
            for r in &results {
                assert!(r.evals <= budget);
                assert_eq!(r.trace.len(), r.evals);
                assert!(monotone(&r.trace));
            }
            assert_eq!(calls, results.iter().map(|r| r.evals).sum::<usize>());
            // Every method except a stalled one uses the full budget.
            for r in &results[1..] {
                assert_eq!(r.evals, budget);
            }
        }
    }

    #[test]
    fn tabu_descends_on_sphere() {
        let r = tabu_search(sphere, &[4.0, -3.0], 400, &TabuConfig::default());
        assert!(r.best_f <= 0.5, "{}", r.best_f);
    }

    #[test]
    fn mu_lambda_zero_sigma_collapses_to_x0() {
        let mut rng = seeding::rng(4);
        let cfg = MuLambdaConfig {
            sigma: 0.0,
            ..MuLambdaConfig::default()
        };
        let r = mu_plus_lambda_es(sphere, &[1.0, 1.0], 60, &cfg, &mut rng);
        assert_eq!(r.best_x, vec![1.0, 1.0]);
        assert!(r.trace.iter().all(|v| *v == 2.0));
    }

    #[test]
    fn mu_lambda_and_es_descend() {
        let mut rng = seeding::rng(5);
        let r = mu_plus_lambda_es(sphere, &[4.0, -3.0], 500, &MuLambdaConfig::default(), &mut rng);
        assert!(r.best_f < 0.5, "{}", r.best_f);
        let r = openai_es(sphere, &[4.0, -3.0], 2000, &EsConfig::default(), &mut rng);
        assert!(r.best_f < 0.5, "{}", r.best_f);
    }
}
