//! Shifted benchmark objectives with analytic gradients, plus classical baseline
//! optimizers and the benchmark table driver.
//!
//! Every objective is evaluated as `f(x - o)` for a shift vector `o`. Minimizers sit at
//! `o` (Levy: `o + 1`) with value 0.

pub mod bench;
pub mod optim;

use std::f64::consts::{E, PI};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding;

pub use optim::{
    adam_step, gd_step, mu_plus_lambda_es, nelder_mead, openai_es, openai_es_gradient,
    random_search, tabu_search, Adam, EsConfig, MuLambdaConfig, NelderMead, NelderMeadConfig,
    OptResult, TabuConfig,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumoptError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionError { expected: usize, got: usize },
    #[error("gradient undefined at a non-smooth point (radius {radius:e})")]
    NonSmoothPoint { radius: f64 },
    #[error("unknown objective `{0}`")]
    UnknownFunction(String),
}

/// Unshifted benchmark function with its constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "function", rename_all = "kebab-case")]
pub enum Function {
    Ackley { a: f64, b: f64, c: f64 },
    Rastrigin,
    Levy,
    Weierstrass { a: f64, b: f64, k_max: u32 },
    Salomon,
}

/// Radius below which radial gradients are reported as undefined.
const SMOOTH_EPS: f64 = 1e-12;

impl Function {
    pub const NAMES: [&'static str; 5] = ["ackley", "rastrigin", "levy", "weierstrass", "salomon"];

    pub fn ackley() -> Self {
        Function::Ackley {
            a: 20.0,
            b: 0.2,
            c: 2.0 * PI,
        }
    }

    pub fn weierstrass() -> Self {
        Function::Weierstrass {
            a: 0.5,
            b: 3.0,
            k_max: 20,
        }
    }

    /// Function with standard constants by name.
    pub fn by_name(name: &str) -> Result<Self, NumoptError> {
        Ok(match name {
            "ackley" => Self::ackley(),
            "rastrigin" => Function::Rastrigin,
            "levy" => Function::Levy,
            "weierstrass" => Self::weierstrass(),
            "salomon" => Function::Salomon,
            other => return Err(NumoptError::UnknownFunction(other.to_string())),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Function::Ackley { .. } => "ackley",
            Function::Rastrigin => "rastrigin",
            Function::Levy => "levy",
            Function::Weierstrass { .. } => "weierstrass",
            Function::Salomon => "salomon",
        }
    }

    /// Offset of the minimizer from the shift vector (Levy's minimum is at all-ones).
    pub fn minimizer_offset(&self) -> f64 {
        match self {
            Function::Levy => 1.0,
            _ => 0.0,
        }
    }

    /// Value at the unshifted point `z`.
    pub fn value(&self, z: &[f64]) -> f64 {
        let d = z.len() as f64;
        match *self {
            Function::Ackley { a, b, c } => {
                let sq = z.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = z.iter().map(|v| (c * v).cos()).sum::<f64>() / d;
                -a * (-b * sq.sqrt()).exp() - cs.exp() + a + E
            }
            Function::Rastrigin => {
                10.0 * d
                    + z.iter()
                        .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
                        .sum::<f64>()
            }
            Function::Levy => {
                let w: Vec<f64> = z.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let n = w.len();
                let mut f = (PI * w[0]).sin().powi(2);
                for wi in &w[..n - 1] {
                    f += (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2));
                }
                let wd = w[n - 1];
                f + (wd - 1.0).powi(2) * (1.0 + (2.0 * PI * wd).sin().powi(2))
            }
            Function::Weierstrass { a, b, k_max } => {
                let mut f = 0.0;
                for v in z {
                    let (mut ak, mut bk) = (1.0, 1.0);
                    for _ in 0..=k_max {
                        f += ak * (2.0 * PI * bk * (v + 0.5)).cos();
                        ak *= a;
                        bk *= b;
                    }
                }
                let (mut ak, mut bk, mut offset) = (1.0, 1.0, 0.0);
                for _ in 0..=k_max {
                    offset += ak * (PI * bk).cos();
                    ak *= a;
                    bk *= b;
                }
                f - d * offset
            }
            Function::Salomon => {
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                1.0 - (2.0 * PI * r).cos() + 0.1 * r
            }
        }
    }

    /// Analytic gradient at the unshifted point `z`.
    pub fn gradient(&self, z: &[f64]) -> Result<Vec<f64>, NumoptError> {
        let d = z.len() as f64;
        match *self {
            Function::Ackley { a, b, c } => {
                let r = (z.iter().map(|v| v * v).sum::<f64>() / d).sqrt();
                if r < SMOOTH_EPS {
                    return Err(NumoptError::NonSmoothPoint { radius: r });
                }
                let e1 = a * b * (-b * r).exp() / (d * r);
                let e2 = (z.iter().map(|v| (c * v).cos()).sum::<f64>() / d).exp() * c / d;
                Ok(z.iter().map(|v| e1 * v + e2 * (c * v).sin()).collect())
            }
            Function::Rastrigin => Ok(z
                .iter()
                .map(|v| 2.0 * v + 20.0 * PI * (2.0 * PI * v).sin())
                .collect()),
            Function::Levy => {
                let n = z.len();
                let w: Vec<f64> = z.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
                let mut g = vec![0.0; n];
                // d/dw of each term, chained with dw/dz = 1/4 at the end.
                g[0] += 2.0 * PI * (PI * w[0]).sin() * (PI * w[0]).cos();
                for i in 0..n - 1 {
                    let s = (PI * w[i] + 1.0).sin();
                    let c = (PI * w[i] + 1.0).cos();
                    g[i] += 2.0 * (w[i] - 1.0) * (1.0 + 10.0 * s * s)
                        + (w[i] - 1.0).powi(2) * 20.0 * PI * s * c;
                }
                let wd = w[n - 1];
                let s = (2.0 * PI * wd).sin();
                let c = (2.0 * PI * wd).cos();
                g[n - 1] += 2.0 * (wd - 1.0) * (1.0 + s * s) + (wd - 1.0).powi(2) * 4.0 * PI * s * c;
                Ok(g.into_iter().map(|v| v / 4.0).collect())
            }
            Function::Weierstrass { a, b, k_max } => Ok(z
                .iter()
                .map(|v| {
                    let (mut ak, mut bk, mut g) = (1.0, 1.0, 0.0);
                    for _ in 0..=k_max {
                        g -= ak * 2.0 * PI * bk * (2.0 * PI * bk * (v + 0.5)).sin();
                        ak *= a;
                        bk *= b;
                    }
                    g
                })
                .collect()),
            Function::Salomon => {
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if r < SMOOTH_EPS {
                    return Err(NumoptError::NonSmoothPoint { radius: r });
                }
                let k = (2.0 * PI * (2.0 * PI * r).sin() + 0.1) / r;
                Ok(z.iter().map(|v| k * v).collect())
            }
        }
    }
}

/// A benchmark function applied to `x - shift`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    #[serde(flatten)]
    pub function: Function,
    pub shift: Vec<f64>,
}

impl ObjectiveSpec {
    pub fn new(function: Function, shift: Vec<f64>) -> Self {
        Self { function, shift }
    }

    /// Objective with a shift drawn by [`sample_shift`].
    pub fn shifted(function: Function, dim: usize, seed: u64) -> Self {
        Self::new(function, sample_shift(dim, seed))
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn minimizer(&self) -> Vec<f64> {
        let off = self.function.minimizer_offset();
        self.shift.iter().map(|o| o + off).collect()
    }

    fn unshift(&self, x: &[f64]) -> Result<Vec<f64>, NumoptError> {
        if x.len() != self.dim() {
            return Err(NumoptError::DimensionError {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter().zip(&self.shift).map(|(a, o)| a - o).collect())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, NumoptError> {
        Ok(self.function.value(&self.unshift(x)?))
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>, NumoptError> {
        self.function.gradient(&self.unshift(x)?)
    }

    /// Gradient with undefined points mapped to zero; used inside optimizer loops.
    pub fn grad_or_zero(&self, x: &[f64]) -> Vec<f64> {
        match self.grad(x) {
            Ok(g) => g,
            Err(_) => vec![0.0; x.len()],
        }
    }
}

/// Shift vector with components drawn uniformly from (0, 20).
pub fn sample_shift(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeding::rng(seed);
    (0..dim)
        .map(|_| loop {
            let v: f64 = rng.random_range(0.0..20.0);
            if v > 0.0 {
                break v;
            }
        })
        .collect()
}

/// Initial point for baseline and LLM trials: uniform over `[0, 20]^dim`.
pub fn sample_initial_point(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.0..=20.0)).collect()
}
