//! Dynamic motor primitives: `tau² ÿ = f(s)` with phase `s = t / duration` and a
//! normalized Gaussian-basis forcing term, integrated with explicit Euler.

use serde::{Deserialize, Serialize};

use super::ReprError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmpParams {
    pub w: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    pub tau: f64,
    pub y0: f64,
    pub ydot0: f64,
    pub duration: f64,
    pub dt: f64,
}

impl DmpParams {
    /// Centers equally spaced on `[0, 1]`, widths `1 / (2 Δc²)` (width 1 for a single
    /// basis at 0.5), `tau = 1`, starting at rest at 0, one second at `dt = 0.01`.
    pub fn with_weights(w: Vec<f64>) -> Self {
        let n = w.len();
        let (c, h) = if n <= 1 {
            (vec![0.5; n], vec![1.0; n])
        } else {
            let dc = 1.0 / (n - 1) as f64;
            (
                (0..n).map(|i| i as f64 * dc).collect(),
                vec![1.0 / (2.0 * dc * dc); n],
            )
        };
        Self {
            w,
            c,
            h,
            tau: 1.0,
            y0: 0.0,
            ydot0: 0.0,
            duration: 1.0,
            dt: 0.01,
        }
    }

    pub fn n_basis(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<(), ReprError> {
        let bad = |m: &str| Err(ReprError::InvalidDmp(m.into()));
        if self.w.is_empty() {
            return bad("need at least one basis function");
        }
        if self.c.len() != self.w.len() || self.h.len() != self.w.len() {
            return bad("w, c and h must have equal length");
        }
        if self.h.iter().any(|&h| !(h > 0.0)) {
            return bad("widths must be positive");
        }
        if !(self.tau > 0.0 && self.duration > 0.0 && self.dt > 0.0) {
            return bad("tau, duration and dt must be positive");
        }
        Ok(())
    }

    /// Number of samples in a rollout, including `y0`.
    pub fn n_samples(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }
}

/// `psi(s) = exp(-h (s - c)²)`.
pub fn dmp_basis(s: f64, c: f64, h: f64) -> f64 {
    (-h * (s - c).powi(2)).exp()
}

/// `f(s) = Σ w_i psi_i(s) / Σ psi_i(s)`.
pub fn dmp_forcing(s: f64, p: &DmpParams) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for ((w, c), h) in p.w.iter().zip(&p.c).zip(&p.h) {
        let psi = dmp_basis(s, *c, *h);
        num += w * psi;
        den += psi;
    }
    if den > 0.0 {
        num / den
    } else {
        // Far outside every basis: fall back to the nearest center's weight.
        let nearest = (0..p.c.len())
            .min_by(|&a, &b| (s - p.c[a]).abs().total_cmp(&(s - p.c[b]).abs()))
            .unwrap_or(0);
        p.w.get(nearest).copied().unwrap_or(0.0)
    }
}

/// Positions at `t = k dt`, `k = 0..n_samples`.
pub fn dmp_rollout(p: &DmpParams) -> Result<Vec<f64>, ReprError> {
    p.validate()?;
    let n = p.n_samples();
    let mut out = Vec::with_capacity(n);
    let (mut y, mut ydot) = (p.y0, p.ydot0);
    out.push(y);
    let tau2 = p.tau * p.tau;
    for k in 1..n {
        let s = ((k - 1) as f64 * p.dt / p.duration).min(1.0);
        let acc = dmp_forcing(s, p) / tau2;
        y += p.dt * ydot;
        ydot += p.dt * acc;
        if !(y.is_finite() && ydot.is_finite()) {
            return Err(ReprError::NumericOverflow(k));
        }
        out.push(y);
    }
    Ok(out)
}

/// Mean squared pointwise deviation; 0 for two empty trajectories.
pub fn tracking_cost(traj: &[f64], reference: &[f64]) -> Result<f64, ReprError> {
    if traj.len() != reference.len() {
        return Err(ReprError::LengthMismatch(traj.len(), reference.len()));
    }
    if traj.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = traj.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(sum / traj.len() as f64)
}

/// Synthetic tracking objective: the basis weights are the search variables, every other
/// DMP setting comes from `base`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingTask {
    pub base: DmpParams,
    pub reference: Vec<f64>,
}

impl TrackingTask {
    /// Reference produced by `target_weights` under `base`.
    pub fn from_weights(base: DmpParams, target_weights: &[f64]) -> Result<Self, ReprError> {
        let mut target = base.clone();
        target.w = target_weights.to_vec();
        let reference = dmp_rollout(&target)?;
        Ok(Self { base, reference })
    }

    pub fn cost(&self, weights: &[f64]) -> Result<f64, ReprError> {
        let mut p = self.base.clone();
        p.w = weights.to_vec();
        tracking_cost(&dmp_rollout(&p)?, &self.reference)
    }
}
