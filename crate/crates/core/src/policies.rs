//! Deterministic policies over a flat [`ParamVector`].
//!
//! Linear layouts store a row-major `S x A` weight block followed by an `A`-long bias,
//! so for CartPole `params[0..8]` are `W` (4 rows of 2) and `params[8..10]` are `b`.
//! Discrete linear policies take the argmax of `stateᵀW + b` (lowest index on ties);
//! continuous ones return the affine map clipped to the action bounds. Tabular policies
//! store one action index per state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{Action, ActionSpace, EnvSpec, ObsSpace, Observation};

/// Ordered real parameters proposed by the optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(rank: usize) -> Self {
        Self(vec![0.0; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Linear,
    Tabular,
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PolicyKind::Linear => "linear",
            PolicyKind::Tabular => "tabular",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("policy shape mismatch: {0}")]
    PolicyShapeMismatch(String),
    #[error("tabular entry {value} at state {state} is not a legal action")]
    InvalidTabularEntry { state: usize, value: f64 },
    #[error("unsupported policy/environment combination: {0}")]
    UnsupportedCombination(String),
}

fn mismatch(what: &str, expected: usize, got: usize) -> PolicyError {
    PolicyError::PolicyShapeMismatch(format!("{what}: expected {expected}, got {got}"))
}

/// Shape of a linear (affine) policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearLayout {
    pub obs_dim: usize,
    /// Number of discrete actions, or continuous action dimension.
    pub n_out: usize,
}

impl LinearLayout {
    pub fn new(obs_dim: usize, n_out: usize) -> Self {
        Self { obs_dim, n_out }
    }

    pub fn rank(&self) -> usize {
        self.obs_dim * self.n_out + self.n_out
    }

    /// Splits flat params into `W` rows (one per state feature) and `b`.
    pub fn unflatten(&self, params: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>), PolicyError> {
        if params.len() != self.rank() {
            return Err(mismatch("linear params", self.rank(), params.len()));
        }
        let w = params[..self.obs_dim * self.n_out]
            .chunks(self.n_out)
            .map(<[f64]>::to_vec)
            .collect();
        Ok((w, params[self.obs_dim * self.n_out..].to_vec()))
    }

    pub fn flatten(&self, w: &[Vec<f64>], b: &[f64]) -> Result<ParamVector, PolicyError> {
        if w.len() != self.obs_dim || w.iter().any(|r| r.len() != self.n_out) {
            return Err(PolicyError::PolicyShapeMismatch("weight block shape".into()));
        }
        if b.len() != self.n_out {
            return Err(mismatch("bias", self.n_out, b.len()));
        }
        let mut out: Vec<f64> = w.iter().flatten().copied().collect();
        out.extend_from_slice(b);
        Ok(ParamVector(out))
    }

    /// `stateᵀW + b`.
    pub fn scores(&self, params: &[f64], state: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if params.len() != self.rank() {
            return Err(mismatch("linear params", self.rank(), params.len()));
        }
        if state.len() != self.obs_dim {
            return Err(mismatch("state", self.obs_dim, state.len()));
        }
        let (a, bias_at) = (self.n_out, self.obs_dim * self.n_out);
        let mut out = params[bias_at..].to_vec();
        for (i, s) in state.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += s * params[i * a + j];
            }
        }
        Ok(out)
    }
}

/// Shape of a tabular policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabularLayout {
    pub n_states: usize,
    pub action_set: Vec<usize>,
}

impl TabularLayout {
    pub fn rank(&self) -> usize {
        self.n_states
    }

    /// `Some(a)` when `v` is an integer member of the action set.
    pub fn coerce(&self, v: f64) -> Option<usize> {
        if v.fract() != 0.0 || v < 0.0 || !v.is_finite() {
            return None;
        }
        let a = v as usize;
        self.action_set.contains(&a).then_some(a)
    }
}

/// Index of the first maximal score.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn linear_discrete_act(
    params: &[f64],
    layout: &LinearLayout,
    state: &[f64],
) -> Result<usize, PolicyError> {
    Ok(argmax_lowest(&layout.scores(params, state)?))
}

pub fn linear_continuous_act(
    params: &[f64],
    layout: &LinearLayout,
    state: &[f64],
    low: &[f64],
    high: &[f64],
) -> Result<Vec<f64>, PolicyError> {
    if low.len() != layout.n_out || high.len() != layout.n_out {
        return Err(mismatch("action bounds", layout.n_out, low.len()));
    }
    let raw = layout.scores(params, state)?;
    Ok(raw
        .iter()
        .zip(low.iter().zip(high))
        .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
        .collect())
}

pub fn tabular_act(
    params: &[f64],
    layout: &TabularLayout,
    state: usize,
) -> Result<usize, PolicyError> {
    if params.len() != layout.n_states {
        return Err(mismatch("tabular params", layout.n_states, params.len()));
    }
    if state >= layout.n_states {
        return Err(mismatch("state index bound", layout.n_states, state));
    }
    layout
        .coerce(params[state])
        .ok_or(PolicyError::InvalidTabularEntry {
            state,
            value: params[state],
        })
}

pub fn linear_layout(spec: &EnvSpec) -> Result<LinearLayout, PolicyError> {
    let obs_dim = spec.obs_space.vector_dim().ok_or_else(|| {
        PolicyError::UnsupportedCombination(format!(
            "linear policy needs a vector observation, {} has {}",
            spec.name, spec.obs_space
        ))
    })?;
    Ok(LinearLayout::new(obs_dim, spec.action_space.dim()))
}

pub fn tabular_layout(spec: &EnvSpec) -> Result<TabularLayout, PolicyError> {
    let n_states = spec.obs_space.n_states().ok_or_else(|| {
        PolicyError::UnsupportedCombination(format!(
            "tabular policy needs discrete states, {} has {}",
            spec.name, spec.obs_space
        ))
    })?;
    match spec.action_space {
        ActionSpace::Discrete(n) => Ok(TabularLayout {
            n_states,
            action_set: (0..n).collect(),
        }),
        ActionSpace::Continuous { .. } => Err(PolicyError::UnsupportedCombination(format!(
            "tabular policy needs discrete actions, {} is continuous",
            spec.name
        ))),
    }
}

pub fn param_count(kind: PolicyKind, spec: &EnvSpec) -> Result<usize, PolicyError> {
    match kind {
        PolicyKind::Linear => Ok(linear_layout(spec)?.rank()),
        PolicyKind::Tabular => Ok(tabular_layout(spec)?.rank()),
    }
}

/// Anything that maps observations to actions for a given environment.
pub trait Policy: Sync {
    /// Fails with `PolicyShapeMismatch` when the policy cannot drive `spec`.
    fn check(&self, spec: &EnvSpec) -> Result<(), PolicyError>;
    fn act(&self, obs: &Observation) -> Result<Action, PolicyError>;
}

/// Linear policy bound to its parameters.
#[derive(Clone, Debug)]
pub struct LinearPolicy {
    pub layout: LinearLayout,
    pub params: ParamVector,
    /// `Some((low, high))` for continuous actions.
    pub bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl LinearPolicy {
    pub fn for_env(spec: &EnvSpec, params: ParamVector) -> Result<Self, PolicyError> {
        let layout = linear_layout(spec)?;
        if params.rank() != layout.rank() {
            return Err(mismatch("linear params", layout.rank(), params.rank()));
        }
        let bounds = match &spec.action_space {
            ActionSpace::Discrete(_) => None,
            ActionSpace::Continuous { low, high } => Some((low.clone(), high.clone())),
        };
        Ok(Self {
            layout,
            params,
            bounds,
        })
    }
}

fn vector_of(obs: &Observation) -> Result<&[f64], PolicyError> {
    obs.as_vector()
        .ok_or_else(|| PolicyError::PolicyShapeMismatch("expected a vector observation".into()))
}

impl Policy for LinearPolicy {
    fn check(&self, spec: &EnvSpec) -> Result<(), PolicyError> {
        let want = linear_layout(spec)?;
        if want != self.layout {
            return Err(PolicyError::PolicyShapeMismatch(format!(
                "layout {}x{} does not fit {} ({}x{})",
                self.layout.obs_dim, self.layout.n_out, spec.name, want.obs_dim, want.n_out
            )));
        }
        if matches!(spec.action_space, ActionSpace::Continuous { .. }) != self.bounds.is_some() {
            return Err(PolicyError::PolicyShapeMismatch("action kind differs".into()));
        }
        Ok(())
    }

    fn act(&self, obs: &Observation) -> Result<Action, PolicyError> {
        let state = vector_of(obs)?;
        match &self.bounds {
            None => linear_discrete_act(&self.params.0, &self.layout, state).map(Action::Discrete),
            Some((lo, hi)) => linear_continuous_act(&self.params.0, &self.layout, state, lo, hi)
                .map(Action::Continuous),
        }
    }
}

/// Tabular policy bound to its parameters.
#[derive(Clone, Debug)]
pub struct TabularPolicy {
    pub layout: TabularLayout,
    pub params: ParamVector,
}

impl TabularPolicy {
    pub fn for_env(spec: &EnvSpec, params: ParamVector) -> Result<Self, PolicyError> {
        let layout = tabular_layout(spec)?;
        if params.rank() != layout.rank() {
            return Err(mismatch("tabular params", layout.rank(), params.rank()));
        }
        Ok(Self { layout, params })
    }
}

impl Policy for TabularPolicy {
    fn check(&self, spec: &EnvSpec) -> Result<(), PolicyError> {
        let want = tabular_layout(spec)?;
        if want.n_states != self.layout.n_states {
            return Err(mismatch("tabular states", want.n_states, self.layout.n_states));
        }
        if self.layout.action_set.iter().any(|a| !want.action_set.contains(a)) {
            return Err(PolicyError::PolicyShapeMismatch(
                "action set exceeds the environment's".into(),
            ));
        }
        Ok(())
    }

    fn act(&self, obs: &Observation) -> Result<Action, PolicyError> {
        let s = obs.as_index().ok_or_else(|| {
            PolicyError::PolicyShapeMismatch("expected a discrete or one-hot observation".into())
        })?;
        tabular_act(&self.params.0, &self.layout, s).map(Action::Discrete)
    }
}

/// Builds the policy of `kind` for `spec` from flat params.
pub fn build(
    kind: PolicyKind,
    spec: &EnvSpec,
    params: ParamVector,
) -> Result<Box<dyn Policy + Send>, PolicyError> {
    Ok(match kind {
        PolicyKind::Linear => Box::new(LinearPolicy::for_env(spec, params)?),
        PolicyKind::Tabular => Box::new(TabularPolicy::for_env(spec, params)?),
    })
}

/// Default policy kind: tabular for discrete observations, linear otherwise.
pub fn default_kind(spec: &EnvSpec) -> PolicyKind {
    match spec.obs_space {
        ObsSpace::Discrete(_) => PolicyKind::Tabular,
        _ => PolicyKind::Linear,
    }
}
