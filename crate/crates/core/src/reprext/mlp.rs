//! Small feed-forward policies: affine layers with a hidden activation and an identity
//! output. Each layer is flattened like a linear policy (row-major `W`, then `b`) and
//! layers are concatenated in order, so a per-layer [`super::BlockProjection`] lines up
//! with the parameter blocks.

use serde::{Deserialize, Serialize};

use crate::envs::{Action, ActionSpace, EnvSpec, Observation};
use crate::policies::{argmax_lowest, LinearLayout, ParamVector, Policy, PolicyError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpLayout {
    /// `[n0, n1, ..., n_out]`; at least two entries.
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl MlpLayout {
    pub fn new(sizes: Vec<usize>, activation: Activation) -> Result<Self, PolicyError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(PolicyError::PolicyShapeMismatch(format!(
                "MLP needs >= 2 non-zero layer sizes, got {sizes:?}"
            )));
        }
        Ok(Self { sizes, activation })
    }

    pub fn layers(&self) -> impl Iterator<Item = LinearLayout> + '_ {
        self.sizes.windows(2).map(|w| LinearLayout::new(w[0], w[1]))
    }

    /// Parameter count of each layer.
    pub fn layer_ranks(&self) -> Vec<usize> {
        self.layers().map(|l| l.rank()).collect()
    }

    pub fn rank(&self) -> usize {
        self.layer_ranks().iter().sum()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    /// Raw network output (no clipping).
    pub fn forward(&self, params: &[f64], state: &[f64]) -> Result<Vec<f64>, PolicyError> {
        if params.len() != self.rank() {
            return Err(PolicyError::PolicyShapeMismatch(format!(
                "MLP params: expected {}, got {}",
                self.rank(),
                params.len()
            )));
        }
        let n_layers = self.sizes.len() - 1;
        let mut x = state.to_vec();
        let mut offset = 0;
        for (i, layer) in self.layers().enumerate() {
            let block = &params[offset..offset + layer.rank()];
            offset += layer.rank();
            x = layer.scores(block, &x)?;
            if i + 1 < n_layers {
                x.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
        }
        Ok(x)
    }
}

/// Forward pass clipped to `[low, high]`.
pub fn mlp_act(
    params: &[f64],
    layout: &MlpLayout,
    state: &[f64],
    low: &[f64],
    high: &[f64],
) -> Result<Vec<f64>, PolicyError> {
    if low.len() != layout.output_dim() || high.len() != layout.output_dim() {
        return Err(PolicyError::PolicyShapeMismatch(format!(
            "action bounds: expected {}, got {}",
            layout.output_dim(),
            low.len()
        )));
    }
    Ok(layout
        .forward(params, state)?
        .iter()
        .zip(low.iter().zip(high))
        .map(|(a, (lo, hi))| a.clamp(*lo, *hi))
        .collect())
}

/// MLP bound to an environment: argmax over outputs for discrete actions, clipped
/// outputs for continuous ones.
#[derive(Clone, Debug)]
pub struct MlpPolicy {
    pub layout: MlpLayout,
    pub params: ParamVector,
    pub action_space: ActionSpace,
}

impl MlpPolicy {
    pub fn for_env(
        spec: &EnvSpec,
        hidden: &[usize],
        activation: Activation,
        params: ParamVector,
    ) -> Result<Self, PolicyError> {
        let obs_dim = spec.obs_space.vector_dim().ok_or_else(|| {
            PolicyError::UnsupportedCombination(format!("MLP needs vector observations, {} has none", spec.name))
        })?;
        let mut sizes = vec![obs_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(spec.action_space.dim());
        let layout = MlpLayout::new(sizes, activation)?;
        if params.rank() != layout.rank() {
            return Err(PolicyError::PolicyShapeMismatch(format!(
                "MLP params: expected {}, got {}",
                layout.rank(),
                params.rank()
            )));
        }
        Ok(Self {
            layout,
            params,
            action_space: spec.action_space.clone(),
        })
    }
}

impl Policy for MlpPolicy {
    fn check(&self, spec: &EnvSpec) -> Result<(), PolicyError> {
        if spec.obs_space.vector_dim() != Some(self.layout.input_dim())
            || spec.action_space != self.action_space
        {
            return Err(PolicyError::PolicyShapeMismatch(format!(
                "MLP {:?} does not fit {}",
                self.layout.sizes, spec.name
            )));
        }
        Ok(())
    }

    fn act(&self, obs: &Observation) -> Result<Action, PolicyError> {
        let state = obs
            .as_vector()
            .ok_or_else(|| PolicyError::PolicyShapeMismatch("expected a vector observation".into()))?;
        match &self.action_space {
            ActionSpace::Discrete(_) => {
                let out = self.layout.forward(&self.params.0, state)?;
                Ok(Action::Discrete(argmax_lowest(&out)))
            }
            ActionSpace::Continuous { low, high } => {
                mlp_act(&self.params.0, &self.layout, state, low, high).map(Action::Continuous)
            }
        }
    }
}
