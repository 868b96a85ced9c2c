//! Prompt contexts and the per-environment text assets and defaults.

use serde::{Deserialize, Serialize};

use super::template::render_template;
use super::PromptError;
use crate::envs::{ActionSpace, EnvName, EnvSpec};
use crate::policies::{linear_layout, tabular_layout, PolicyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptMode {
    PropsLinear,
    PropsTabular,
    PropsPlus,
    PropsPlusTabular,
    NumoptMin,
}

impl PromptMode {
    pub const ALL: [PromptMode; 5] = [
        PromptMode::PropsLinear,
        PromptMode::PropsTabular,
        PromptMode::PropsPlus,
        PromptMode::PropsPlusTabular,
        PromptMode::NumoptMin,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::PropsLinear => "props-linear",
            PromptMode::PropsTabular => "props-tabular",
            PromptMode::PropsPlus => "props-plus",
            PromptMode::PropsPlusTabular => "props-plus-tabular",
            PromptMode::NumoptMin => "numopt-min",
        }
    }

    pub fn is_tabular(self) -> bool {
        matches!(self, PromptMode::PropsTabular | PromptMode::PropsPlusTabular)
    }

    pub fn needs_description(self) -> bool {
        matches!(self, PromptMode::PropsPlus | PromptMode::PropsPlusTabular)
    }

    pub fn for_policy(kind: PolicyKind, with_description: bool) -> Self {
        match (kind, with_description) {
            (PolicyKind::Linear, false) => PromptMode::PropsLinear,
            (PolicyKind::Tabular, false) => PromptMode::PropsTabular,
            (PolicyKind::Linear, true) => PromptMode::PropsPlus,
            (PolicyKind::Tabular, true) => PromptMode::PropsPlusTabular,
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| PromptError::InvalidContext(format!("unknown prompt mode `{s}`")))
    }
}

/// Everything a template needs besides the history and the iteration number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptContext {
    pub mode: PromptMode,
    pub rank: usize,
    /// Advertised `[low, high]`; proposals outside it are still evaluated.
    pub value_range: (f64, f64),
    /// Printing precision of parameters (history and range).
    pub decimals: usize,
    pub optimum_hint: f64,
    pub step_size: f64,
    #[serde(default)]
    pub action_set: Vec<usize>,
    #[serde(default)]
    pub env_description: Option<String>,
    #[serde(default)]
    pub hints: Option<String>,
    pub max_steps: usize,
}

impl PromptContext {
    /// Defaults for policy search on `spec`: range [-6.0, 6.0] with one decimal for
    /// linear policies, the action indices for tabular ones, step size 1.0, 400 steps.
    pub fn for_env(
        spec: &EnvSpec,
        kind: PolicyKind,
        with_description: bool,
        with_hints: bool,
    ) -> Result<Self, PromptError> {
        let bad = |e: crate::policies::PolicyError| PromptError::InvalidContext(e.to_string());
        let mode = PromptMode::for_policy(kind, with_description);
        let (rank, action_set, value_range, decimals) = match kind {
            PolicyKind::Linear => (linear_layout(spec).map_err(bad)?.rank(), Vec::new(), (-6.0, 6.0), 1),
            PolicyKind::Tabular => {
                let t = tabular_layout(spec).map_err(bad)?;
                let hi = *t.action_set.last().unwrap_or(&0) as f64;
                (t.rank(), t.action_set, (0.0, hi), 0)
            }
        };
        let env_description = if with_description {
            Some(env_description(spec, kind)?)
        } else {
            None
        };
        let hints = if with_hints {
            Some(env_hints(spec.name).ok_or_else(|| {
                PromptError::InvalidContext(format!("no hints are shipped for {}", spec.name))
            })?)
        } else {
            None
        };
        let ctx = Self {
            mode,
            rank,
            value_range,
            decimals,
            optimum_hint: default_optimum(spec.name),
            step_size: 1.0,
            action_set,
            env_description,
            hints,
            max_steps: 400,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    /// Function minimization over `rank` inputs: range [-5.00, 25.00], optimum 0,
    /// step size 1.0, 100 steps.
    pub fn numopt(rank: usize) -> Self {
        Self {
            mode: PromptMode::NumoptMin,
            rank,
            value_range: (-5.0, 25.0),
            decimals: 2,
            optimum_hint: 0.0,
            step_size: 1.0,
            action_set: Vec::new(),
            env_description: None,
            hints: None,
            max_steps: 100,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let bad = |m: String| Err(PromptError::InvalidContext(m));
        if self.rank == 0 {
            return bad("rank must be positive".into());
        }
        if !(self.value_range.0 < self.value_range.1) {
            return bad(format!("empty value range {:?}", self.value_range));
        }
        if self.mode.is_tabular() && self.action_set.is_empty() {
            return bad("tabular prompts need a non-empty action set".into());
        }
        if self.mode.needs_description() && self.env_description.is_none() {
            return bad(format!("{} needs an environment description", self.mode.as_str()));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if !(self.step_size.is_finite() && self.optimum_hint.is_finite()) {
            return bad("step size and optimum must be finite".into());
        }
        Ok(())
    }
}

/// Optimum advertised in the prompt for each environment.
pub fn default_optimum(name: EnvName) -> f64 {
    match name {
        EnvName::CartPole => 500.0,
        EnvName::MountainCarC => 100.0,
        EnvName::MountainCarD => -100.0,
        EnvName::CliffWalking => -13.0,
        EnvName::FrozenLake | EnvName::Maze | EnvName::Nim => 1.0,
        EnvName::Navigation => 5000.0,
        EnvName::Pong => 3.0,
    }
}

fn description_asset(name: EnvName) -> &'static str {
    match name {
        EnvName::FrozenLake => include_str!("../../assets/envs/frozen-lake.txt"),
        EnvName::CliffWalking => include_str!("../../assets/envs/cliff-walking.txt"),
        EnvName::MountainCarD => include_str!("../../assets/envs/mountain-car-d.txt"),
        EnvName::MountainCarC => include_str!("../../assets/envs/mountain-car-c.txt"),
        EnvName::CartPole => include_str!("../../assets/envs/cart-pole.txt"),
        EnvName::Maze => include_str!("../../assets/envs/maze.txt"),
        EnvName::Navigation => include_str!("../../assets/envs/navigation.txt"),
        EnvName::Nim => include_str!("../../assets/envs/nim.txt"),
        EnvName::Pong => include_str!("../../assets/envs/pong.txt"),
    }
}

/// Expert hint text, where one exists.
pub fn env_hints(name: EnvName) -> Option<String> {
    let text = match name {
        EnvName::MountainCarC => include_str!("../../assets/hints/mountain-car-c.txt"),
        EnvName::Navigation => include_str!("../../assets/hints/navigation.txt"),
        EnvName::CliffWalking => include_str!("../../assets/hints/cliff-walking.txt"),
        _ => return None,
    };
    Some(text.trim_end().to_string())
}

fn state_names(name: EnvName, dim: usize) -> Vec<String> {
    let fixed: &[&str] = match name {
        EnvName::CartPole => &["cart_position", "cart_velocity", "pole_angle", "pole_angular_velocity"],
        EnvName::MountainCarD | EnvName::MountainCarC => &["car_position", "car_velocity"],
        EnvName::Navigation => &["lidar_right", "lidar_front_right", "lidar_front", "lidar_front_left", "lidar_left"],
        _ => &[],
    };
    if fixed.len() == dim {
        fixed.iter().map(|s| s.to_string()).collect()
    } else {
        (0..dim).map(|i| format!("state[{i}]")).collect()
    }
}

/// Paragraph describing how the flat params drive the policy; mirrors the layouts in
/// [`crate::policies`].
pub fn policy_paragraph(spec: &EnvSpec, kind: PolicyKind) -> Result<String, PromptError> {
    let bad = |e: crate::policies::PolicyError| PromptError::InvalidContext(e.to_string());
    match kind {
        PolicyKind::Linear => {
            let l = linear_layout(spec).map_err(bad)?;
            let p = |i: usize| format!("params[{i}]");
            let head = match &spec.action_space {
                ActionSpace::Discrete(_) => "action = argmax(state @ W + B), where".to_string(),
                ActionSpace::Continuous { low, high } => {
                    let b = |v: &[f64]| {
                        let s: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                        s.join(", ")
                    };
                    format!("action = clip(state @ W + B, {}, {}), where", b(low), b(high))
                }
            };
            let rows: Vec<String> = (0..l.obs_dim)
                .map(|r| {
                    let cells: Vec<String> = (0..l.n_out).map(|c| p(r * l.n_out + c)).collect();
                    format!("[{}]", cells.join(", "))
                })
                .collect();
            let bias: Vec<String> = (0..l.n_out).map(|c| p(l.obs_dim * l.n_out + c)).collect();
            Ok(format!(
                "The policy is a linear policy with {} parameters and works as follows:\n{head}\nstate = [{}]\nW = [{}]\nB = [{}]",
                l.rank(),
                state_names(spec.name, l.obs_dim).join(", "),
                rows.join(",\n     "),
                bias.join(", ")
            ))
        }
        PolicyKind::Tabular => {
            let t = tabular_layout(spec).map_err(bad)?;
            Ok(format!(
                "The policy is a tabular policy with {} parameters and works as follows:\naction = params[state], where state is the current state index (0 to {}).",
                t.rank(),
                t.n_states - 1
            ))
        }
    }
}

/// Environment description with the policy paragraph filled in.
pub fn env_description(spec: &EnvSpec, kind: PolicyKind) -> Result<String, PromptError> {
    let policy = policy_paragraph(spec, kind)?;
    let vars = [("policy", policy)].into_iter().collect();
    Ok(render_template(description_asset(spec.name), &vars)?.trim_end().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cart_pole_paragraph() {
        let text = policy_paragraph(&EnvName::CartPole.spec(), PolicyKind::Linear).unwrap();
        assert_eq!(
            text,
            "The policy is a linear policy with 10 parameters and works as follows:\n\
             action = argmax(state @ W + B), where\n\
             state = [cart_position, cart_velocity, pole_angle, pole_angular_velocity]\n\
             W = [[params[0], params[1]],\n     [params[2], params[3]],\n     [params[4], params[5]],\n     [params[6], params[7]]]\n\
             B = [params[8], params[9]]"
        );
    }

    #[test]
    fn pong_bias_indices() {
        let text = policy_paragraph(&EnvName::Pong.spec(), PolicyKind::Linear).unwrap();
        assert!(text.contains("18 parameters"));
        assert!(text.contains("B = [params[15], params[16], params[17]]"));
    }

    #[test]
    fn continuous_mentions_clip() {
        let text = policy_paragraph(&EnvName::MountainCarC.spec(), PolicyKind::Linear).unwrap();
        assert!(text.contains("clip(state @ W + B, -1.0, 1.0)"));
    }

    #[test]
    fn every_env_has_a_description() {
        for name in EnvName::ALL {
            let spec = name.spec();
            let kind = crate::policies::default_kind(&spec);
            let d = env_description(&spec, kind).unwrap();
            assert!(!d.contains("{{"), "{name}");
            assert!(d.contains("The policy is a"), "{name}");
        }
    }

    #[test]
    fn contexts() {
        let spec = EnvName::CliffWalking.spec();
        let ctx = PromptContext::for_env(&spec, PolicyKind::Tabular, false, false).unwrap();
        assert_eq!((ctx.rank, ctx.action_set.clone(), ctx.decimals), (48, vec![0, 1, 2, 3], 0));
        assert!(PromptContext::for_env(&spec, PolicyKind::Tabular, true, true).unwrap().hints.is_some());
        assert!(PromptContext::for_env(&EnvName::Pong.spec(), PolicyKind::Linear, true, true).is_err());
        assert!(PromptContext::for_env(&EnvName::CartPole.spec(), PolicyKind::Tabular, false, false).is_err());
        let mut c = PromptContext::numopt(2);
        c.value_range = (1.0, 1.0);
        assert!(c.validate().is_err());
    }
}
