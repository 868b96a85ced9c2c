//! Native, seed-deterministic environments behind a uniform reset/step interface.
//!
//! Every environment is a [`Dynamics`] implementation wrapped in [`Episode`], which owns
//! the generator, the step counter and the termination bookkeeping. Identical
//! `(seed, action sequence)` pairs produce bit-identical observation and reward streams.

mod classic;
pub mod constants;
mod grid;
mod navigation;
mod nim;
mod pong;

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policies::{Policy, PolicyError};
use crate::seeding;

pub use classic::{CartPole, MountainCarContinuous, MountainCarDiscrete};
pub use grid::{CliffWalking, FrozenLake, Maze, MazeLayout};
pub use navigation::Navigation;
pub use nim::Nim;
pub use pong::Pong;

/// Identity of one of the native environments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvName {
    FrozenLake,
    CliffWalking,
    MountainCarD,
    MountainCarC,
    CartPole,
    Maze,
    Navigation,
    Nim,
    Pong,
}

impl EnvName {
    pub const ALL: [EnvName; 9] = [
        EnvName::FrozenLake,
        EnvName::CliffWalking,
        EnvName::MountainCarD,
        EnvName::MountainCarC,
        EnvName::CartPole,
        EnvName::Maze,
        EnvName::Navigation,
        EnvName::Nim,
        EnvName::Pong,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EnvName::FrozenLake => "frozen-lake",
            EnvName::CliffWalking => "cliff-walking",
            EnvName::MountainCarD => "mountain-car-d",
            EnvName::MountainCarC => "mountain-car-c",
            EnvName::CartPole => "cart-pole",
            EnvName::Maze => "maze",
            EnvName::Navigation => "navigation",
            EnvName::Nim => "nim",
            EnvName::Pong => "pong",
        }
    }

    /// True when repeated rollouts of a fixed policy always yield the same return.
    pub fn is_deterministic(self) -> bool {
        matches!(
            self,
            EnvName::CliffWalking | EnvName::Maze | EnvName::Navigation | EnvName::Nim
        )
    }

    pub fn spec(self) -> EnvSpec {
        make(self).spec().clone()
    }
}

impl fmt::Display for EnvName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvName {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvName::ALL
            .iter()
            .copied()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| EnvError::UnknownEnv(s.to_string()))
    }
}

/// Observation space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObsSpace {
    /// A single state index in `0..n`.
    Discrete(usize),
    /// A real vector of the given length.
    Box(usize),
    /// A one-hot real vector of length `n`; also usable as a state index.
    OneHot(usize),
}

impl ObsSpace {
    /// Number of discrete states, if the space has them.
    pub fn n_states(&self) -> Option<usize> {
        match *self {
            ObsSpace::Discrete(n) | ObsSpace::OneHot(n) => Some(n),
            ObsSpace::Box(_) => None,
        }
    }

    /// Length of the real feature vector, if the space has one.
    pub fn vector_dim(&self) -> Option<usize> {
        match *self {
            ObsSpace::Box(d) | ObsSpace::OneHot(d) => Some(d),
            ObsSpace::Discrete(_) => None,
        }
    }
}

impl fmt::Display for ObsSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsSpace::Discrete(n) => write!(f, "Discrete({n})"),
            ObsSpace::Box(d) => write!(f, "Box({d},)"),
            ObsSpace::OneHot(d) => write!(f, "Box({d},) one-hot"),
        }
    }
}

/// Action space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ActionSpace {
    Discrete(usize),
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    pub fn dim(&self) -> usize {
        match self {
            ActionSpace::Discrete(n) => *n,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }
}

impl fmt::Display for ActionSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionSpace::Discrete(n) => write!(f, "Discrete({n})"),
            ActionSpace::Continuous { low, high } => {
                write!(f, "Box({},) in [{:?}, {:?}]", low.len(), low, high)
            }
        }
    }
}

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub name: EnvName,
    pub obs_space: ObsSpace,
    pub action_space: ActionSpace,
    pub max_steps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Index(usize),
    Vector(Vec<f64>),
}

impl Observation {
    /// State index: the index itself, or the hot position of a one-hot vector.
    pub fn as_index(&self) -> Option<usize> {
        match self {
            Observation::Index(i) => Some(*i),
            Observation::Vector(v) => {
                let mut hot = v.iter().enumerate().filter(|(_, x)| **x != 0.0);
                match (hot.next(), hot.next()) {
                    (Some((i, x)), None) if *x == 1.0 => Some(i),
                    _ => None,
                }
            }
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Observation::Vector(v) => Some(v),
            Observation::Index(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

/// One transition.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    /// Task-defined end (goal, failure, game over).
    pub terminated: bool,
    /// Step-limit end. Never set on a step that also terminated.
    pub truncated: bool,
}

/// Cumulative reward of one episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReturn {
    pub total_reward: f64,
    pub steps: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("step called on a finished episode; call reset first")]
    StepAfterEnd,
    #[error("step called before reset")]
    NotReset,
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
    #[error("evaluation needs at least one episode")]
    NoEpisodes,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// Uniform reset/step interface.
pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;
    fn reset(&mut self, seed: u64) -> Observation;
    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError>;
}

/// Task-specific state and transition rule. Actions reaching [`Dynamics::transition`]
/// are already validated (discrete in range, continuous clipped to bounds).
pub trait Dynamics: Send {
    fn spec(&self) -> &EnvSpec;
    fn reset_state(&mut self, rng: &mut ChaCha8Rng) -> Observation;
    /// Returns `(observation, reward, terminated)`.
    fn transition(&mut self, action: &Action, rng: &mut ChaCha8Rng) -> (Observation, f64, bool);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Fresh,
    Running,
    Done,
}

/// Episode bookkeeping around a [`Dynamics`] implementation.
pub struct Episode<D> {
    dynamics: D,
    rng: ChaCha8Rng,
    steps: usize,
    phase: Phase,
}

impl<D: Dynamics> Episode<D> {
    pub fn new(dynamics: D) -> Self {
        Self {
            dynamics,
            rng: seeding::rng(0),
            steps: 0,
            phase: Phase::Fresh,
        }
    }

    pub fn dynamics(&self) -> &D {
        &self.dynamics
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn validate(&self, action: &Action) -> Result<Action, EnvError> {
        match (&self.dynamics.spec().action_space, action) {
            (ActionSpace::Discrete(n), Action::Discrete(a)) => {
                if a < n {
                    Ok(action.clone())
                } else {
                    Err(EnvError::InvalidAction(format!(
                        "discrete action {a} outside 0..{n}"
                    )))
                }
            }
            (ActionSpace::Continuous { low, high }, Action::Continuous(a)) => {
                if a.len() != low.len() {
                    return Err(EnvError::InvalidAction(format!(
                        "expected {} action components, got {}",
                        low.len(),
                        a.len()
                    )));
                }
                if a.iter().any(|x| x.is_nan()) {
                    return Err(EnvError::InvalidAction("NaN action component".into()));
                }
                Ok(Action::Continuous(
                    a.iter()
                        .zip(low.iter().zip(high))
                        .map(|(x, (lo, hi))| x.clamp(*lo, *hi))
                        .collect(),
                ))
            }
            (space, _) => Err(EnvError::InvalidAction(format!(
                "action kind does not match space {space}"
            ))),
        }
    }
}

impl<D: Dynamics> Environment for Episode<D> {
    fn spec(&self) -> &EnvSpec {
        self.dynamics.spec()
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = seeding::rng(seed);
        self.steps = 0;
        self.phase = Phase::Running;
        self.dynamics.reset_state(&mut self.rng)
    }

    fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        match self.phase {
            Phase::Fresh => return Err(EnvError::NotReset),
            Phase::Done => return Err(EnvError::StepAfterEnd),
            Phase::Running => {}
        }
        let action = self.validate(action)?;
        let (observation, reward, terminated) = self.dynamics.transition(&action, &mut self.rng);
        self.steps += 1;
        let truncated = !terminated && self.steps >= self.dynamics.spec().max_steps;
        if terminated || truncated {
            self.phase = Phase::Done;
        }
        Ok(StepResult {
            observation,
            reward,
            terminated,
            truncated,
        })
    }
}

/// Fresh instance of the named environment.
pub fn make(name: EnvName) -> Box<dyn Environment> {
    match name {
        EnvName::FrozenLake => Box::new(Episode::new(FrozenLake::new())),
        EnvName::CliffWalking => Box::new(Episode::new(CliffWalking::new())),
        EnvName::MountainCarD => Box::new(Episode::new(MountainCarDiscrete::new())),
        EnvName::MountainCarC => Box::new(Episode::new(MountainCarContinuous::new())),
        EnvName::CartPole => Box::new(Episode::new(CartPole::new())),
        EnvName::Maze => Box::new(Episode::new(Maze::new())),
        EnvName::Navigation => Box::new(Episode::new(Navigation::new())),
        EnvName::Nim => Box::new(Episode::new(Nim::new())),
        EnvName::Pong => Box::new(Episode::new(Pong::new())),
    }
}

/// Runs one episode of `policy` from `reset(seed)` until termination or truncation.
pub fn rollout(
    env: &mut dyn Environment,
    policy: &dyn Policy,
    seed: u64,
) -> Result<EpisodeReturn, EnvError> {
    policy.check(env.spec())?;
    let mut obs = env.reset(seed);
    let mut total_reward = 0.0;
    let mut steps = 0;
    loop {
        let action = policy.act(&obs)?;
        let step = env.step(&action)?;
        total_reward += step.reward;
        steps += 1;
        if step.terminated || step.truncated {
            return Ok(EpisodeReturn {
                total_reward,
                steps,
            });
        }
        obs = step.observation;
    }
}

/// Seed of episode `index` within an evaluation block seeded by `seed`.
pub fn episode_seed(seed: u64, index: usize) -> u64 {
    seeding::derive(seed, index as u64)
}

/// Mean return over `episodes` rollouts seeded with [`episode_seed`].
pub fn evaluate(
    env: &mut dyn Environment,
    policy: &dyn Policy,
    episodes: usize,
    seed: u64,
) -> Result<f64, EnvError> {
    if episodes == 0 {
        return Err(EnvError::NoEpisodes);
    }
    let mut sum = 0.0;
    for i in 0..episodes {
        sum += rollout(env, policy, episode_seed(seed, i))?.total_reward;
    }
    Ok(sum / episodes as f64)
}
