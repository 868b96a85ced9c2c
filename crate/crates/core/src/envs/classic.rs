//! Classic-control tasks: CartPole and the two MountainCar variants (Euler integration,
//! standard constants from [`super::constants`]).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::constants::*;
use super::{Action, ActionSpace, Dynamics, EnvName, EnvSpec, ObsSpace, Observation};

// ---------------------------------------------------------------------------

/// Pole balancing. Actions: 0 push left, 1 push right. +1 per step, including the
/// step on which the pole falls.
pub struct CartPole {
    spec: EnvSpec,
    state: [f64; 4],
}

impl CartPole {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::CartPole,
                obs_space: ObsSpace::Box(4),
                action_space: ActionSpace::Discrete(2),
                max_steps: CP_MAX_STEPS,
            },
            state: [0.0; 4],
        }
    }

    /// One Euler step of the cart-pole equations of motion.
    pub fn integrate(state: [f64; 4], action: usize) -> [f64; 4] {
        let [x, x_dot, theta, theta_dot] = state;
        let force = if action == 1 { CP_FORCE_MAG } else { -CP_FORCE_MAG };
        let total_mass = CP_MASS_CART + CP_MASS_POLE;
        let pole_mass_length = CP_MASS_POLE * CP_LENGTH;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pole_mass_length * theta_dot * theta_dot * sin) / total_mass;
        let theta_acc = (CP_GRAVITY * sin - cos * temp)
            / (CP_LENGTH * (4.0 / 3.0 - CP_MASS_POLE * cos * cos / total_mass));
        let x_acc = temp - pole_mass_length * theta_acc * cos / total_mass;
        [
            x + CP_TAU * x_dot,
            x_dot + CP_TAU * x_acc,
            theta + CP_TAU * theta_dot,
            theta_dot + CP_TAU * theta_acc,
        ]
    }
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for CartPole {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, rng: &mut ChaCha8Rng) -> Observation {
        for v in &mut self.state {
            *v = rng.random_range(-CP_START_BOUND..CP_START_BOUND);
        }
        Observation::Vector(self.state.to_vec())
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let a = match action {
            Action::Discrete(a) => *a,
            Action::Continuous(_) => unreachable!("validated by Episode"),
        };
        self.state = Self::integrate(self.state, a);
        let [x, _, theta, _] = self.state;
        let done = !(-CP_X_THRESHOLD..=CP_X_THRESHOLD).contains(&x)
            || !(-CP_THETA_THRESHOLD..=CP_THETA_THRESHOLD).contains(&theta);
        (Observation::Vector(self.state.to_vec()), 1.0, done)
    }
}

// ---------------------------------------------------------------------------

fn mountain_start(rng: &mut ChaCha8Rng) -> [f64; 2] {
    [rng.random_range(MC_START_LOW..MC_START_HIGH), 0.0]
}

/// Shared position/velocity update; `push` is the already-scaled acceleration term.
fn mountain_update(state: [f64; 2], push: f64) -> [f64; 2] {
    let [mut pos, mut vel] = state;
    vel += push - MC_GRAVITY * (3.0 * pos).cos();
    vel = vel.clamp(-MC_MAX_SPEED, MC_MAX_SPEED);
    pos += vel;
    pos = pos.clamp(MC_MIN_POSITION, MC_MAX_POSITION);
    if pos == MC_MIN_POSITION && vel < 0.0 {
        vel = 0.0;
    }
    [pos, vel]
}

/// Under-powered car, discrete throttle. Actions: 0 left, 1 none, 2 right. -1 per step.
pub struct MountainCarDiscrete {
    spec: EnvSpec,
    state: [f64; 2],
}

impl MountainCarDiscrete {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::MountainCarD,
                obs_space: ObsSpace::Box(2),
                action_space: ActionSpace::Discrete(3),
                max_steps: MCD_MAX_STEPS,
            },
            state: [0.0; 2],
        }
    }
}

impl Default for MountainCarDiscrete {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for MountainCarDiscrete {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, rng: &mut ChaCha8Rng) -> Observation {
        self.state = mountain_start(rng);
        Observation::Vector(self.state.to_vec())
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let a = match action {
            Action::Discrete(a) => *a as f64,
            Action::Continuous(_) => unreachable!("validated by Episode"),
        };
        self.state = mountain_update(self.state, (a - 1.0) * MCD_FORCE);
        let done = self.state[0] >= MCD_GOAL_POSITION && self.state[1] >= 0.0;
        (Observation::Vector(self.state.to_vec()), -1.0, done)
    }
}

/// Under-powered car, continuous force in [-1, 1]. Reward: +100 on reaching the flag,
/// minus 0.1·a² every step.
pub struct MountainCarContinuous {
    spec: EnvSpec,
    state: [f64; 2],
}

impl MountainCarContinuous {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::MountainCarC,
                obs_space: ObsSpace::Box(2),
                action_space: ActionSpace::Continuous {
                    low: vec![-1.0],
                    high: vec![1.0],
                },
                max_steps: MCC_MAX_STEPS,
            },
            state: [0.0; 2],
        }
    }
}

impl Default for MountainCarContinuous {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for MountainCarContinuous {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, rng: &mut ChaCha8Rng) -> Observation {
        self.state = mountain_start(rng);
        Observation::Vector(self.state.to_vec())
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let force = match action {
            Action::Continuous(a) => a[0],
            Action::Discrete(_) => unreachable!("validated by Episode"),
        };
        self.state = mountain_update(self.state, force * MCC_POWER);
        let done = self.state[0] >= MCC_GOAL_POSITION && self.state[1] >= 0.0;
        let mut reward = -MCC_ACTION_COST * force * force;
        if done {
            reward += MCC_GOAL_REWARD;
        }
        (Observation::Vector(self.state.to_vec()), reward, done)
    }
}
