//! Misère Nim against a rule-based opponent: whoever takes the last stick loses.
//!
//! Action `a` removes `a + 1` sticks (clamped to what remains). The opponent answers by
//! moving to a position `n` with `(n - 1) % 4 == 0` whenever it can, otherwise it takes
//! one stick. Observation: one-hot vector of length `NIM_STICKS + 1` over sticks left.

use rand_chacha::ChaCha8Rng;

use super::constants::*;
use super::{Action, ActionSpace, Dynamics, EnvName, EnvSpec, ObsSpace, Observation};

pub struct Nim {
    spec: EnvSpec,
    sticks: usize,
}

impl Nim {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::Nim,
                obs_space: ObsSpace::OneHot(NIM_STICKS + 1),
                action_space: ActionSpace::Discrete(NIM_MAX_TAKE),
                max_steps: NIM_MAX_STEPS,
            },
            sticks: NIM_STICKS,
        }
    }

    /// Sticks the rule-based opponent removes when facing `n > 0` sticks.
    pub fn opponent_take(n: usize) -> usize {
        match (n - 1) % 4 {
            0 => 1,
            k => k,
        }
    }

    fn observe(&self) -> Observation {
        let mut v = vec![0.0; NIM_STICKS + 1];
        v[self.sticks] = 1.0;
        Observation::Vector(v)
    }

    pub fn sticks(&self) -> usize {
        self.sticks
    }
}

impl Default for Nim {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for Nim {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, _rng: &mut ChaCha8Rng) -> Observation {
        self.sticks = NIM_STICKS;
        self.observe()
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let take = match action {
            Action::Discrete(a) => (a + 1).min(self.sticks),
            Action::Continuous(_) => unreachable!("validated by Episode"),
        };
        self.sticks -= take;
        if self.sticks == 0 {
            return (self.observe(), NIM_LOSS_REWARD, true);
        }
        self.sticks -= Self::opponent_take(self.sticks);
        if self.sticks == 0 {
            return (self.observe(), NIM_WIN_REWARD, true);
        }
        (self.observe(), 0.0, false)
    }
}
