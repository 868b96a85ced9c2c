//! Single-paddle Pong on the unit square.
//!
//! The agent's paddle sits on the left edge (x = 0); the right wall stands in for an
//! opponent that never misses. The ball keeps constant speed and reflects elastically
//! off the top, bottom and right walls and off the paddle. Actions: 0 up, 1 down,
//! 2 stay. Observation: `[paddle_y, ball_x, ball_y, ball_vx, ball_vy]`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::constants::*;
use super::{Action, ActionSpace, Dynamics, EnvName, EnvSpec, ObsSpace, Observation};

pub struct Pong {
    spec: EnvSpec,
    paddle_y: f64,
    ball: [f64; 4],
    hits: usize,
}

impl Pong {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::Pong,
                obs_space: ObsSpace::Box(5),
                action_space: ActionSpace::Discrete(3),
                max_steps: PONG_MAX_STEPS,
            },
            paddle_y: 0.5,
            ball: [0.5, 0.5, -PONG_BALL_SPEED, 0.0],
            hits: 0,
        }
    }

    fn observe(&self) -> Observation {
        let [x, y, vx, vy] = self.ball;
        Observation::Vector(vec![self.paddle_y, x, y, vx, vy])
    }

    fn paddle_limits() -> (f64, f64) {
        let half = PONG_PADDLE_HEIGHT / 2.0;
        (half, 1.0 - half)
    }
}

impl Default for Pong {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for Pong {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, rng: &mut ChaCha8Rng) -> Observation {
        self.paddle_y = 0.5;
        self.hits = 0;
        let y = rng.random_range(PONG_SERVE_Y_LOW..PONG_SERVE_Y_HIGH);
        let angle = rng
            .random_range(-PONG_SERVE_MAX_DEG..=PONG_SERVE_MAX_DEG)
            .to_radians();
        self.ball = [
            0.5,
            y,
            -PONG_BALL_SPEED * angle.cos(),
            PONG_BALL_SPEED * angle.sin(),
        ];
        self.observe()
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let a = match action {
            Action::Discrete(a) => *a,
            Action::Continuous(_) => unreachable!("validated by Episode"),
        };
        let (lo, hi) = Self::paddle_limits();
        self.paddle_y = match a {
            0 => self.paddle_y + PONG_PADDLE_SPEED,
            1 => self.paddle_y - PONG_PADDLE_SPEED,
            _ => self.paddle_y,
        }
        .clamp(lo, hi);

        let [mut x, mut y, mut vx, mut vy] = self.ball;
        x += vx;
        y += vy;
        if y < 0.0 {
            y = -y;
            vy = -vy;
        } else if y > 1.0 {
            y = 2.0 - y;
            vy = -vy;
        }
        if x > 1.0 {
            x = 2.0 - x;
            vx = -vx;
        }
        let mut reward = 0.0;
        let mut done = false;
        if x < 0.0 {
            if (y - self.paddle_y).abs() <= PONG_PADDLE_HEIGHT / 2.0 {
                x = -x;
                vx = -vx;
                self.hits += 1;
                reward = 1.0;
                done = self.hits >= PONG_MAX_HITS;
            } else {
                done = true;
            }
        }
        self.ball = [x, y, vx, vy];
        (self.observe(), reward, done)
    }
}
