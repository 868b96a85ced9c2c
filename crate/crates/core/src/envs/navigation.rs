//! Lidar navigation on a square ring track.
//!
//! The drivable area is the outer square minus the inner obstacle square. The agent
//! starts in the left corridor facing +y. Five lidar rays (relative angles from
//! [`NAV_LIDAR_DEG`]) report the distance to the nearest border segment.

use rand_chacha::ChaCha8Rng;

use super::constants::*;
use super::{Action, ActionSpace, Dynamics, EnvName, EnvSpec, ObsSpace, Observation};

/// Axis-aligned border segment: `vertical` at `at` spanning `[lo, hi]`, or horizontal.
#[derive(Clone, Copy, Debug)]
struct Segment {
    vertical: bool,
    at: f64,
    lo: f64,
    hi: f64,
}

fn square(lo: f64, hi: f64) -> [Segment; 4] {
    [
        Segment { vertical: true, at: lo, lo, hi },
        Segment { vertical: true, at: hi, lo, hi },
        Segment { vertical: false, at: lo, lo, hi },
        Segment { vertical: false, at: hi, lo, hi },
    ]
}

/// Distance along the unit ray `(dx, dy)` from `(px, py)` to the first segment hit.
fn cast(px: f64, py: f64, dx: f64, dy: f64, segments: &[Segment]) -> f64 {
    let mut best = f64::INFINITY;
    for s in segments {
        let (p, d, q, dq) = if s.vertical { (px, dx, py, dy) } else { (py, dy, px, dx) };
        if d.abs() < 1e-12 {
            continue;
        }
        let t = (s.at - p) / d;
        if t < 0.0 {
            continue;
        }
        let cross = q + t * dq;
        if cross >= s.lo - 1e-12 && cross <= s.hi + 1e-12 && t < best {
            best = t;
        }
    }
    best
}

pub struct Navigation {
    spec: EnvSpec,
    segments: Vec<Segment>,
    x: f64,
    y: f64,
    /// Heading in degrees, counter-clockwise from +x.
    heading: f64,
}

impl Navigation {
    pub fn new() -> Self {
        let mut segments = square(0.0, NAV_OUTER).to_vec();
        segments.extend(square(NAV_INNER_LOW, NAV_INNER_HIGH));
        Self {
            spec: EnvSpec {
                name: EnvName::Navigation,
                obs_space: ObsSpace::Box(NAV_LIDAR_DEG.len()),
                action_space: ActionSpace::Discrete(3),
                max_steps: NAV_MAX_STEPS,
            },
            segments,
            x: NAV_START.0,
            y: NAV_START.1,
            heading: NAV_START_HEADING_DEG,
        }
    }

    /// Whether `(x, y)` lies strictly inside the drivable ring.
    pub fn on_track(x: f64, y: f64) -> bool {
        let inside_outer = x > 0.0 && x < NAV_OUTER && y > 0.0 && y < NAV_OUTER;
        let inside_inner = x >= NAV_INNER_LOW
            && x <= NAV_INNER_HIGH
            && y >= NAV_INNER_LOW
            && y <= NAV_INNER_HIGH;
        inside_outer && !inside_inner
    }

    pub fn pose(&self) -> (f64, f64, f64) {
        (self.x, self.y, self.heading)
    }

    fn lidar(&self) -> Observation {
        Observation::Vector(
            NAV_LIDAR_DEG
                .iter()
                .map(|rel| {
                    let (dy, dx) = (self.heading + rel).to_radians().sin_cos();
                    cast(self.x, self.y, dx, dy, &self.segments)
                })
                .collect(),
        )
    }
}

impl Default for Navigation {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for Navigation {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, _rng: &mut ChaCha8Rng) -> Observation {
        (self.x, self.y) = NAV_START;
        self.heading = NAV_START_HEADING_DEG;
        self.lidar()
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let a = match action {
            Action::Discrete(a) => *a,
            Action::Continuous(_) => unreachable!("validated by Episode"),
        };
        match a {
            0 => {
                let (sin, cos) = self.heading.to_radians().sin_cos();
                self.x += NAV_FORWARD_STEP * cos;
                self.y += NAV_FORWARD_STEP * sin;
                if !Self::on_track(self.x, self.y) {
                    return (self.lidar(), NAV_CRASH_REWARD, true);
                }
                (self.lidar(), NAV_FORWARD_REWARD, false)
            }
            1 => {
                self.heading = (self.heading + NAV_ROTATION_DEG).rem_euclid(360.0);
                (self.lidar(), NAV_ROTATE_REWARD, false)
            }
            _ => {
                self.heading = (self.heading - NAV_ROTATION_DEG).rem_euclid(360.0);
                (self.lidar(), NAV_ROTATE_REWARD, false)
            }
        }
    }
}
