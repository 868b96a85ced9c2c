//! Physical constants, geometry and step limits of the native environments.
//!
//! CartPole and both MountainCar variants use the published classic-control equations
//! and constants so reward scales stay comparable with the usual reference
//! implementations. Everything else (grid maps, Navigation track, Pong field) is a fixed
//! local choice; the values here are the single source of truth for all of them.

// ---- FrozenLake ----

/// 4x4 map, row-major. `S` start, `F` frozen, `H` hole, `G` goal.
pub const FROZEN_LAKE_MAP: [&str; 4] = ["SFFF", "FHFH", "FFFH", "HFFG"];
pub const FROZEN_LAKE_MAX_STEPS: usize = 100;

// ---- CliffWalking ----

pub const CLIFF_ROWS: usize = 4;
pub const CLIFF_COLS: usize = 12;
pub const CLIFF_START: usize = 36;
pub const CLIFF_GOAL: usize = 47;
pub const CLIFF_STEP_REWARD: f64 = -1.0;
pub const CLIFF_FALL_REWARD: f64 = -100.0;
pub const CLIFF_MAX_STEPS: usize = 100;

// ---- Maze ----

pub const MAZE_STEP_REWARD: f64 = -0.011;
pub const MAZE_GOAL_REWARD: f64 = 1.0;
pub const MAZE_MAX_STEPS: usize = 100;

// ---- MountainCar (discrete) ----

pub const MC_MIN_POSITION: f64 = -1.2;
pub const MC_MAX_POSITION: f64 = 0.6;
pub const MC_MAX_SPEED: f64 = 0.07;
pub const MC_GRAVITY: f64 = 0.0025;
pub const MC_START_LOW: f64 = -0.6;
pub const MC_START_HIGH: f64 = -0.4;
pub const MCD_FORCE: f64 = 0.001;
pub const MCD_GOAL_POSITION: f64 = 0.5;
pub const MCD_MAX_STEPS: usize = 200;

// ---- MountainCar (continuous) ----

pub const MCC_POWER: f64 = 0.0015;
pub const MCC_GOAL_POSITION: f64 = 0.45;
pub const MCC_GOAL_REWARD: f64 = 100.0;
pub const MCC_ACTION_COST: f64 = 0.1;
pub const MCC_MAX_STEPS: usize = 999;

// ---- CartPole ----

pub const CP_GRAVITY: f64 = 9.8;
pub const CP_MASS_CART: f64 = 1.0;
pub const CP_MASS_POLE: f64 = 0.1;
/// Half the pole length.
pub const CP_LENGTH: f64 = 0.5;
pub const CP_FORCE_MAG: f64 = 10.0;
pub const CP_TAU: f64 = 0.02;
pub const CP_THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const CP_X_THRESHOLD: f64 = 2.4;
pub const CP_START_BOUND: f64 = 0.05;
pub const CP_MAX_STEPS: usize = 500;

// ---- Navigation ----

/// Outer border of the track: the square `[0, NAV_OUTER]^2`.
pub const NAV_OUTER: f64 = 10.0;
/// Inner obstacle: the square `[NAV_INNER_LOW, NAV_INNER_HIGH]^2`.
pub const NAV_INNER_LOW: f64 = 2.0;
pub const NAV_INNER_HIGH: f64 = 8.0;
pub const NAV_START: (f64, f64) = (1.0, 5.0);
/// Initial heading in degrees, counter-clockwise from +x.
pub const NAV_START_HEADING_DEG: f64 = 90.0;
pub const NAV_FORWARD_STEP: f64 = 0.1;
pub const NAV_ROTATION_DEG: f64 = 15.0;
/// Lidar ray directions relative to the heading, in observation order.
pub const NAV_LIDAR_DEG: [f64; 5] = [-90.0, -45.0, 0.0, 45.0, 90.0];
pub const NAV_FORWARD_REWARD: f64 = 5.0;
pub const NAV_ROTATE_REWARD: f64 = -0.5;
pub const NAV_CRASH_REWARD: f64 = -200.0;
pub const NAV_MAX_STEPS: usize = 1000;

// ---- Nim ----

pub const NIM_STICKS: usize = 10;
pub const NIM_MAX_TAKE: usize = 3;
pub const NIM_WIN_REWARD: f64 = 1.0;
pub const NIM_LOSS_REWARD: f64 = -1.0;
/// Each agent move removes at least one stick, so ten agent moves always suffice.
pub const NIM_MAX_STEPS: usize = NIM_STICKS;

// ---- Pong ----

pub const PONG_PADDLE_HEIGHT: f64 = 0.2;
pub const PONG_PADDLE_SPEED: f64 = 0.04;
pub const PONG_BALL_SPEED: f64 = 0.03;
/// Serve angle is drawn uniformly from `[-PONG_SERVE_MAX_DEG, PONG_SERVE_MAX_DEG]`.
pub const PONG_SERVE_MAX_DEG: f64 = 45.0;
pub const PONG_SERVE_Y_LOW: f64 = 0.2;
pub const PONG_SERVE_Y_HIGH: f64 = 0.8;
pub const PONG_MAX_HITS: usize = 3;
pub const PONG_MAX_STEPS: usize = 1000;
