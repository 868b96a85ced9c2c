//! Grid worlds: FrozenLake (slippery 4x4), CliffWalking (deterministic 4x12) and Maze (3x3).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::constants::*;
use super::{Action, ActionSpace, Dynamics, EnvName, EnvSpec, ObsSpace, Observation};

fn discrete(action: &Action) -> usize {
    match action {
        Action::Discrete(a) => *a,
        Action::Continuous(_) => unreachable!("validated by Episode"),
    }
}

/// Clamped grid move. `dr`/`dc` in {-1, 0, 1}.
fn shift(state: usize, cols: usize, rows: usize, dr: isize, dc: isize) -> usize {
    let r = (state / cols) as isize + dr;
    let c = (state % cols) as isize + dc;
    let r = r.clamp(0, rows as isize - 1) as usize;
    let c = c.clamp(0, cols as isize - 1) as usize;
    r * cols + c
}

// ---------------------------------------------------------------------------

/// Slippery 4x4 lake. Actions: 0 Left, 1 Down, 2 Right, 3 Up. The agent moves in the
/// intended direction or one of the two perpendicular ones, each with probability 1/3.
pub struct FrozenLake {
    spec: EnvSpec,
    tiles: Vec<u8>,
    state: usize,
}

impl FrozenLake {
    pub fn new() -> Self {
        let tiles: Vec<u8> = FROZEN_LAKE_MAP.iter().flat_map(|r| r.bytes()).collect();
        Self {
            spec: EnvSpec {
                name: EnvName::FrozenLake,
                obs_space: ObsSpace::Discrete(tiles.len()),
                action_space: ActionSpace::Discrete(4),
                max_steps: FROZEN_LAKE_MAX_STEPS,
            },
            tiles,
            state: 0,
        }
    }

    /// Deterministic landing cell when moving in `direction` from `state`.
    pub fn move_from(state: usize, direction: usize) -> usize {
        let n = FROZEN_LAKE_MAP.len();
        match direction {
            0 => shift(state, n, n, 0, -1),
            1 => shift(state, n, n, 1, 0),
            2 => shift(state, n, n, 0, 1),
            _ => shift(state, n, n, -1, 0),
        }
    }
}

impl Default for FrozenLake {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for FrozenLake {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, _rng: &mut ChaCha8Rng) -> Observation {
        self.state = self.tiles.iter().position(|&t| t == b'S').unwrap_or(0);
        Observation::Index(self.state)
    }

    fn transition(&mut self, action: &Action, rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let a = discrete(action);
        let direction = match rng.random_range(0..3u8) {
            0 => (a + 3) % 4,
            1 => a,
            _ => (a + 1) % 4,
        };
        self.state = Self::move_from(self.state, direction);
        let tile = self.tiles[self.state];
        let reward = if tile == b'G' { 1.0 } else { 0.0 };
        (Observation::Index(self.state), reward, tile == b'G' || tile == b'H')
    }
}

// ---------------------------------------------------------------------------

/// 4x12 cliff. Actions: 0 Up, 1 Right, 2 Down, 3 Left. Every move costs -1 (including
/// the one that reaches the goal); stepping into the cliff costs -100 and sends the
/// agent back to the start without ending the episode.
pub struct CliffWalking {
    spec: EnvSpec,
    state: usize,
}

impl CliffWalking {
    pub fn new() -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::CliffWalking,
                obs_space: ObsSpace::Discrete(CLIFF_ROWS * CLIFF_COLS),
                action_space: ActionSpace::Discrete(4),
                max_steps: CLIFF_MAX_STEPS,
            },
            state: CLIFF_START,
        }
    }

    pub fn is_cliff(state: usize) -> bool {
        state > CLIFF_START && state < CLIFF_GOAL
    }

    /// `(next_state, reward, terminated)` for a deterministic move.
    pub fn model(state: usize, action: usize) -> (usize, f64, bool) {
        let (dr, dc) = match action {
            0 => (-1, 0),
            1 => (0, 1),
            2 => (1, 0),
            _ => (0, -1),
        };
        let next = shift(state, CLIFF_COLS, CLIFF_ROWS, dr, dc);
        if Self::is_cliff(next) {
            (CLIFF_START, CLIFF_FALL_REWARD, false)
        } else {
            (next, CLIFF_STEP_REWARD, next == CLIFF_GOAL)
        }
    }
}

impl Default for CliffWalking {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for CliffWalking {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, _rng: &mut ChaCha8Rng) -> Observation {
        self.state = CLIFF_START;
        Observation::Index(self.state)
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        let (next, reward, done) = Self::model(self.state, discrete(action));
        self.state = next;
        (Observation::Index(next), reward, done)
    }
}

// ---------------------------------------------------------------------------

/// Wall layout of a rectangular maze, parsed from an ASCII drawing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MazeLayout {
    pub rows: usize,
    pub cols: usize,
    pub start: usize,
    pub goal: usize,
    /// `open[s][a]` is true when action `a` (Up, Down, Right, Left) leaves cell `s`.
    open: Vec<[bool; 4]>,
}

/// The shipped 3x3 layout.
pub const DEFAULT_MAZE: &str = include_str!("../../assets/maps/maze3x3.txt");

impl MazeLayout {
    /// Parses the drawing format used by `assets/maps/maze3x3.txt`: `#` lines are
    /// comments, cell `(r, c)` sits at text row `2r+1`, column `4c+2`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let lines: Vec<&[u8]> = text
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(str::as_bytes)
            .collect();
        if lines.len() < 3 || lines.len() % 2 == 0 {
            return Err("maze drawing needs an odd number (>= 3) of lines".into());
        }
        let rows = (lines.len() - 1) / 2;
        let width = lines[0].len();
        if width < 5 || (width - 1) % 4 != 0 {
            return Err("maze border line has an unexpected width".into());
        }
        let cols = (width - 1) / 4;
        let at = |line: usize, col: usize| lines[line].get(col).copied().unwrap_or(b' ');
        let (mut start, mut goal) = (None, None);
        let mut open = vec![[false; 4]; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let s = r * cols + c;
                let (tr, tc) = (2 * r + 1, 4 * c + 2);
                match at(tr, tc) {
                    b'S' => start = Some(s),
                    b'G' => goal = Some(s),
                    _ => {}
                }
                open[s][0] = r > 0 && at(tr - 1, tc) == b' ';
                open[s][1] = r + 1 < rows && at(tr + 1, tc) == b' ';
                open[s][2] = c + 1 < cols && at(tr, tc + 2) == b' ';
                open[s][3] = c > 0 && at(tr, tc - 2) == b' ';
            }
        }
        Ok(Self {
            rows,
            cols,
            start: start.ok_or("maze has no start cell")?,
            goal: goal.ok_or("maze has no goal cell")?,
            open,
        })
    }

    pub fn n_states(&self) -> usize {
        self.rows * self.cols
    }

    /// Cell reached by `action`; blocked moves stay in place.
    pub fn next(&self, state: usize, action: usize) -> usize {
        if !self.open[state][action] {
            return state;
        }
        match action {
            0 => state - self.cols,
            1 => state + self.cols,
            2 => state + 1,
            _ => state - 1,
        }
    }
}

/// 3x3 maze. Actions: 0 Up, 1 Down, 2 Right, 3 Left. -0.011 per non-goal step, +1 on
/// reaching the goal.
pub struct Maze {
    spec: EnvSpec,
    layout: MazeLayout,
    state: usize,
}

impl Maze {
    pub fn new() -> Self {
        Self::with_layout(MazeLayout::parse(DEFAULT_MAZE).expect("shipped maze parses"))
    }

    pub fn with_layout(layout: MazeLayout) -> Self {
        Self {
            spec: EnvSpec {
                name: EnvName::Maze,
                obs_space: ObsSpace::Discrete(layout.n_states()),
                action_space: ActionSpace::Discrete(4),
                max_steps: MAZE_MAX_STEPS,
            },
            state: layout.start,
            layout,
        }
    }

    pub fn layout(&self) -> &MazeLayout {
        &self.layout
    }
}

impl Default for Maze {
    fn default() -> Self {
        Self::new()
    }
}

impl Dynamics for Maze {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset_state(&mut self, _rng: &mut ChaCha8Rng) -> Observation {
        self.state = self.layout.start;
        Observation::Index(self.state)
    }

    fn transition(&mut self, action: &Action, _rng: &mut ChaCha8Rng) -> (Observation, f64, bool) {
        self.state = self.layout.next(self.state, discrete(action));
        if self.state == self.layout.goal {
            (Observation::Index(self.state), MAZE_GOAL_REWARD, true)
        } else {
            (Observation::Index(self.state), MAZE_STEP_REWARD, false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::make;
    use std::collections::VecDeque;

    #[test]
    fn cliff_start_and_fall() {
        let mut env = make(EnvName::CliffWalking);
        assert_eq!(env.reset(99), Observation::Index(36));
        assert_eq!(CliffWalking::model(25, 2), (36, -100.0, false));
        // Stepping right from the start falls in.
        let r = env.step(&Action::Discrete(1)).unwrap();
        assert_eq!((r.observation, r.reward, r.terminated), (Observation::Index(36), -100.0, false));
    }

    #[test]
    fn frozen_lake_starts_at_zero_and_ends_in_hole_or_goal() {
        let mut env = make(EnvName::FrozenLake);
        assert_eq!(env.reset(5), Observation::Index(0));
        for seed in 0..200 {
            env.reset(seed);
            loop {
                let r = env.step(&Action::Discrete(2)).unwrap();
                assert!(r.reward == 0.0 || r.reward == 1.0);
                if r.terminated {
                    let s = r.observation.as_index().unwrap();
                    assert!([5, 7, 11, 12, 15].contains(&s));
                    break;
                }
                if r.truncated {
                    break;
                }
            }
        }
    }

    #[test]
    fn frozen_lake_slip_frequencies() {
        // From state 4 pressing Right: lands on 5 (right), 0 (up) or 8 (down).
        let mut counts = [0usize; 16];
        for seed in 0..6000 {
            let mut rng = crate::seeding::rng(seed);
            let mut lake = FrozenLake::new();
            lake.reset_state(&mut rng);
            lake.state = 4;
            let (obs, _, _) = lake.transition(&Action::Discrete(2), &mut rng);
            counts[obs.as_index().unwrap()] += 1;
        }
        for s in [0, 5, 8] {
            let p = counts[s] as f64 / 6000.0;
            assert!((p - 1.0 / 3.0).abs() < 0.03, "state {s}: {p}");
        }
        assert_eq!(counts[0] + counts[5] + counts[8], 6000);
    }

    #[test]
    fn maze_layout_walls_and_shortest_path() {
        let layout = MazeLayout::parse(DEFAULT_MAZE).unwrap();
        assert_eq!((layout.rows, layout.cols, layout.start, layout.goal), (3, 3, 0, 8));
        assert_eq!(layout.next(1, 2), 1); // wall 1|2
        assert_eq!(layout.next(2, 3), 2);
        assert_eq!(layout.next(7, 2), 7); // wall 7|8
        assert_eq!(layout.next(0, 0), 0); // border
        assert_eq!(layout.next(0, 1), 3);
        // BFS distance start -> goal.
        let mut dist = vec![usize::MAX; 9];
        let mut queue = VecDeque::from([0usize]);
        dist[0] = 0;
        while let Some(s) = queue.pop_front() {
            for a in 0..4 {
                let n = layout.next(s, a);
                if dist[n] == usize::MAX {
                    dist[n] = dist[s] + 1;
                    queue.push_back(n);
                }
            }
        }
        assert_eq!(dist[8], 4);
    }

    #[test]
    fn maze_rewards() {
        let mut env = make(EnvName::Maze);
        env.reset(0);
        let r = env.step(&Action::Discrete(1)).unwrap();
        assert_eq!((r.reward, r.terminated), (-0.011, false));
        let mut total = r.reward;
        for a in [2, 2, 1] {
            let r = env.step(&Action::Discrete(a)).unwrap();
            total += r.reward;
            if r.terminated {
                assert_eq!(r.reward, 1.0);
            }
        }
        assert!((total - 0.967).abs() < 1e-12);
    }

    #[test]
    fn maze_parse_errors() {
        assert!(MazeLayout::parse("+---+\n|   |\n+---+\n").is_err());
        assert!(MazeLayout::parse("+---+\n").is_err());
    }
}
