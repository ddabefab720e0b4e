//! A grid world where waypoints must be touched in order.
//!
//! The observation is `(x/n, y/n, flag_scale * flags)`. Touching the next
//! waypoint flips its flag, which moves the embedding by `flag_scale`; the
//! distance to the final demonstration frame is therefore dominated by flag
//! mismatch and says little about where to walk next.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposer::{decompose, DecomposeError, DecomposerConfig};
use crate::labeler::seeded_rng;
use crate::reward::{RewardError, RewardWeights, SubgoalShaper};
use crate::trajectory::EmbeddingTrajectory;

pub type Cell = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainEnvConfig {
    pub grid_n: usize,
    pub waypoints: Vec<Cell>,
    pub flag_scale: f64,
    pub horizon: usize,
    #[serde(default)]
    pub start: Cell,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("grid side must be at least 2, got {0}")]
    Grid(usize),
    #[error("need between 1 and 32 waypoints, got {0}")]
    WaypointCount(usize),
    #[error("cell {cell:?} lies outside the {n}x{n} grid")]
    OutOfGrid { cell: Cell, n: usize },
    #[error("waypoint {0:?} is listed twice")]
    Duplicate(Cell),
    #[error("waypoint {0:?} coincides with the start cell")]
    AtStart(Cell),
    #[error("flag_scale {got} must exceed the grid diagonal {diagonal}")]
    FlagScale { got: f64, diagonal: f64 },
    #[error("horizon {horizon} is shorter than the shortest completing path ({needed} steps)")]
    Horizon { horizon: usize, needed: usize },
    #[error("episode already finished")]
    Finished,
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error("learner: {0}")]
    Learner(String),
}

fn manhattan(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

impl ChainEnvConfig {
    pub fn diagonal(&self) -> f64 {
        std::f64::consts::SQRT_2 * (self.grid_n - 1) as f64 / self.grid_n as f64
    }

    pub fn shortest_path(&self) -> usize {
        let mut at = self.start;
        let mut total = 0;
        for &w in &self.waypoints {
            total += manhattan(at, w);
            at = w;
        }
        total
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let n = self.grid_n;
        if n < 2 {
            return Err(EnvError::Grid(n));
        }
        if self.waypoints.is_empty() || self.waypoints.len() > 32 {
            return Err(EnvError::WaypointCount(self.waypoints.len()));
        }
        for (i, &cell) in std::iter::once(&self.start)
            .chain(&self.waypoints)
            .enumerate()
        {
            if cell.0 >= n || cell.1 >= n {
                return Err(EnvError::OutOfGrid { cell, n });
            }
            if i > 0 && cell == self.start {
                return Err(EnvError::AtStart(cell));
            }
        }
        for (i, w) in self.waypoints.iter().enumerate() {
            if self.waypoints[..i].contains(w) {
                return Err(EnvError::Duplicate(*w));
            }
        }
        // injective embedding over reachable (position, flags)
        if self.flag_scale.partial_cmp(&self.diagonal()) != Some(std::cmp::Ordering::Greater) {
            return Err(EnvError::FlagScale {
                got: self.flag_scale,
                diagonal: self.diagonal(),
            });
        }
        let needed = self.shortest_path();
        if self.horizon < needed {
            return Err(EnvError::Horizon {
                horizon: self.horizon,
                needed,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainState {
    pub pos: Cell,
    /// Bit `j` set once waypoint `j` has been touched.
    pub flags: u32,
    pub steps: usize,
}

impl ChainState {
    pub fn flags_set(&self) -> usize {
        self.flags.count_ones() as usize
    }
}

/// Grid world plus its current state; one owner per episode.
#[derive(Debug, Clone)]
pub struct ChainEnv {
    cfg: ChainEnvConfig,
    state: ChainState,
}

impl ChainEnv {
    pub fn new(cfg: ChainEnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let state = ChainState {
            pos: cfg.start,
            flags: 0,
            steps: 0,
        };
        Ok(Self { cfg, state })
    }

    pub fn config(&self) -> &ChainEnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> ChainState {
        self.state
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.state = ChainState {
            pos: self.cfg.start,
            flags: 0,
            steps: 0,
        };
        self.observe()
    }

    pub fn observe(&self) -> Vec<f64> {
        observation(&self.cfg, &self.state)
    }

    pub fn all_flags(&self) -> u32 {
        all_flags(&self.cfg)
    }

    pub fn succeeded(&self) -> bool {
        self.state.flags == self.all_flags()
    }

    pub fn is_done(&self) -> bool {
        self.succeeded() || self.state.steps >= self.cfg.horizon
    }

    pub fn step(&mut self, action: Action) -> Result<Vec<f64>, EnvError> {
        if self.is_done() {
            return Err(EnvError::Finished);
        }
        let (state, obs) = chain_env_step(&self.cfg, self.state, action);
        self.state = state;
        Ok(obs)
    }
}

fn all_flags(cfg: &ChainEnvConfig) -> u32 {
    if cfg.waypoints.len() == 32 {
        u32::MAX
    } else {
        (1u32 << cfg.waypoints.len()) - 1
    }
}

pub fn observation(cfg: &ChainEnvConfig, state: &ChainState) -> Vec<f64> {
    let n = cfg.grid_n as f64;
    let mut obs = Vec::with_capacity(2 + cfg.waypoints.len());
    obs.push(state.pos.0 as f64 / n);
    obs.push(state.pos.1 as f64 / n);
    obs.extend((0..cfg.waypoints.len()).map(|j| {
        if state.flags >> j & 1 == 1 {
            cfg.flag_scale
        } else {
            0.0
        }
    }));
    obs
}

/// Pure transition: moves are clamped to the grid, and landing on the next
/// untouched waypoint sets its flag.
pub fn chain_env_step(
    cfg: &ChainEnvConfig,
    mut state: ChainState,
    action: Action,
) -> (ChainState, Vec<f64>) {
    let (x, y) = state.pos;
    let last = cfg.grid_n - 1;
    state.pos = match action {
        Action::Up => (x, (y + 1).min(last)),
        Action::Down => (x, y.saturating_sub(1)),
        Action::Left => (x.saturating_sub(1), y),
        Action::Right => ((x + 1).min(last), y),
        Action::Stay => (x, y),
    };
    let next = state.flags.trailing_ones() as usize;
    if next < cfg.waypoints.len() && state.pos == cfg.waypoints[next] {
        state.flags |= 1 << next;
    }
    state.steps += 1;
    (state, observation(cfg, &state))
}

/// Waypoint-following demonstration: for each waypoint, walk along x, then y.
pub fn scripted_demo(cfg: &ChainEnvConfig) -> Vec<Action> {
    let mut at = cfg.start;
    let mut actions = Vec::with_capacity(cfg.shortest_path());
    for &(wx, wy) in &cfg.waypoints {
        let dx = if wx > at.0 {
            Action::Right
        } else {
            Action::Left
        };
        let dy = if wy > at.1 { Action::Up } else { Action::Down };
        actions.extend(std::iter::repeat_n(dx, at.0.abs_diff(wx)));
        actions.extend(std::iter::repeat_n(dy, at.1.abs_diff(wy)));
        at = (wx, wy);
    }
    actions
}

/// Observation sequence of the scripted demonstration, initial frame included.
pub fn demo_trajectory(cfg: &ChainEnvConfig) -> Result<EmbeddingTrajectory<f64>, EnvError> {
    let mut env = ChainEnv::new(cfg.clone())?;
    let mut rows = vec![env.reset()];
    for action in scripted_demo(cfg) {
        rows.push(env.step(action)?);
    }
    Ok(EmbeddingTrajectory::from_rows(&rows)
        .expect("observations are finite")
        .with_meta("chain demo"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    Uvd,
    FinalGoal,
}

impl fmt::Display for RewardMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewardMode::Uvd => "uvd",
            RewardMode::FinalGoal => "final_goal",
        })
    }
}

impl FromStr for RewardMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uvd" => Ok(RewardMode::Uvd),
            "final_goal" | "final-goal" => Ok(RewardMode::FinalGoal),
            _ => Err(format!("unknown reward mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub episodes: usize,
    pub learning_rate: f64,
    pub discount: f64,
    /// Exploration rate, decayed linearly from start to end over training.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub decomposer: DecomposerConfig,
    pub weights: RewardWeights,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if self.episodes == 0 {
            return Err(EnvError::Learner("episodes must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(EnvError::Learner(format!(
                "learning_rate {} not in (0, 1]",
                self.learning_rate
            )));
        }
        if !unit(self.discount) || !unit(self.epsilon_start) || !unit(self.epsilon_end) {
            return Err(EnvError::Learner(
                "discount and exploration rates must lie in [0, 1]".into(),
            ));
        }
        self.decomposer.validate()?;
        self.weights.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub success: bool,
    pub flags_set: usize,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutcome {
    pub mode: RewardMode,
    /// Fraction of seeds whose greedy rollout touched every waypoint.
    pub success_rate: f64,
    /// Mean fraction of waypoints touched by the greedy rollout.
    pub completion_rate: f64,
    pub subgoals: Vec<usize>,
    pub per_seed: Vec<SeedOutcome>,
}

/// Everything needed to rerun a comparison: environment, learner, seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainExperiment {
    pub env: ChainEnvConfig,
    pub learner: LearnerConfig,
    pub seeds: Vec<u64>,
}

impl ChainExperiment {
    pub fn run(&self, mode: RewardMode) -> Result<ChainOutcome, EnvError> {
        run_chain_experiment(&self.env, mode, &self.learner, &self.seeds)
    }
}

/// Q-table over (position, flags, active subgoal ordinal).
struct QTable {
    n: usize,
    flag_states: usize,
    values: Vec<[f64; 5]>,
}

impl QTable {
    fn new(n: usize, waypoints: usize, ordinals: usize) -> Self {
        let flag_states = waypoints + 1;
        Self {
            n,
            flag_states,
            values: vec![[0.0; 5]; n * n * flag_states * ordinals],
        }
    }

    fn index(&self, state: &ChainState, ordinal: usize) -> usize {
        // flags are always a prefix, so their popcount identifies them
        ((ordinal * self.flag_states + state.flags_set()) * self.n + state.pos.1) * self.n
            + state.pos.0
    }

    fn greedy(&self, s: usize) -> usize {
        let row = &self.values[s];
        (1..5).fold(0, |best, a| if row[a] > row[best] { a } else { best })
    }

    fn max(&self, s: usize) -> f64 {
        self.values[s]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Shaper for the chosen mode, built from the scripted demonstration.
pub fn demo_shaper(
    cfg: &ChainEnvConfig,
    mode: RewardMode,
    learner: &LearnerConfig,
) -> Result<(SubgoalShaper, Vec<usize>), EnvError> {
    let demo = demo_trajectory(cfg)?;
    Ok(match mode {
        RewardMode::Uvd => {
            let decomp = decompose(&demo, &learner.decomposer)?;
            let subgoals = decomp.subgoals().to_vec();
            (
                SubgoalShaper::new(&demo, &decomp, learner.weights)?,
                subgoals,
            )
        }
        RewardMode::FinalGoal => (
            SubgoalShaper::final_goal(&demo, learner.weights)?,
            vec![demo.len() - 1],
        ),
    })
}

fn train_and_evaluate(
    cfg: &ChainEnvConfig,
    shaper: &SubgoalShaper,
    learner: &LearnerConfig,
    seed: u64,
) -> Result<SeedOutcome, EnvError> {
    let mut rng = seeded_rng(cfg.seed ^ seed.wrapping_mul(0xD1B5_4A32_D192_ED03));
    let mut env = ChainEnv::new(cfg.clone())?;
    let mut shaper = shaper.clone();
    let mut q = QTable::new(cfg.grid_n, cfg.waypoints.len(), shaper.subgoal_count());
    let span = learner.episodes.saturating_sub(1).max(1) as f64;

    for episode in 0..learner.episodes {
        let explore = learner.epsilon_start
            + (learner.epsilon_end - learner.epsilon_start) * episode as f64 / span;
        let mut obs = env.reset();
        shaper.reset();
        while !env.is_done() {
            let s = q.index(&env.state(), shaper.active());
            let a = if rng.random::<f64>() < explore {
                rng.random_range(0..5)
            } else {
                q.greedy(s)
            };
            let next = env.step(Action::ALL[a])?;
            let r = shaper.step(&obs, &next)?.reward;
            let target = if env.succeeded() {
                r
            } else {
                r + learner.discount * q.max(q.index(&env.state(), shaper.active()))
            };
            let v = &mut q.values[s][a];
            *v += learner.learning_rate * (target - *v);
            obs = next;
        }
    }

    // greedy evaluation
    let mut obs = env.reset();
    shaper.reset();
    while !env.is_done() {
        let a = q.greedy(q.index(&env.state(), shaper.active()));
        let next = env.step(Action::ALL[a])?;
        shaper.step(&obs, &next)?;
        obs = next;
    }
    let state = env.state();
    Ok(SeedOutcome {
        seed,
        success: env.succeeded(),
        flags_set: state.flags_set(),
        steps: state.steps,
    })
}

pub fn run_chain_experiment(
    cfg: &ChainEnvConfig,
    mode: RewardMode,
    learner: &LearnerConfig,
    seeds: &[u64],
) -> Result<ChainOutcome, EnvError> {
    cfg.validate()?;
    learner.validate()?;
    let (shaper, subgoals) = demo_shaper(cfg, mode, learner)?;
    let per_seed = seeds
        .iter()
        .map(|&seed| train_and_evaluate(cfg, &shaper, learner, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let n = per_seed.len().max(1) as f64;
    let success_rate = per_seed.iter().filter(|o| o.success).count() as f64 / n;
    let completion_rate = per_seed
        .iter()
        .map(|o| o.flags_set as f64 / cfg.waypoints.len() as f64)
        .sum::<f64>()
        / n;
    Ok(ChainOutcome {
        mode,
        success_rate,
        completion_rate,
        subgoals,
        per_seed,
    })
}
