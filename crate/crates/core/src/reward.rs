//! Goal-embedding distance rewards.
//!
//! The weighted reward for the transition `t-1 -> t` against active subgoal
//! `g_i` (last subgoal `g_m`) is
//!
//! ```text
//! R_t = clip(alpha * (dn(o_{t-1}; g_i) - dn(o_t; g_i)), -alpha, alpha)
//!     + beta  * [dn(o_t; g_i) < epsilon]
//!     + gamma * [i == m and dn(o_t; g_m) < epsilon]
//! ```
//!
//! where `dn(o; g_i) = d(o, g_i) / d(g_{i-1}, g_i)` and `g_{-1}` is the first
//! frame of the demonstration. Crossing the threshold pays `beta` once and
//! advances to the next subgoal for the following step; crossing it on the
//! last subgoal is recorded as a completion switch.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposer::{DecompositionError, SubgoalDecomposition};
use crate::trajectory::{l2_distance, Element, EmbeddingTrajectory, FrameIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 5.0,
            beta: 3.0,
            gamma: 6.0,
            epsilon: 0.2,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), RewardError> {
        let nonneg = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(RewardError::Weight { name, value: v })
            }
        };
        nonneg("alpha", self.alpha)?;
        nonneg("beta", self.beta)?;
        nonneg("gamma", self.gamma)?;
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(RewardError::Weight {
                name: "epsilon",
                value: self.epsilon,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("invalid weight {name} = {value}")]
    Weight { name: &'static str, value: f64 },
    #[error("degenerate segment {ordinal}: subgoal frame {frame} coincides with the segment start in embedding space")]
    Degenerate { ordinal: usize, frame: FrameIndex },
    #[error("frame {index} out of range for trajectory of {frames} frames")]
    FrameOutOfRange { index: usize, frames: usize },
    #[error("step t = {t} out of range 1..{frames}")]
    StepOutOfRange { t: usize, frames: usize },
    #[error("subgoal ordinal {ordinal} out of range for {count} subgoals")]
    OrdinalOutOfRange { ordinal: usize, count: usize },
    #[error("timestep {t} lies after subgoal {ordinal} at frame {frame}")]
    AfterSubgoal {
        t: usize,
        ordinal: usize,
        frame: FrameIndex,
    },
    #[error("observation width {got} does not match goal width {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// Unnormalized distance-difference reward `d(o_{t-1}, g) - d(o_t, g)`.
pub fn simple_reward<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    goal: FrameIndex,
    t: usize,
) -> Result<f64, RewardError> {
    if goal >= traj.len() {
        return Err(RewardError::FrameOutOfRange {
            index: goal,
            frames: traj.len(),
        });
    }
    if t == 0 || t >= traj.len() {
        return Err(RewardError::StepOutOfRange {
            t,
            frames: traj.len(),
        });
    }
    Ok(traj.distance(t - 1, goal) - traj.distance(t, goal))
}

/// `d(o_t, g_i) / d(g_{i-1}, g_i)`, with frame 0 standing in for `g_{-1}`.
pub fn normalized_distance<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    decomp: &SubgoalDecomposition,
    t: usize,
    ordinal: usize,
) -> Result<f64, RewardError> {
    decomp.check_frames(traj.len())?;
    let goals = decomp.subgoals();
    let &frame = goals.get(ordinal).ok_or(RewardError::OrdinalOutOfRange {
        ordinal,
        count: goals.len(),
    })?;
    if t > frame {
        return Err(RewardError::AfterSubgoal { t, ordinal, frame });
    }
    let start = if ordinal == 0 { 0 } else { goals[ordinal - 1] };
    let scale = traj.distance(start, frame);
    if scale == 0.0 {
        return Err(RewardError::Degenerate { ordinal, frame });
    }
    Ok(traj.distance(t, frame) / scale)
}

/// Outcome of one shaped transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedStep {
    pub reward: f64,
    pub progress: f64,
    /// Ordinal the transition was scored against.
    pub ordinal: usize,
    /// Normalized distance of the new observation to that subgoal.
    pub distance: f64,
    pub switched: bool,
}

/// Online form of the weighted reward: holds the subgoal embeddings and
/// segment scales and tracks the active subgoal across steps.
#[derive(Debug, Clone)]
pub struct SubgoalShaper {
    goals: Vec<Vec<f64>>,
    frames: Vec<FrameIndex>,
    scales: Vec<f64>,
    weights: RewardWeights,
    active: usize,
    completed: bool,
}

impl SubgoalShaper {
    pub fn new<S: Element>(
        demo: &EmbeddingTrajectory<S>,
        decomp: &SubgoalDecomposition,
        weights: RewardWeights,
    ) -> Result<Self, RewardError> {
        weights.validate()?;
        decomp.check_frames(demo.len())?;
        let frames = decomp.subgoals().to_vec();
        let mut scales = Vec::with_capacity(frames.len());
        let mut start = 0;
        for (ordinal, &g) in frames.iter().enumerate() {
            let scale = demo.distance(start, g);
            if scale == 0.0 {
                return Err(RewardError::Degenerate { ordinal, frame: g });
            }
            scales.push(scale);
            start = g;
        }
        let goals = frames.iter().map(|&g| demo.frame_f64(g)).collect();
        Ok(Self {
            goals,
            frames,
            scales,
            weights,
            active: 0,
            completed: false,
        })
    }

    /// Single goal at the final demonstration frame, no transition bonus.
    pub fn final_goal<S: Element>(
        demo: &EmbeddingTrajectory<S>,
        weights: RewardWeights,
    ) -> Result<Self, RewardError> {
        let weights = RewardWeights {
            beta: 0.0,
            ..weights
        };
        Self::new(demo, &SubgoalDecomposition::final_only(demo.len()), weights)
    }

    pub fn reset(&mut self) {
        self.active = 0;
        self.completed = false;
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn active_frame(&self) -> FrameIndex {
        self.frames[self.active]
    }

    pub fn subgoal_count(&self) -> usize {
        self.goals.len()
    }

    pub fn completed(&self) -> bool {
        self.completed
    }

    pub fn weights(&self) -> &RewardWeights {
        &self.weights
    }

    pub fn normalized_distance<S: Element>(
        &self,
        obs: &[S],
        ordinal: usize,
    ) -> Result<f64, RewardError> {
        let goal = &self.goals[ordinal];
        if obs.len() != goal.len() {
            return Err(RewardError::Dimension {
                got: obs.len(),
                expected: goal.len(),
            });
        }
        Ok(l2_distance(obs, goal) / self.scales[ordinal])
    }

    pub fn step<S: Element>(&mut self, prev: &[S], obs: &[S]) -> Result<ShapedStep, RewardError> {
        let w = self.weights;
        let ordinal = self.active;
        let last = ordinal + 1 == self.goals.len();
        let before = self.normalized_distance(prev, ordinal)?;
        let after = self.normalized_distance(obs, ordinal)?;
        let progress = (w.alpha * (before - after)).clamp(-w.alpha, w.alpha);
        let mut reward = progress;
        let reached = after < w.epsilon;
        let mut switched = false;
        if reached && !self.completed {
            reward += w.beta;
            switched = true;
            if last {
                self.completed = true;
            } else {
                self.active += 1;
            }
        }
        if last && reached {
            reward += w.gamma;
        }
        Ok(ShapedStep {
            reward,
            progress,
            ordinal,
            distance: after,
            switched,
        })
    }
}

/// Per-transition rewards for a trajectory; `rewards[k]` scores `k -> k+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardTrace {
    pub rewards: Vec<f64>,
    /// Frame index of the subgoal each transition was scored against.
    pub goal_at: Vec<FrameIndex>,
    /// Timesteps `t` whose transition crossed the switch threshold.
    pub switches: Vec<usize>,
    pub weights: RewardWeights,
}

pub fn shaped_reward_trace<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    decomp: &SubgoalDecomposition,
    weights: RewardWeights,
) -> Result<RewardTrace, RewardError> {
    let shaper = SubgoalShaper::new(traj, decomp, weights)?;
    replay(shaper, traj)
}

pub fn final_goal_reward_trace<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    weights: RewardWeights,
) -> Result<RewardTrace, RewardError> {
    let shaper = SubgoalShaper::final_goal(traj, weights)?;
    replay(shaper, traj)
}

fn replay<S: Element>(
    mut shaper: SubgoalShaper,
    traj: &EmbeddingTrajectory<S>,
) -> Result<RewardTrace, RewardError> {
    let steps = traj.len() - 1;
    let mut trace = RewardTrace {
        rewards: Vec::with_capacity(steps),
        goal_at: Vec::with_capacity(steps),
        switches: Vec::new(),
        weights: *shaper.weights(),
    };
    for t in 1..traj.len() {
        let goal = shaper.active_frame();
        let step = shaper.step(traj.frame(t - 1), traj.frame(t))?;
        trace.rewards.push(step.reward);
        trace.goal_at.push(goal);
        if step.switched {
            trace.switches.push(t);
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(rows: &[[f64; 2]]) -> EmbeddingTrajectory<f64> {
        EmbeddingTrajectory::from_rows(rows).unwrap()
    }

    #[test]
    fn simple_reward_examples() {
        let t = traj(&[[0.0, 0.0], [3.0, 4.0]]);
        assert_eq!(simple_reward(&t, 1, 1).unwrap(), 5.0);
        let t = traj(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]]);
        assert_eq!(simple_reward(&t, 2, 1).unwrap(), 0.0);
        assert!(matches!(
            simple_reward(&t, 3, 1),
            Err(RewardError::FrameOutOfRange { .. })
        ));
        assert!(matches!(
            simple_reward(&t, 2, 0),
            Err(RewardError::StepOutOfRange { .. })
        ));
        assert!(matches!(
            simple_reward(&t, 2, 3),
            Err(RewardError::StepOutOfRange { .. })
        ));
    }

    #[test]
    fn normalized_distance_endpoints() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [2.0, 3.0]]);
        let d = SubgoalDecomposition::new(vec![2, 4], 5).unwrap();
        assert_eq!(normalized_distance(&t, &d, 0, 0).unwrap(), 1.0);
        assert_eq!(normalized_distance(&t, &d, 2, 0).unwrap(), 0.0);
        assert_eq!(normalized_distance(&t, &d, 2, 1).unwrap(), 1.0);
        assert_eq!(normalized_distance(&t, &d, 3, 1).unwrap(), 2.0 / 3.0);
        assert_eq!(normalized_distance(&t, &d, 4, 1).unwrap(), 0.0);
        assert!(matches!(
            normalized_distance(&t, &d, 3, 0),
            Err(RewardError::AfterSubgoal { .. })
        ));
        assert!(matches!(
            normalized_distance(&t, &d, 0, 2),
            Err(RewardError::OrdinalOutOfRange { .. })
        ));
    }

    #[test]
    fn degenerate_segment_is_an_error() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [2.0, 0.0]]);
        let d = SubgoalDecomposition::new(vec![2, 3], 4).unwrap();
        assert_eq!(
            normalized_distance(&t, &d, 1, 0),
            Err(RewardError::Degenerate {
                ordinal: 0,
                frame: 2
            })
        );
        assert!(matches!(
            shaped_reward_trace(&t, &d, RewardWeights::default()),
            Err(RewardError::Degenerate { .. })
        ));
    }

    #[test]
    fn weights_validated() {
        let bad = RewardWeights {
            epsilon: 1.0,
            ..RewardWeights::default()
        };
        assert!(bad.validate().is_err());
        let bad = RewardWeights {
            alpha: -1.0,
            ..RewardWeights::default()
        };
        assert!(bad.validate().is_err());
        assert!(RewardWeights::default().validate().is_ok());
    }

    #[test]
    fn static_steps_have_zero_progress() {
        let t = traj(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let d = SubgoalDecomposition::final_only(5);
        let tr = shaped_reward_trace(&t, &d, RewardWeights::default()).unwrap();
        assert_eq!(tr.rewards[0], 0.0);
        assert_eq!(tr.rewards[1], 0.0);
        assert!(tr.rewards[2] > 0.0);
    }

    #[test]
    fn progress_term_clipped_to_alpha() {
        // one huge jump relative to the segment scale
        let t = traj(&[[0.0, 0.0], [1.0, 0.0], [-9.0, 0.0], [1.0, 0.0], [2.0, 0.0]]);
        let d = SubgoalDecomposition::final_only(5);
        let w = RewardWeights {
            beta: 0.0,
            gamma: 0.0,
            ..RewardWeights::default()
        };
        let tr = shaped_reward_trace(&t, &d, w).unwrap();
        assert_eq!(tr.rewards[1], -5.0);
        assert_eq!(tr.rewards[2], 5.0);
    }

    #[test]
    fn demo_replay_switches_every_subgoal() {
        let t = traj(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [3.0, 0.0],
            [3.0, 1.0],
            [3.0, 2.0],
            [3.0, 3.0],
            [2.0, 3.0],
            [1.0, 3.0],
        ]);
        let d = SubgoalDecomposition::new(vec![3, 6, 8], 9).unwrap();
        let tr = shaped_reward_trace(&t, &d, RewardWeights::default()).unwrap();
        assert_eq!(tr.switches, vec![3, 6, 8]);
        assert_eq!(tr.goal_at, vec![3, 3, 3, 6, 6, 6, 8, 8]);
        // final step: progress 5 * 0.5, beta, gamma
        assert_eq!(*tr.rewards.last().unwrap(), 2.5 + 3.0 + 6.0);
    }

    #[test]
    fn final_goal_pays_no_beta() {
        let t = traj(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [2.0, 0.0],
            [3.0, 0.0],
            [4.0, 0.0],
            [5.0, 0.0],
        ]);
        let tr = final_goal_reward_trace(&t, RewardWeights::default()).unwrap();
        // completion registers only at the final frame (dn = 0.2 at t=4 is not < 0.2)
        assert_eq!(tr.switches, vec![5]);
        assert!(tr.goal_at.iter().all(|&g| g == 5));
        assert!((tr.rewards[4] - (1.0 + 6.0)).abs() < 1e-12);
        assert_eq!(tr.weights.beta, 0.0);
        let same = shaped_reward_trace(
            &t,
            &SubgoalDecomposition::final_only(6),
            RewardWeights {
                beta: 0.0,
                ..RewardWeights::default()
            },
        )
        .unwrap();
        assert_eq!(tr, same);
    }

    #[test]
    fn gamma_repeats_but_beta_does_not() {
        let t = traj(&[[0.0, 0.0], [10.0, 0.0], [10.0, 0.0], [10.0, 0.0]]);
        let tr = shaped_reward_trace(
            &t,
            &SubgoalDecomposition::final_only(4),
            RewardWeights::default(),
        )
        .unwrap();
        assert_eq!(tr.switches, vec![1]);
        assert_eq!(tr.rewards, vec![5.0 + 3.0 + 6.0, 6.0, 6.0]);
    }

    #[test]
    fn shaper_rejects_width_mismatch() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0]]);
        let mut s = SubgoalShaper::final_goal(&t, RewardWeights::default()).unwrap();
        assert!(matches!(
            s.step(&[0.0f64], &[1.0f64]),
            Err(RewardError::Dimension { .. })
        ));
        assert_eq!(s.subgoal_count(), 1);
    }

    #[test]
    fn trace_json_shape() {
        let t = traj(&[[0.0, 0.0], [1.0, 0.0]]);
        let tr = final_goal_reward_trace(&t, RewardWeights::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&tr).unwrap();
        for key in ["rewards", "goal_at", "switches", "weights"] {
            assert!(v.get(key).is_some());
        }
        assert_eq!(v["weights"]["alpha"], 5.0);
    }
}
