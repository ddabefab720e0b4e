//! Recursive subgoal discovery.
//!
//! Starting from the last frame as goal, the smoothed L2 distance curve from
//! every earlier frame to the goal should decrease while the demonstration is
//! making progress toward it. The latest strict local maximum of that curve
//! (at least `min_interval + 1` frames before the goal) marks where progress
//! toward the goal began; the frame just before it becomes the next subgoal
//! and the search repeats on the prefix ending there.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::smoother::{smooth_unchecked, SmoothError, SmootherConfig};
use crate::trajectory::{l2_distance, Element, EmbeddingTrajectory, FrameIndex};

pub const DEFAULT_MIN_INTERVAL: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecomposerConfig {
    pub min_interval: usize,
    pub smoother: SmootherConfig,
}

impl Default for DecomposerConfig {
    fn default() -> Self {
        Self {
            min_interval: DEFAULT_MIN_INTERVAL,
            smoother: SmootherConfig::default(),
        }
    }
}

impl DecomposerConfig {
    pub fn new(min_interval: usize, bandwidth: f64) -> Self {
        Self {
            min_interval,
            smoother: SmootherConfig::with_bandwidth(bandwidth),
        }
    }

    pub fn validate(&self) -> Result<(), DecomposeError> {
        if self.min_interval == 0 {
            return Err(DecomposeError::MinInterval);
        }
        self.smoother.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecomposeError {
    #[error("min_interval must be at least 1")]
    MinInterval,
    #[error(transparent)]
    Smoother(#[from] SmoothError),
    #[error("goal frame {end} out of range for trajectory of {frames} frames")]
    EndOutOfRange { end: usize, frames: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecompositionError {
    #[error("subgoal list is empty")]
    Empty,
    #[error("subgoals must be strictly increasing (at position {0})")]
    NotIncreasing(usize),
    #[error("last subgoal {last} must be the final frame {expected}")]
    LastNotFinal { last: usize, expected: usize },
    #[error("trajectory length {given} does not match decomposition length {expected}")]
    LengthMismatch { given: usize, expected: usize },
}

/// L2 distances from frames `0..=goal_index` to the goal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCurve {
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub goal_index: FrameIndex,
}

/// Ordered subgoal frames ending at `T - 1`, with per-subgoal budgets.
///
/// `budgets[0] = subgoals[0] + 1` and `budgets[i] = subgoals[i] - subgoals[i-1]`,
/// so budgets always sum to `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgoalDecomposition {
    frames: usize,
    subgoals: Vec<FrameIndex>,
    budgets: Vec<usize>,
}

impl SubgoalDecomposition {
    pub fn new(subgoals: Vec<FrameIndex>, frames: usize) -> Result<Self, DecompositionError> {
        let &last = subgoals.last().ok_or(DecompositionError::Empty)?;
        if let Some(i) = subgoals.windows(2).position(|w| w[1] <= w[0]) {
            return Err(DecompositionError::NotIncreasing(i + 1));
        }
        if frames == 0 || last != frames - 1 {
            return Err(DecompositionError::LastNotFinal {
                last,
                expected: frames.saturating_sub(1),
            });
        }
        let budgets = subgoals
            .iter()
            .scan(None, |prev: &mut Option<usize>, &g| {
                let b = match *prev {
                    None => g + 1,
                    Some(p) => g - p,
                };
                *prev = Some(g);
                Some(b)
            })
            .collect();
        Ok(Self {
            frames,
            subgoals,
            budgets,
        })
    }

    /// The trivial decomposition: the final frame is the only goal.
    pub fn final_only(frames: usize) -> Self {
        Self {
            frames,
            subgoals: vec![frames - 1],
            budgets: vec![frames],
        }
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn subgoals(&self) -> &[FrameIndex] {
        &self.subgoals
    }

    pub fn budgets(&self) -> &[usize] {
        &self.budgets
    }

    pub fn len(&self) -> usize {
        self.subgoals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgoals.is_empty()
    }

    pub fn check_frames(&self, given: usize) -> Result<(), DecompositionError> {
        if given == self.frames {
            Ok(())
        } else {
            Err(DecompositionError::LengthMismatch {
                given,
                expected: self.frames,
            })
        }
    }
}

pub fn distance_curve<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    end: FrameIndex,
    smoother: &SmootherConfig,
) -> Result<DistanceCurve, DecomposeError> {
    if end >= traj.len() {
        return Err(DecomposeError::EndOutOfRange {
            end,
            frames: traj.len(),
        });
    }
    smoother.validate()?;
    Ok(curve_unchecked(traj, end, smoother))
}

fn curve_unchecked<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    end: FrameIndex,
    smoother: &SmootherConfig,
) -> DistanceCurve {
    let goal = traj.frame(end);
    let raw: Vec<f64> = (0..=end)
        .map(|s| l2_distance(traj.frame(s), goal))
        .collect();
    let smoothed = smooth_unchecked(&raw, smoother);
    DistanceCurve {
        raw,
        smoothed,
        goal_index: end,
    }
}

/// Indices `i` with `v[i-1] < v[i] > v[i+1]`, ascending. Endpoints and
/// plateaus never qualify.
pub fn find_monotonicity_breaks(values: &[f64]) -> Vec<FrameIndex> {
    values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[0] < w[1] && w[1] > w[2])
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn decompose<S: Element>(
    traj: &EmbeddingTrajectory<S>,
    config: &DecomposerConfig,
) -> Result<SubgoalDecomposition, DecomposeError> {
    config.validate()?;
    let mut goal = traj.len() - 1;
    let mut found = vec![goal];
    while goal > config.min_interval {
        let curve = curve_unchecked(traj, goal, &config.smoother);
        let latest = find_monotonicity_breaks(&curve.smoothed)
            .into_iter()
            .rev()
            .find(|&e| goal - e > config.min_interval);
        match latest {
            Some(e) => {
                goal = e - 1;
                found.push(goal);
            }
            None => break,
        }
    }
    found.reverse();
    Ok(SubgoalDecomposition::new(found, traj.len())
        .expect("recursion yields increasing subgoals ending at T-1"))
}

/// Serialized form of one decomposition, one JSON object per trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub id: String,
    #[serde(rename = "T")]
    pub frames: usize,
    pub subgoals: Vec<FrameIndex>,
    pub budgets: Vec<usize>,
    pub config: RecordConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordConfig {
    pub min_interval: usize,
    pub bandwidth: f64,
}

impl DecompositionRecord {
    pub fn new(
        id: impl Into<String>,
        decomp: &SubgoalDecomposition,
        config: &DecomposerConfig,
    ) -> Self {
        Self {
            id: id.into(),
            frames: decomp.frames(),
            subgoals: decomp.subgoals().to_vec(),
            budgets: decomp.budgets().to_vec(),
            config: RecordConfig {
                min_interval: config.min_interval,
                bandwidth: config.smoother.bandwidth,
            },
        }
    }

    pub fn decomposition(&self) -> Result<SubgoalDecomposition, DecompositionError> {
        SubgoalDecomposition::new(self.subgoals.clone(), self.frames)
    }
}
