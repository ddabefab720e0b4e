//! Goal relabeling and the heuristic baseline labelings.
//!
//! All randomized labelings draw from ChaCha8 seeded with
//! [`SeedableRng::seed_from_u64`], so a `(seed, T)` pair reproduces the same
//! output on every platform.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decomposer::{DecompositionError, SubgoalDecomposition};
use crate::trajectory::FrameIndex;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error("window must be at least 1")]
    Window,
    #[error("trajectory of {0} frames is too short for the random baseline (need at least 6)")]
    TooShort(usize),
}

/// Per-timestep goal assignment: `labels[t]` is the first subgoal at or after `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalLabeling {
    labels: Vec<FrameIndex>,
}

impl GoalLabeling {
    pub fn labels(&self) -> &[FrameIndex] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn into_vec(self) -> Vec<FrameIndex> {
        self.labels
    }
}

pub fn relabel(decomp: &SubgoalDecomposition, frames: usize) -> Result<GoalLabeling, LabelError> {
    decomp.check_frames(frames)?;
    let mut labels = Vec::with_capacity(frames);
    let mut goals = decomp.subgoals().iter().copied().peekable();
    for t in 0..frames {
        while goals.next_if(|&g| g < t).is_some() {}
        // the last subgoal is T - 1, so one always remains
        labels.push(*goals.peek().expect("last subgoal is the final frame"));
    }
    Ok(GoalLabeling { labels })
}

/// Uniform baseline: each `t` gets a frame drawn uniformly from
/// `t+1 ..= min(t + window, T-1)`; the final frame labels itself.
pub fn uniform_labels(
    frames: usize,
    window: usize,
    seed: u64,
) -> Result<Vec<FrameIndex>, LabelError> {
    if window == 0 {
        return Err(LabelError::Window);
    }
    let mut rng = seeded_rng(seed);
    let last = frames.saturating_sub(1);
    Ok((0..frames)
        .map(|t| {
            if t == last {
                last
            } else {
                rng.random_range(t + 1..=(t + window).min(last))
            }
        })
        .collect())
}

/// Random baseline: 3 to 5 distinct frames from `0..T-1`, sorted, plus `T-1`.
pub fn random_subgoals(frames: usize, seed: u64) -> Result<SubgoalDecomposition, LabelError> {
    if frames < 6 {
        return Err(LabelError::TooShort(frames));
    }
    let mut rng = seeded_rng(seed);
    let count = rng.random_range(3..=5);
    let mut picks = sample(&mut rng, frames - 1, count).into_vec();
    picks.sort_unstable();
    picks.push(frames - 1);
    Ok(SubgoalDecomposition::new(picks, frames)?)
}
