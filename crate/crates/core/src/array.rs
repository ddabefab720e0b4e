//! Entry points on flat row-major buffers, for callers that already hold
//! embeddings in memory.

use thiserror::Error;

use crate::decomposer::{
    decompose, DecomposeError, DecomposerConfig, DecompositionError, SubgoalDecomposition,
};
use crate::reward::{shaped_reward_trace, RewardError, RewardTrace, RewardWeights};
use crate::trajectory::{Element, EmbeddingTrajectory, FrameIndex, TrajectoryError};

#[derive(Debug, Error)]
pub enum ArrayError {
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// Subgoal frames of a `frames x dim` buffer.
pub fn decompose_array<S: Element>(
    buffer: &[S],
    frames: usize,
    dim: usize,
    config: &DecomposerConfig,
) -> Result<Vec<FrameIndex>, ArrayError> {
    let traj = EmbeddingTrajectory::from_flat(buffer.to_vec(), frames, dim)?;
    Ok(decompose(&traj, config)?.subgoals().to_vec())
}

/// Shaped per-transition rewards and switch steps of a `frames x dim` buffer.
pub fn shaped_rewards_array<S: Element>(
    buffer: &[S],
    frames: usize,
    dim: usize,
    subgoals: &[FrameIndex],
    weights: RewardWeights,
) -> Result<RewardTrace, ArrayError> {
    let traj = EmbeddingTrajectory::from_flat(buffer.to_vec(), frames, dim)?;
    let decomp = SubgoalDecomposition::new(subgoals.to_vec(), frames)?;
    Ok(shaped_reward_trace(&traj, &decomp, weights)?)
}
