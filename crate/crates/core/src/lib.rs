//! Subgoal discovery for embedding trajectories.
//!
//! A demonstration is a sequence of frame embeddings. The decomposer walks
//! backwards from the final frame and cuts wherever the smoothed distance to
//! the current goal stops decreasing; the resulting subgoals drive goal
//! relabeling, a shaped reward, and a goal-relay automaton for inference.

pub mod array;
pub mod decomposer;
pub mod format;
pub mod inference;
pub mod labeler;
pub mod reward;
pub mod smoother;
pub mod synth;
pub mod trajectory;

pub use decomposer::{
    decompose, distance_curve, find_monotonicity_breaks, DecomposeError, DecomposerConfig,
    DecompositionRecord, DistanceCurve, SubgoalDecomposition,
};
pub use format::{load_trajectory, save_trajectory, Format, FormatError};
pub use inference::{
    build_index, relay_init, relay_transcript, GoalIndex, RelayConfig, RelayGoal, RelayState,
};
pub use labeler::{random_subgoals, relabel, uniform_labels, GoalLabeling};
pub use reward::{
    final_goal_reward_trace, shaped_reward_trace, simple_reward, RewardTrace, RewardWeights,
    SubgoalShaper,
};
pub use smoother::{smooth_curve, SmootherConfig};
pub use trajectory::{EmbeddingTrajectory, FrameIndex};
