//! Inference-time goal selection: nearest-neighbor goal lookup over labeled
//! demonstrations, and the goal-relay automaton that walks an ordered list of
//! subgoals during a rollout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decomposer::{DecompositionError, SubgoalDecomposition};
use crate::labeler::GoalLabeling;
use crate::trajectory::{l2_distance, squared_distance, Element, EmbeddingTrajectory, FrameIndex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("embedding width {got} does not match index width {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("labeling of trajectory {trajectory} has {labels} entries for {frames} frames")]
    LabelLength {
        trajectory: usize,
        labels: usize,
        frames: usize,
    },
    #[error("label {label} of trajectory {trajectory} is out of range")]
    LabelOutOfRange { trajectory: usize, label: usize },
    #[error("relay needs at least one goal")]
    NoGoals,
    #[error("goal budgets must be positive")]
    ZeroBudget,
    #[error("invalid relay config: {0}")]
    Config(String),
    #[error("relay already finished")]
    Finished,
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// Identifies a subgoal frame within the dataset the index was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgoalId {
    pub trajectory: usize,
    pub frame: FrameIndex,
}

#[derive(Debug, Clone)]
struct IndexEntry {
    embedding: Vec<f64>,
    goal: SubgoalId,
}

/// Lookup table from every labeled training frame to its assigned subgoal.
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct GoalIndex {
    dim: usize,
    entries: Vec<IndexEntry>,
    goal_embeddings: Vec<(SubgoalId, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub goal: SubgoalId,
    /// Insertion position of the matched entry.
    pub entry: usize,
    pub distance: f64,
}

pub fn build_index<S: Element>(
    dataset: &[(EmbeddingTrajectory<S>, GoalLabeling)],
) -> Result<GoalIndex, InferenceError> {
    let (first, _) = dataset.first().ok_or(InferenceError::EmptyDataset)?;
    let dim = first.dim();
    let mut entries = Vec::new();
    let mut goal_embeddings = Vec::new();
    for (ti, (traj, labeling)) in dataset.iter().enumerate() {
        if traj.dim() != dim {
            return Err(InferenceError::Dimension {
                got: traj.dim(),
                expected: dim,
            });
        }
        if labeling.len() != traj.len() {
            return Err(InferenceError::LabelLength {
                trajectory: ti,
                labels: labeling.len(),
                frames: traj.len(),
            });
        }
        let mut last_goal = None;
        for (t, &label) in labeling.labels().iter().enumerate() {
            if label >= traj.len() {
                return Err(InferenceError::LabelOutOfRange {
                    trajectory: ti,
                    label,
                });
            }
            let goal = SubgoalId {
                trajectory: ti,
                frame: label,
            };
            if last_goal != Some(label) {
                goal_embeddings.push((goal, traj.frame_f64(label)));
                last_goal = Some(label);
            }
            entries.push(IndexEntry {
                embedding: traj.frame_f64(t),
                goal,
            });
        }
    }
    Ok(GoalIndex {
        dim,
        entries,
        goal_embeddings,
    })
}

impl GoalIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn goal_embedding(&self, id: SubgoalId) -> Option<&[f64]> {
        self.goal_embeddings
            .iter()
            .find(|(g, _)| *g == id)
            .map(|(_, e)| e.as_slice())
    }

    /// Exact nearest entry by L2 distance; ties go to the earliest-inserted
    /// entry.
    ///
    /// Each candidate's squared distance is accumulated in index order and the
    /// scan abandons it as soon as the partial sum reaches the best so far.
    /// Partial sums of non-negative terms never decrease, so this returns the
    /// same entry and distance as a full scan.
    pub fn nearest_goal<S: Element>(&self, query: &[S]) -> Result<Neighbor, InferenceError> {
        self.check_dim(query.len())?;
        let query: Vec<f64> = query.iter().map(|v| v.to_f64()).collect();
        let mut best = f64::INFINITY;
        let mut best_idx = 0;
        'entries: for (i, e) in self.entries.iter().enumerate() {
            let mut acc = 0.0;
            for (a, b) in e.embedding.iter().zip(&query) {
                let d = a - b;
                acc += d * d;
                if acc >= best {
                    continue 'entries;
                }
            }
            best = acc;
            best_idx = i;
        }
        Ok(Neighbor {
            goal: self.entries[best_idx].goal,
            entry: best_idx,
            distance: best.sqrt(),
        })
    }

    /// Plain full scan over every entry; the reference the accelerated
    /// lookup must agree with.
    pub fn nearest_goal_exhaustive<S: Element>(
        &self,
        query: &[S],
    ) -> Result<Neighbor, InferenceError> {
        self.check_dim(query.len())?;
        let (entry, d2) = self
            .entries
            .iter()
            .map(|e| squared_distance(&e.embedding, query))
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |(bi, bd), (i, d)| if d < bd { (i, d) } else { (bi, bd) },
            );
        Ok(Neighbor {
            goal: self.entries[entry].goal,
            entry,
            distance: d2.sqrt(),
        })
    }

    fn check_dim(&self, got: usize) -> Result<(), InferenceError> {
        if got == self.dim {
            Ok(())
        } else {
            Err(InferenceError::Dimension {
                got,
                expected: self.dim,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    /// Raw embedding-distance threshold.
    pub epsilon: f64,
    /// Budget tolerance in steps.
    pub delta: usize,
    pub budget_check: bool,
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            delta: 2,
            budget_check: true,
        }
    }
}

impl RelayConfig {
    /// Final-goal baseline mode: budget criterion disabled.
    pub fn without_budget(epsilon: f64) -> Self {
        Self {
            epsilon,
            delta: 0,
            budget_check: false,
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        if self.epsilon > 0.0 && !self.epsilon.is_nan() {
            Ok(())
        } else {
            Err(InferenceError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayGoal {
    pub id: FrameIndex,
    pub embedding: Vec<f64>,
    pub budget: usize,
}

impl RelayGoal {
    /// Subgoal embeddings and budgets taken from a decomposed demonstration.
    pub fn from_decomposition<S: Element>(
        demo: &EmbeddingTrajectory<S>,
        decomp: &SubgoalDecomposition,
    ) -> Result<Vec<RelayGoal>, InferenceError> {
        decomp.check_frames(demo.len())?;
        Ok(decomp
            .subgoals()
            .iter()
            .zip(decomp.budgets())
            .map(|(&g, &b)| RelayGoal {
                id: g,
                embedding: demo.frame_f64(g),
                budget: b,
            })
            .collect())
    }
}

/// Single-owner automaton advancing through ordered subgoals.
#[derive(Debug, Clone)]
pub struct RelayState {
    goals: Vec<RelayGoal>,
    config: RelayConfig,
    current: usize,
    steps_since_switch: usize,
    observed: usize,
    finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelayStep {
    /// Number of observations fed before this one.
    pub t: usize,
    /// Goal the observation was compared against.
    pub goal_id: FrameIndex,
    pub distance: f64,
    pub switched: bool,
}

pub fn relay_init(
    goals: Vec<RelayGoal>,
    config: RelayConfig,
) -> Result<RelayState, InferenceError> {
    config.validate()?;
    let first = goals.first().ok_or(InferenceError::NoGoals)?;
    let dim = first.embedding.len();
    if let Some(g) = goals.iter().find(|g| g.embedding.len() != dim) {
        return Err(InferenceError::Dimension {
            got: g.embedding.len(),
            expected: dim,
        });
    }
    if goals.iter().any(|g| g.budget == 0) {
        return Err(InferenceError::ZeroBudget);
    }
    Ok(RelayState {
        goals,
        config,
        current: 0,
        steps_since_switch: 0,
        observed: 0,
        finished: false,
    })
}

impl RelayState {
    pub fn current(&self) -> usize {
        self.current
    }

    pub fn active_goal(&self) -> &RelayGoal {
        &self.goals[self.current]
    }

    pub fn goals(&self) -> &[RelayGoal] {
        &self.goals
    }

    pub fn steps_since_switch(&self) -> usize {
        self.steps_since_switch
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Feeds one observation. Switches when the observation is within
    /// `epsilon` of the active goal and, with the budget check on, the steps
    /// spent on this goal are within `delta` of its budget.
    pub fn step<S: Element>(&mut self, obs: &[S]) -> Result<RelayStep, InferenceError> {
        if self.finished {
            return Err(InferenceError::Finished);
        }
        let goal = &self.goals[self.current];
        if obs.len() != goal.embedding.len() {
            return Err(InferenceError::Dimension {
                got: obs.len(),
                expected: goal.embedding.len(),
            });
        }
        let t = self.observed;
        self.observed += 1;
        self.steps_since_switch += 1;
        let h = self.steps_since_switch;
        let distance = l2_distance(obs, &goal.embedding);
        let within_budget =
            !self.config.budget_check || h.abs_diff(goal.budget) < self.config.delta;
        let switched = distance < self.config.epsilon && within_budget;
        let out = RelayStep {
            t,
            goal_id: goal.id,
            distance,
            switched,
        };
        if switched {
            self.steps_since_switch = 0;
            if self.current + 1 == self.goals.len() {
                self.finished = true;
            } else {
                self.current += 1;
            }
        }
        Ok(out)
    }
}

/// Runs a whole observation sequence through a fresh relay, stopping once it
/// finishes.
pub fn relay_transcript<S: Element>(
    state: &mut RelayState,
    observations: &EmbeddingTrajectory<S>,
) -> Result<Vec<RelayStep>, InferenceError> {
    let mut out = Vec::new();
    for obs in observations.frames() {
        if state.is_finished() {
            break;
        }
        out.push(state.step(obs)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeler::relabel;

    fn traj(rows: &[[f64; 2]]) -> EmbeddingTrajectory<f64> {
        EmbeddingTrajectory::from_rows(rows).unwrap()
    }

    fn labeled(
        rows: &[[f64; 2]],
        subgoals: Vec<usize>,
    ) -> (EmbeddingTrajectory<f64>, GoalLabeling) {
        let t = traj(rows);
        let d = SubgoalDecomposition::new(subgoals, t.len()).unwrap();
        let l = relabel(&d, t.len()).unwrap();
        (t, l)
    }

    #[test]
    fn index_sizes() {
        let a = labeled(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], vec![2]);
        let b = labeled(
            &[[5.0, 5.0], [6.0, 5.0], [7.0, 5.0], [8.0, 5.0]],
            vec![1, 3],
        );
        assert_eq!(build_index(std::slice::from_ref(&a)).unwrap().len(), 3);
        let idx = build_index(&[a, b]).unwrap();
        assert_eq!(idx.len(), 7);
        assert_eq!(
            idx.goal_embedding(SubgoalId {
                trajectory: 1,
                frame: 1
            }),
            Some(&[6.0, 5.0][..])
        );
    }

    #[test]
    fn index_errors() {
        let a = labeled(&[[0.0, 0.0], [1.0, 0.0]], vec![1]);
        let wide = EmbeddingTrajectory::from_rows(&[[0.0f64, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let l = relabel(&SubgoalDecomposition::final_only(2), 2).unwrap();
        assert!(matches!(
            build_index(&[a.clone(), (wide, l)]),
            Err(InferenceError::Dimension { .. })
        ));
        assert!(matches!(
            build_index::<f64>(&[]),
            Err(InferenceError::EmptyDataset)
        ));
        let idx = build_index(&[a]).unwrap();
        assert!(matches!(
            idx.nearest_goal(&[0.0f64]),
            Err(InferenceError::Dimension {
                got: 1,
                expected: 2
            })
        ));
    }

    #[test]
    fn exact_query_hits_distance_zero() {
        let a = labeled(
            &[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
            vec![1, 3],
        );
        let idx = build_index(&[a]).unwrap();
        let n = idx.nearest_goal(&[2.0f64, 0.0]).unwrap();
        assert_eq!(n.distance, 0.0);
        assert_eq!(n.entry, 2);
        assert_eq!(
            n.goal,
            SubgoalId {
                trajectory: 0,
                frame: 3
            }
        );
    }

    #[test]
    fn ties_go_to_earliest_entry() {
        let a = labeled(&[[-1.0, 0.0], [1.0, 0.0], [5.0, 0.0]], vec![0, 2]);
        let idx = build_index(&[a]).unwrap();
        let n = idx.nearest_goal(&[0.0f64, 0.0]).unwrap();
        assert_eq!(n.entry, 0);
        assert_eq!(n.goal.frame, 0);
        assert_eq!(idx.nearest_goal_exhaustive(&[0.0f64, 0.0]).unwrap(), n);
    }

    fn goals() -> Vec<RelayGoal> {
        vec![
            RelayGoal {
                id: 3,
                embedding: vec![3.0, 0.0],
                budget: 4,
            },
            RelayGoal {
                id: 6,
                embedding: vec![3.0, 3.0],
                budget: 3,
            },
        ]
    }

    #[test]
    fn fresh_state() {
        let s = relay_init(goals(), RelayConfig::default()).unwrap();
        assert_eq!(s.current(), 0);
        assert_eq!(s.active_goal().id, 3);
        assert!(!s.is_finished());
        assert_eq!(s.goals()[0].budget, 4);
        assert_eq!(s.goals()[1].budget, 3);
        assert!(matches!(
            relay_init(vec![], RelayConfig::default()),
            Err(InferenceError::NoGoals)
        ));
        let bad = RelayConfig {
            epsilon: 0.0,
            ..RelayConfig::default()
        };
        assert!(relay_init(goals(), bad).is_err());
    }

    #[test]
    fn far_observation_never_switches() {
        let mut s = relay_init(goals(), RelayConfig::default()).unwrap();
        for _ in 0..10 {
            assert!(!s.step(&[100.0f64, 0.0]).unwrap().switched);
        }
        assert_eq!(s.steps_since_switch(), 10);
    }

    #[test]
    fn switch_at_goal_on_budget() {
        let mut s = relay_init(goals(), RelayConfig::default()).unwrap();
        for _ in 0..3 {
            s.step(&[100.0f64, 0.0]).unwrap();
        }
        let step = s.step(&[3.0f64, 0.0]).unwrap();
        assert!(step.switched);
        assert_eq!(step.goal_id, 3);
        assert_eq!(s.current(), 1);
        assert_eq!(s.steps_since_switch(), 0);
    }

    #[test]
    fn budget_blocks_early_switch() {
        let mut s = relay_init(goals(), RelayConfig::default()).unwrap();
        // h = 1, budget 4: |1 - 4| = 3 >= delta
        assert!(!s.step(&[3.0f64, 0.0]).unwrap().switched);
        // h = 2: |2 - 4| = 2, not < 2
        assert!(!s.step(&[3.0f64, 0.0]).unwrap().switched);
        // h = 3: within delta
        assert!(s.step(&[3.0f64, 0.0]).unwrap().switched);
    }

    #[test]
    fn finishing_and_stepping_after() {
        let cfg = RelayConfig::without_budget(1e300);
        let mut s = relay_init(goals(), cfg).unwrap();
        assert!(s.step(&[50.0f64, 50.0]).unwrap().switched);
        assert!(s.step(&[50.0f64, 50.0]).unwrap().switched);
        assert!(s.is_finished());
        assert_eq!(s.step(&[0.0f64, 0.0]), Err(InferenceError::Finished));
    }

    #[test]
    fn tiny_epsilon_never_switches() {
        let mut s = relay_init(goals(), RelayConfig::without_budget(1e-12)).unwrap();
        for k in 0..50 {
            let obs = [3.0 + 1e-6 * (k as f64 + 1.0), 0.0];
            assert!(!s.step(&obs).unwrap().switched);
        }
    }

    #[test]
    fn transcript_json_shape() {
        let step = RelayStep {
            t: 4,
            goal_id: 9,
            distance: 0.5,
            switched: false,
        };
        assert_eq!(
            serde_json::to_string(&step).unwrap(),
            r#"{"t":4,"goal_id":9,"distance":0.5,"switched":false}"#
        );
    }
}
