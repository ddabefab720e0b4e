use proptest::prelude::*;
use uvd::reward::{normalized_distance, simple_reward, RewardError};
use uvd::{
    final_goal_reward_trace, shaped_reward_trace, EmbeddingTrajectory, RewardWeights,
    SubgoalDecomposition,
};

fn walk(steps: &[[f64; 3]]) -> EmbeddingTrajectory<f64> {
    let mut x = [0.0; 3];
    let mut rows = vec![x];
    for s in steps {
        for k in 0..3 {
            x[k] += s[k];
        }
        rows.push(x);
    }
    EmbeddingTrajectory::from_rows(&rows).unwrap()
}

fn steps(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 4..max)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn single_goal_sum_telescopes(s in steps(60)) {
        let traj = walk(&s);
        let w = RewardWeights { alpha: 5.0, beta: 0.0, gamma: 0.0, epsilon: 0.2 };
        let decomp = SubgoalDecomposition::final_only(traj.len());
        let trace = shaped_reward_trace(&traj, &decomp, w).unwrap();
        let last = traj.len() - 1;
        let unclipped = (1..traj.len()).all(|t| {
            let a = normalized_distance(&traj, &decomp, t - 1, 0).unwrap();
            let b = normalized_distance(&traj, &decomp, t, 0).unwrap();
            (w.alpha * (a - b)).abs() < w.alpha
        });
        prop_assume!(unclipped);
        let total: f64 = trace.rewards.iter().sum();
        let expected = w.alpha
            * (normalized_distance(&traj, &decomp, 0, 0).unwrap() - normalized_distance(&traj, &decomp, last, 0).unwrap());
        prop_assert!(close(total, expected, 1e-9), "{total} vs {expected}");
    }

    #[test]
    fn within_segment_spans_telescope(s in steps(40), seed in 0usize..1000) {
        let traj = walk(&s);
        let frames = traj.len();
        let mut picks: Vec<usize> = (1..frames - 1).filter(|i| (i * 7 + seed) % 5 == 0).collect();
        picks.push(frames - 1);
        let decomp = SubgoalDecomposition::new(picks, frames).unwrap();
        let w = RewardWeights { alpha: 5.0, beta: 0.0, gamma: 0.0, epsilon: 0.2 };
        let trace = shaped_reward_trace(&traj, &decomp, w);
        prop_assume!(!matches!(trace, Err(RewardError::Degenerate { .. })));
        let trace = trace.unwrap();
        let ordinal_of = |g: usize| decomp.subgoals().iter().position(|&x| x == g).unwrap();
        let mut start = 0;
        while start < trace.rewards.len() {
            let goal = trace.goal_at[start];
            let mut end = start;
            while end + 1 < trace.rewards.len() && trace.goal_at[end + 1] == goal {
                end += 1;
            }
            let i = ordinal_of(goal);
            let nd = |t: usize| normalized_distance(&traj, &decomp, t, i).unwrap();
            // the identity holds only while clipping is inactive
            if (start..=end).all(|k| (nd(k) - nd(k + 1)).abs() < 1.0) {
                let sum: f64 = trace.rewards[start..=end].iter().sum();
                let expected = w.alpha * (nd(start) - nd(end + 1));
                prop_assert!((sum - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{sum} vs {expected}");
            }
            start = end + 1;
        }
    }

    #[test]
    fn scaling_embeddings_leaves_shaped_rewards_unchanged(s in steps(50), ci in 0usize..3) {
        let c = [1e-3, 1.0, 1e3][ci];
        let traj = walk(&s);
        let scaled: EmbeddingTrajectory<f64> = traj.map(|v| v * c).unwrap();
        let frames = traj.len();
        let decomp = SubgoalDecomposition::new(vec![frames / 2, frames - 1], frames).unwrap();
        let a = shaped_reward_trace(&traj, &decomp, RewardWeights::default());
        prop_assume!(!matches!(a, Err(RewardError::Degenerate { .. })));
        let a = a.unwrap();
        let b = shaped_reward_trace(&scaled, &decomp, RewardWeights::default()).unwrap();
        prop_assert_eq!(&a.switches, &b.switches);
        for (x, y) in a.rewards.iter().zip(&b.rewards) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
        for t in 1..frames {
            let r = simple_reward(&traj, frames - 1, t).unwrap();
            let rc = simple_reward(&scaled, frames - 1, t).unwrap();
            prop_assert!(close(rc, c * r, 1e-9) || (r == 0.0 && rc == 0.0));
        }
    }

    #[test]
    fn rewards_bounded_and_switches_ordered(s in steps(50), salt in any::<u64>()) {
        let traj = walk(&s);
        let frames = traj.len();
        let decomp = {
            let mut v: Vec<usize> = (1..frames - 1).filter(|i| (*i as u64).wrapping_mul(salt) % 7 == 0).collect();
            v.push(frames - 1);
            SubgoalDecomposition::new(v, frames).unwrap()
        };
        let w = RewardWeights::default();
        let trace = shaped_reward_trace(&traj, &decomp, w);
        prop_assume!(!matches!(trace, Err(RewardError::Degenerate { .. })));
        let trace = trace.unwrap();
        for &r in &trace.rewards {
            prop_assert!(r >= -w.alpha && r <= w.alpha + w.beta + w.gamma, "{r}");
        }
        // ordinals never decrease and never skip
        let ordinals: Vec<usize> =
            trace.goal_at.iter().map(|g| decomp.subgoals().iter().position(|x| x == g).unwrap()).collect();
        prop_assert_eq!(ordinals[0], 0);
        for w in ordinals.windows(2) {
            prop_assert!(w[1] == w[0] || w[1] == w[0] + 1);
        }
        prop_assert!(trace.switches.len() <= decomp.len());
        prop_assert_eq!(&trace, &shaped_reward_trace(&traj, &decomp, w).unwrap());
    }

    #[test]
    fn final_goal_equals_single_goal_without_beta(s in steps(50)) {
        let traj = walk(&s);
        let w = RewardWeights::default();
        let a = final_goal_reward_trace(&traj, w).unwrap();
        let single = SubgoalDecomposition::final_only(traj.len());
        let b = shaped_reward_trace(&traj, &single, RewardWeights { beta: 0.0, ..w }).unwrap();
        prop_assert_eq!(&a.switches, &b.switches);
        for (x, y) in a.rewards.iter().zip(&b.rewards) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn own_demo_switches_every_subgoal_and_ends_with_gamma() {
    let s: Vec<[f64; 3]> = (0..60)
        .map(|i| {
            if (i / 15) % 2 == 0 {
                [1.0, 0.1, 0.0]
            } else {
                [-1.0, 0.1, 0.0]
            }
        })
        .collect();
    let traj = walk(&s);
    let decomp = SubgoalDecomposition::new(vec![15, 30, 45, 60], 61).unwrap();
    let w = RewardWeights::default();
    let trace = shaped_reward_trace(&traj, &decomp, w).unwrap();
    assert_eq!(trace.switches.len(), 4);
    let last = *trace.rewards.last().unwrap();
    assert!(last >= w.gamma, "{last}");
}
