//! Hyperparameter sweep for the chain-world learner.
//!
//! Writes one CSV row per (setting, mode) to stdout. The chosen setting is
//! stored in `fixtures/chain_env.json`.
//!
//!     cargo run --release -p uvd --example sweep_chain > crates/core/fixtures/chain_sweep.csv

use uvd::synth::chain::{run_chain_experiment, ChainEnvConfig, LearnerConfig, RewardMode};
use uvd::{DecomposerConfig, RewardWeights};

fn main() {
    let env = ChainEnvConfig {
        grid_n: 10,
        waypoints: vec![(9, 1), (0, 3), (9, 5), (0, 7)],
        flag_scale: 1.5,
        horizon: 120,
        start: (0, 0),
        seed: 0,
    };
    let seeds: Vec<u64> = (0..10).collect();
    println!(
        "episodes,learning_rate,discount,epsilon_end,bandwidth,mode,success_rate,completion_rate"
    );
    for episodes in [4000, 8000, 16000, 32000] {
        for discount in [0.95, 0.99] {
            for epsilon_end in [0.05, 0.2] {
                for bandwidth in [0.02, 0.04] {
                    let learner = LearnerConfig {
                        episodes,
                        learning_rate: 0.5,
                        discount,
                        epsilon_start: 1.0,
                        epsilon_end,
                        decomposer: DecomposerConfig::new(3, bandwidth),
                        weights: RewardWeights::default(),
                    };
                    for mode in [RewardMode::Uvd, RewardMode::FinalGoal] {
                        let out = run_chain_experiment(&env, mode, &learner, &seeds)
                            .expect("valid sweep point");
                        println!(
                            "{episodes},0.5,{discount},{epsilon_end},{bandwidth},{mode},{},{}",
                            out.success_rate, out.completion_rate
                        );
                    }
                }
            }
        }
    }
}
