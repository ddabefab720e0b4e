//! Prints the calibrated chain-world experiment as JSON.
//!
//!     cargo run -p uvd --example chain_fixture > crates/core/fixtures/chain_env.json

use uvd::synth::chain::{ChainEnvConfig, ChainExperiment, LearnerConfig};
use uvd::{DecomposerConfig, RewardWeights};

fn main() {
    let experiment = ChainExperiment {
        env: ChainEnvConfig {
            grid_n: 10,
            waypoints: vec![(9, 1), (0, 3), (9, 5), (0, 7)],
            flag_scale: 1.5,
            horizon: 120,
            start: (0, 0),
            seed: 0,
        },
        learner: LearnerConfig {
            episodes: 8000,
            learning_rate: 0.5,
            discount: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            decomposer: DecomposerConfig::new(3, 0.02),
            weights: RewardWeights::default(),
        },
        seeds: (0..10).collect(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&experiment).expect("serializable")
    );
}
