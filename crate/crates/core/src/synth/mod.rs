//! Synthetic benchmarks with known ground truth.

pub mod bench;
pub mod chain;
pub mod generator;
pub mod metrics;

pub use bench::{
    run_baseline_comparison, BenchReport, BenchRow, BenchSettings, Method, Suite, SuiteEntry,
};
pub use chain::{
    chain_env_step, demo_trajectory, run_chain_experiment, scripted_demo, Action, ChainEnv,
    ChainEnvConfig, ChainExperiment, ChainOutcome, ChainState, LearnerConfig, RewardMode,
};
pub use generator::{generate_synthetic, SynthConfig, SynthError};
pub use metrics::{boundary_metrics, BoundaryMetrics};
