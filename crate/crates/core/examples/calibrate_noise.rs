//! Finds the largest noise level at which the decomposer still recovers the
//! fixture suite's boundaries within 3 frames at F1 >= 0.9 on every config.
//!
//!     cargo run --release -p uvd --example calibrate_noise > crates/core/fixtures/noise_calibration.json

use serde::Serialize;
use uvd::synth::bench::{run_baseline_comparison, BenchSettings, Method, Suite};
use uvd::DecomposerConfig;

const TOLERANCE: usize = 3;
const MIN_F1: f64 = 0.9;

#[derive(Serialize)]
struct Point {
    noise_sigma: f64,
    worst_config: String,
    worst_mean_f1: f64,
}

#[derive(Serialize)]
struct Calibration {
    tolerance: usize,
    min_f1: f64,
    seeds: Vec<u64>,
    noise_sigma: f64,
    sweep: Vec<Point>,
}

fn main() {
    let suite: Suite =
        serde_json::from_str(include_str!("../fixtures/suite.json")).expect("suite fixture parses");
    let settings = BenchSettings {
        decomposer: DecomposerConfig::default(),
        tolerance: TOLERANCE,
        uniform_window: 10,
        seeds: (0..10).collect(),
    };
    let mut sweep = Vec::new();
    let mut calibrated = 0.0;
    for step in 0..=40 {
        let sigma = step as f64 * 0.0025;
        let report =
            run_baseline_comparison(&suite.with_noise(sigma), &settings).expect("suite is valid");
        let worst = report
            .means
            .iter()
            .filter(|m| m.method == Method::Uvd)
            .min_by(|a, b| a.f1.total_cmp(&b.f1))
            .expect("suite is non-empty");
        eprintln!(
            "sigma {sigma:.4}: worst {} {:.3}",
            worst.config_id, worst.f1
        );
        let ok = worst.f1 >= MIN_F1;
        sweep.push(Point {
            noise_sigma: sigma,
            worst_config: worst.config_id.clone(),
            worst_mean_f1: worst.f1,
        });
        if !ok {
            break;
        }
        calibrated = sigma;
    }
    let out = Calibration {
        tolerance: TOLERANCE,
        min_f1: MIN_F1,
        seeds: settings.seeds,
        noise_sigma: calibrated,
        sweep,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializable")
    );
}
