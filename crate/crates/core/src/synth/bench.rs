//! Boundary recovery of the decomposer against heuristic labelings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::generator::{generate_synthetic, SynthConfig, SynthError};
use super::metrics::{boundary_metrics, BoundaryMetrics};
use crate::decomposer::{decompose, DecomposeError, DecomposerConfig};
use crate::labeler::{random_subgoals, uniform_labels, LabelError};
use crate::trajectory::{EmbeddingTrajectory, FrameIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Uvd,
    Random,
    Uniform,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Uvd, Method::Random, Method::Uniform];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Uvd => "uvd",
            Method::Random => "random",
            Method::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// A named generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub id: String,
    pub config: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub entries: Vec<SuiteEntry>,
}

impl Suite {
    pub fn with_noise(&self, sigma: f64) -> Suite {
        let entries = self
            .entries
            .iter()
            .map(|e| SuiteEntry {
                id: e.id.clone(),
                config: e.config.clone().with_noise(sigma),
            })
            .collect();
        Suite { entries }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub decomposer: DecomposerConfig,
    pub tolerance: usize,
    pub uniform_window: usize,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config `{id}`: {source}")]
    Synth { id: String, source: SynthError },
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    pub config_id: String,
    pub seed: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanScore {
    pub config_id: String,
    pub method: Method,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub tolerance: usize,
    pub uniform_window: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<BenchRow>,
    pub means: Vec<MeanScore>,
}

impl BenchReport {
    pub fn mean(&self, config_id: &str, method: Method) -> Option<&MeanScore> {
        self.means
            .iter()
            .find(|m| m.config_id == config_id && m.method == method)
    }
}

/// Seed for one `(config, run)` pair, shared by the generator and the
/// randomized baselines.
pub fn run_seed(config_seed: u64, run: u64) -> u64 {
    config_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ run
}

/// Distinct sorted targets of the uniform labeling.
pub fn uniform_boundaries(
    frames: usize,
    window: usize,
    seed: u64,
) -> Result<Vec<FrameIndex>, LabelError> {
    let mut b = uniform_labels(frames, window, seed)?;
    b.sort_unstable();
    b.dedup();
    Ok(b)
}

pub fn predict(
    method: Method,
    traj: &EmbeddingTrajectory,
    settings: &BenchSettings,
    seed: u64,
) -> Result<Vec<FrameIndex>, BenchError> {
    Ok(match method {
        Method::Uvd => decompose(traj, &settings.decomposer)?.subgoals().to_vec(),
        Method::Random => random_subgoals(traj.len(), seed)?.subgoals().to_vec(),
        Method::Uniform => uniform_boundaries(traj.len(), settings.uniform_window, seed)?,
    })
}

pub fn run_baseline_comparison(
    suite: &Suite,
    settings: &BenchSettings,
) -> Result<BenchReport, BenchError> {
    settings.decomposer.validate()?;
    let mut rows = Vec::new();
    let mut means = Vec::new();
    for entry in &suite.entries {
        let mut sums = [[0.0; 3]; 3];
        for &run in &settings.seeds {
            let seed = run_seed(entry.config.seed, run);
            let cfg = entry.config.clone().with_seed(seed);
            let (traj, truth) = generate_synthetic(&cfg).map_err(|source| BenchError::Synth {
                id: entry.id.clone(),
                source,
            })?;
            for (k, method) in Method::ALL.into_iter().enumerate() {
                let pred = predict(method, &traj, settings, seed)?;
                let BoundaryMetrics {
                    precision,
                    recall,
                    f1,
                } = boundary_metrics(&pred, &truth, settings.tolerance);
                sums[k][0] += precision;
                sums[k][1] += recall;
                sums[k][2] += f1;
                rows.push(BenchRow {
                    method,
                    config_id: entry.id.clone(),
                    seed: run,
                    precision,
                    recall,
                    f1,
                });
            }
        }
        let n = settings.seeds.len().max(1) as f64;
        for (k, method) in Method::ALL.into_iter().enumerate() {
            means.push(MeanScore {
                config_id: entry.id.clone(),
                method,
                precision: sums[k][0] / n,
                recall: sums[k][1] / n,
                f1: sums[k][2] / n,
            });
        }
    }
    Ok(BenchReport {
        tolerance: settings.tolerance,
        uniform_window: settings.uniform_window,
        seeds: settings.seeds.clone(),
        rows,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(seeds: u64) -> BenchSettings {
        BenchSettings {
            decomposer: DecomposerConfig::default(),
            tolerance: 2,
            uniform_window: 10,
            seeds: (0..seeds).collect(),
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>(), Ok(m));
        }
        assert_eq!(serde_json::to_string(&Method::Uvd).unwrap(), "\"uvd\"");
    }

    #[test]
    fn noiseless_four_segments() {
        let suite = Suite {
            entries: vec![SuiteEntry {
                id: "m4".into(),
                config: SynthConfig::equal_segments(4, 50, 16, 3),
            }],
        };
        let report = run_baseline_comparison(&suite, &settings(8)).unwrap();
        assert_eq!(report.rows.len(), 24);
        let uvd = report.mean("m4", Method::Uvd).unwrap().f1;
        assert_eq!(uvd, 1.0);
        assert!(report.mean("m4", Method::Random).unwrap().f1 < uvd);
        assert!(report.mean("m4", Method::Uniform).unwrap().f1 < uvd);
        assert_eq!(
            report,
            run_baseline_comparison(&suite, &settings(8)).unwrap()
        );
    }

    #[test]
    fn random_is_mostly_spurious_on_one_segment() {
        let suite = Suite {
            entries: vec![SuiteEntry {
                id: "m1".into(),
                config: SynthConfig::equal_segments(1, 120, 8, 5),
            }],
        };
        let report = run_baseline_comparison(&suite, &settings(50)).unwrap();
        for row in report.rows.iter().filter(|r| r.method == Method::Random) {
            assert!(row.precision <= 0.25, "{row:?}");
        }
        assert_eq!(report.mean("m1", Method::Uvd).unwrap().f1, 1.0);
    }
}
