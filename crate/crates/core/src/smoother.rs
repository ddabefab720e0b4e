//! Nadaraya-Watson kernel regression over a 1-D curve.
//!
//! Sample `j` of a curve of length `L` sits at `x_j = j / (L - 1)` on the unit
//! interval, so the bandwidth is a fraction of the curve length rather than a
//! frame count. The estimate at `x_i` is
//!
//! ```text
//! y_i = sum_j w_ij v_j / sum_j w_ij,   w_ij = exp(-(x_i - x_j)^2 / (2 h^2))
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BANDWIDTH: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `exp(-u^2 / 2)` with `u = (x_i - x_j) / h`.
    #[default]
    GaussianRbf,
}

impl Kernel {
    fn weight(self, u: f64) -> f64 {
        match self {
            Kernel::GaussianRbf => (-0.5 * u * u).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub bandwidth: f64,
    #[serde(default)]
    pub kernel: Kernel,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            bandwidth: DEFAULT_BANDWIDTH,
            kernel: Kernel::GaussianRbf,
        }
    }
}

impl SmootherConfig {
    pub fn with_bandwidth(bandwidth: f64) -> Self {
        Self {
            bandwidth,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SmoothError> {
        if self.bandwidth.is_finite() && self.bandwidth > 0.0 {
            Ok(())
        } else {
            Err(SmoothError::Bandwidth(self.bandwidth))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmoothError {
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("cannot smooth an empty curve")]
    Empty,
}

/// Smooths `values` with the configured kernel. Output has the same length
/// and lies within `[min(values), max(values)]`.
pub fn smooth_curve(values: &[f64], config: &SmootherConfig) -> Result<Vec<f64>, SmoothError> {
    config.validate()?;
    if values.is_empty() {
        return Err(SmoothError::Empty);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SmoothError::NonFinite(i));
    }
    Ok(smooth_unchecked(values, config))
}

/// Weights depend only on the lag `|i - j|`, so one table of `L` kernel
/// evaluations covers the whole `L x L` weight matrix.
pub(crate) fn smooth_unchecked(values: &[f64], config: &SmootherConfig) -> Vec<f64> {
    let len = values.len();
    if len == 1 {
        return values.to_vec();
    }
    let span = (len - 1) as f64;
    let lag_weight: Vec<f64> = (0..len)
        .map(|lag| config.kernel.weight(lag as f64 / span / config.bandwidth))
        .collect();

    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    (0..len)
        .map(|i| {
            let mut num = 0.0;
            let mut den = 0.0;
            // left of i (including i), lags i..=0
            for (v, w) in values[..=i].iter().zip(lag_weight[..=i].iter().rev()) {
                num += w * v;
                den += w;
            }
            for (v, w) in values[i + 1..].iter().zip(&lag_weight[1..]) {
                num += w * v;
                den += w;
            }
            // a convex combination; clamp away last-ulp rounding drift
            (num / den).clamp(lo, hi)
        })
        .collect()
}
