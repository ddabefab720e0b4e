//! Synthetic trajectories with known segment boundaries.
//!
//! Each segment moves in a straight line, in equal increments, from the
//! previous anchor to its own anchor, so at zero noise the distance from any
//! in-segment frame to the segment end is strictly decreasing.
//!
//! Anchors form a zig-zag in a random 2-D plane of the embedding space:
//! consecutive anchors are `anchor_scale` apart and each segment nearly
//! reverses the direction of the previous one, drifting sideways by
//! [`TURN_DRIFT`] of the anchor spacing. Near-reversal turns make the distance
//! peak at a boundary symmetric, so smoothing does not shift it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labeler::seeded_rng;
use crate::trajectory::{EmbeddingTrajectory, FrameIndex};

/// Sideways drift per segment, as a fraction of the anchor spacing.
pub const TURN_DRIFT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(rename = "T")]
    pub frames: usize,
    #[serde(rename = "K")]
    pub dim: usize,
    /// Ground-truth segment ends, strictly increasing, last = `T - 1`.
    pub boundaries: Vec<FrameIndex>,
    pub noise_sigma: f64,
    pub anchor_scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("embedding width must be at least 2, got {0}")]
    Dim(usize),
    #[error("boundaries must be non-empty and end at T-1 = {0}")]
    LastBoundary(usize),
    #[error("boundary {index} leaves a segment shorter than 2 frames")]
    Gap { index: usize },
    #[error("noise_sigma must be finite and non-negative, got {0}")]
    Noise(f64),
    #[error("anchor_scale must be finite and positive, got {0}")]
    Scale(f64),
}

impl SynthConfig {
    /// `segments` segments of `length` frames each (the first one includes frame 0).
    pub fn equal_segments(segments: usize, length: usize, dim: usize, seed: u64) -> Self {
        let boundaries: Vec<usize> = (1..=segments).map(|j| j * length - 1).collect();
        Self {
            frames: segments * length,
            dim,
            boundaries,
            noise_sigma: 0.0,
            anchor_scale: 1.0,
            seed,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.dim < 2 {
            return Err(SynthError::Dim(self.dim));
        }
        if self.frames < 2 || self.boundaries.last() != Some(&(self.frames - 1)) {
            return Err(SynthError::LastBoundary(self.frames.saturating_sub(1)));
        }
        let mut prev = 0;
        for (index, &b) in self.boundaries.iter().enumerate() {
            if b < prev + 2 {
                return Err(SynthError::Gap { index });
            }
            prev = b;
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::Noise(self.noise_sigma));
        }
        if !(self.anchor_scale.is_finite() && self.anchor_scale > 0.0) {
            return Err(SynthError::Scale(self.anchor_scale));
        }
        Ok(())
    }

    pub fn segment_count(&self) -> usize {
        self.boundaries.len()
    }
}

/// Anchor `j` in plane coordinates.
fn anchor(j: usize, scale: f64) -> [f64; 2] {
    let drift = TURN_DRIFT * scale;
    let reach = (scale * scale - drift * drift).sqrt();
    [
        if j.is_multiple_of(2) { 0.0 } else { reach },
        j as f64 * drift,
    ]
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Returns the trajectory and its ground-truth boundaries.
pub fn generate_synthetic(
    cfg: &SynthConfig,
) -> Result<(EmbeddingTrajectory, Vec<FrameIndex>), SynthError> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed);
    let dim = cfg.dim;

    // orthonormal plane basis
    let u = random_unit(&mut rng, dim);
    let v = loop {
        let mut w = random_unit(&mut rng, dim);
        let dot: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(&u).for_each(|(a, b)| *a -= dot * b);
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            break w.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let origin: Vec<f64> = (0..dim)
        .map(|_| cfg.anchor_scale * rng.sample::<f64, _>(StandardNormal))
        .collect();

    let mut plane = vec![[0.0; 2]; cfg.frames];
    plane[0] = anchor(0, cfg.anchor_scale);
    let mut start = 0;
    for (j, &end) in cfg.boundaries.iter().enumerate() {
        let from = anchor(j, cfg.anchor_scale);
        let to = anchor(j + 1, cfg.anchor_scale);
        let steps = (end - start) as f64;
        for (s, p) in plane.iter_mut().enumerate().take(end + 1).skip(start + 1) {
            let lambda = (s - start) as f64 / steps;
            *p = [
                from[0] + lambda * (to[0] - from[0]),
                from[1] + lambda * (to[1] - from[1]),
            ];
        }
        start = end;
    }

    let mut data = Vec::with_capacity(cfg.frames * dim);
    for p in &plane {
        for k in 0..dim {
            let mut x = origin[k] + p[0] * u[k] + p[1] * v[k];
            if cfg.noise_sigma > 0.0 {
                x += cfg.noise_sigma * rng.sample::<f64, _>(StandardNormal);
            }
            data.push(x as f32);
        }
    }
    let traj = EmbeddingTrajectory::from_flat(data, cfg.frames, dim)
        .expect("generated values are finite")
        .with_meta(format!("synth seed={}", cfg.seed));
    Ok((traj, cfg.boundaries.clone()))
}
