//! Embedding trajectories: a `T x K` matrix of per-frame embeddings.
//!
//! Values are stored in their native element width (`f32` for anything that
//! came from an encoder or a `UVDT` file) and all distance arithmetic is done
//! in `f64`.

use std::fmt;

use thiserror::Error;

/// Scalar type a trajectory can store. Arithmetic always widens to `f64`.
pub trait Element: Copy + Send + Sync + fmt::Debug + PartialEq + Into<f64> + 'static {
    fn from_f64(v: f64) -> Self;

    fn to_f64(self) -> f64 {
        self.into()
    }
}

impl Element for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Element for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// 0-based timestep within a trajectory.
pub type FrameIndex = usize;

/// A single invariant violation found by [`validate_rows`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    TooShort {
        frames: usize,
    },
    EmptyWidth,
    Ragged {
        row: usize,
        width: usize,
        expected: usize,
    },
    NonFinite {
        row: usize,
        col: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooShort { frames } => {
                write!(f, "too short: {frames} frame(s), need at least 2")
            }
            Violation::EmptyWidth => write!(f, "embedding width must be at least 1"),
            Violation::Ragged {
                row,
                width,
                expected,
            } => {
                write!(f, "ragged row {row}: width {width}, expected {expected}")
            }
            Violation::NonFinite { row, col } => write!(f, "non-finite at ({row},{col})"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("invalid trajectory: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("data length {len} does not match shape {frames}x{dim}")]
    ShapeMismatch {
        len: usize,
        frames: usize,
        dim: usize,
    },
    #[error("frame index {index} out of range for trajectory of {frames} frames")]
    FrameOutOfRange { index: usize, frames: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Reports every invariant violation of a candidate row set.
///
/// Returns an empty list exactly when the rows form a valid trajectory:
/// at least two rows, a common width of at least one, all values finite.
pub fn validate_rows<S: Element, R: AsRef<[S]>>(rows: &[R]) -> Vec<Violation> {
    let mut out = Vec::new();
    if rows.len() < 2 {
        out.push(Violation::TooShort { frames: rows.len() });
    }
    let Some(first) = rows.first() else {
        return out;
    };
    let expected = first.as_ref().len();
    if expected == 0 {
        out.push(Violation::EmptyWidth);
    }
    for (r, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != expected {
            out.push(Violation::Ragged {
                row: r,
                width: row.len(),
                expected,
            });
        }
        for (c, v) in row.iter().enumerate() {
            if !v.to_f64().is_finite() {
                out.push(Violation::NonFinite { row: r, col: c });
            }
        }
    }
    out
}

/// Ordered sequence of `K`-dimensional frame embeddings, `T >= 2`.
///
/// Immutable once constructed; every constructor validates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTrajectory<S: Element = f32> {
    data: Vec<S>,
    frames: usize,
    dim: usize,
    meta: Option<String>,
}

impl<S: Element> EmbeddingTrajectory<S> {
    /// Builds a trajectory from a row-major buffer of `frames * dim` values.
    pub fn from_flat(data: Vec<S>, frames: usize, dim: usize) -> Result<Self, TrajectoryError> {
        if frames.checked_mul(dim) != Some(data.len()) {
            return Err(TrajectoryError::ShapeMismatch {
                len: data.len(),
                frames,
                dim,
            });
        }
        let mut violations = Vec::new();
        if frames < 2 {
            violations.push(Violation::TooShort { frames });
        }
        if dim == 0 {
            violations.push(Violation::EmptyWidth);
        }
        // data is empty when dim is 0, so the chunk width only needs to be nonzero
        for (row, values) in data.chunks(dim.max(1)).enumerate() {
            for (col, v) in values.iter().enumerate() {
                if !v.to_f64().is_finite() {
                    violations.push(Violation::NonFinite { row, col });
                }
            }
        }
        if !violations.is_empty() {
            return Err(TrajectoryError::Invalid(violations));
        }
        Ok(Self {
            data,
            frames,
            dim,
            meta: None,
        })
    }

    pub fn from_rows<R: AsRef<[S]>>(rows: &[R]) -> Result<Self, TrajectoryError> {
        let violations = validate_rows(rows);
        if !violations.is_empty() {
            return Err(TrajectoryError::Invalid(violations));
        }
        let dim = rows[0].as_ref().len();
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Ok(Self {
            data,
            frames: rows.len(),
            dim,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: impl Into<String>) -> Self {
        self.meta = Some(meta.into());
        self
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.frames
    }

    /// Always false: a valid trajectory has at least two frames.
    pub fn is_empty(&self) -> bool {
        self.frames == 0
    }

    /// Embedding width `K`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn meta(&self) -> Option<&str> {
        self.meta.as_deref()
    }

    pub fn as_flat(&self) -> &[S] {
        &self.data
    }

    pub fn frame(&self, index: FrameIndex) -> &[S] {
        &self.data[index * self.dim..(index + 1) * self.dim]
    }

    pub fn checked_frame(&self, index: FrameIndex) -> Result<&[S], TrajectoryError> {
        if index >= self.frames {
            return Err(TrajectoryError::FrameOutOfRange {
                index,
                frames: self.frames,
            });
        }
        Ok(self.frame(index))
    }

    pub fn frame_f64(&self, index: FrameIndex) -> Vec<f64> {
        self.frame(index).iter().map(|v| v.to_f64()).collect()
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[S]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// L2 distance between two frames, accumulated in `f64`.
    pub fn distance(&self, a: FrameIndex, b: FrameIndex) -> f64 {
        l2_distance(self.frame(a), self.frame(b))
    }

    /// Elementwise map into another element type, e.g. scaling or widening.
    pub fn map<T: Element>(
        &self,
        f: impl Fn(f64) -> f64,
    ) -> Result<EmbeddingTrajectory<T>, TrajectoryError> {
        let data = self
            .data
            .iter()
            .map(|v| T::from_f64(f(v.to_f64())))
            .collect();
        let mut out = EmbeddingTrajectory::from_flat(data, self.frames, self.dim)?;
        out.meta.clone_from(&self.meta);
        Ok(out)
    }

    /// Frames `0..=last` as a new trajectory. `last` must be at least 1.
    pub fn prefix(&self, last: FrameIndex) -> Result<Self, TrajectoryError> {
        if last >= self.frames {
            return Err(TrajectoryError::FrameOutOfRange {
                index: last,
                frames: self.frames,
            });
        }
        Self::from_flat(
            self.data[..(last + 1) * self.dim].to_vec(),
            last + 1,
            self.dim,
        )
    }
}

/// Squared L2 distance accumulated in `f64`, summing in index order.
pub fn squared_distance<A: Element, B: Element>(a: &[A], b: &[B]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x.to_f64() - y.to_f64();
            d * d
        })
        .sum()
}

pub fn l2_distance<A: Element, B: Element>(a: &[A], b: &[B]) -> f64 {
    squared_distance(a, b).sqrt()
}
