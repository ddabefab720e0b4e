use serde::{Deserialize, Serialize};

use crate::trajectory::FrameIndex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Size of a maximum one-to-one matching between `pred` and `truth` where a
/// pair matches if the frames differ by at most `tolerance`.
///
/// Both inputs are sorted and deduplicated first; with interval-shaped
/// compatibility a greedy two-pointer sweep is optimal.
pub fn matched_pairs(pred: &[FrameIndex], truth: &[FrameIndex], tolerance: usize) -> usize {
    let sorted = |v: &[FrameIndex]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let (p, t) = (sorted(pred), sorted(truth));
    let (mut i, mut j, mut hits) = (0, 0, 0);
    while i < p.len() && j < t.len() {
        if p[i].abs_diff(t[j]) <= tolerance {
            hits += 1;
            i += 1;
            j += 1;
        } else if p[i] < t[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    hits
}

/// Precision and recall under tolerant one-to-one matching.
///
/// An empty prediction has precision 0 unless the truth is empty too, in
/// which case every score is 1.
pub fn boundary_metrics(
    pred: &[FrameIndex],
    truth: &[FrameIndex],
    tolerance: usize,
) -> BoundaryMetrics {
    let hits = matched_pairs(pred, truth, tolerance) as f64;
    let count = |v: &[FrameIndex]| {
        let mut v = v.to_vec();
        v.sort_unstable();
        v.dedup();
        v.len() as f64
    };
    let (np, nt) = (count(pred), count(truth));
    if np == 0.0 && nt == 0.0 {
        return BoundaryMetrics {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    let precision = if np == 0.0 { 0.0 } else { hits / np };
    let recall = if nt == 0.0 { 0.0 } else { hits / nt };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    BoundaryMetrics {
        precision,
        recall,
        f1,
    }
}
