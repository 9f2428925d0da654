//! Predictive performance: rank-based AUC, F1-maximizing threshold, and
//! sparsity counts.

use ndarray::ArrayView1;

use crate::error::{Error, Result};

pub const DEFAULT_SELECTION_TOL: f64 = 1e-6;

/// Scores paired with ±1 labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub scores: Vec<f64>,
    pub labels: Vec<f64>,
}

impl PredictionSet {
    pub fn new(scores: Vec<f64>, labels: Vec<f64>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(row) = labels.iter().position(|&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidLabel {
                row,
                value: labels[row].to_string(),
            });
        }
        Ok(Self { scores, labels })
    }

    fn class_counts(&self) -> Result<(usize, usize)> {
        let pos = self.labels.iter().filter(|&&l| l > 0.0).count();
        let neg = self.labels.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(Error::InvalidArgument(
                "both classes must be present".into(),
            ));
        }
        Ok((pos, neg))
    }

    fn sorted_ascending(&self) -> Vec<(f64, bool)> {
        let mut v: Vec<(f64, bool)> = self
            .scores
            .iter()
            .zip(&self.labels)
            .map(|(&s, &l)| (s, l > 0.0))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }
}

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Computed from midranks.
pub fn auc(p: &PredictionSet) -> Result<f64> {
    let (n_pos, n_neg) = p.class_counts()?;
    let sorted = p.sorted_ascending();
    // Twice the positive rank sum keeps midranks integral.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        // 1-based ranks i+1..=j share midrank (i+1+j)/2.
        let pos_in_block = sorted[i..j].iter().filter(|e| e.1).count() as u128;
        twice_rank_sum += pos_in_block * (i + 1 + j) as u128;
        i = j;
    }
    let np = n_pos as u128;
    // 2U = 2R − n_pos(n_pos + 1)
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok((twice_u as f64 / 2.0) / (n_pos as f64 * n_neg as f64))
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Candidate thresholds in ascending order: −∞, midpoints between
/// consecutive distinct scores, +∞.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = scores.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    let mut out = Vec::with_capacity(s.len() + 1);
    out.push(f64::NEG_INFINITY);
    out.extend(s.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(f64::INFINITY);
    out
}

/// Threshold maximizing F1 when scores `≥ threshold` are predicted
/// positive. Ties go to the smallest threshold.
pub fn best_f_threshold(p: &PredictionSet) -> Result<(f64, f64)> {
    let (n_pos, _) = p.class_counts()?;
    let sorted = p.sorted_ascending();
    let thresholds = candidate_thresholds(&p.scores);
    let total_neg = sorted.len() - n_pos;
    // Walk thresholds upward; everything below the threshold is predicted
    // negative.
    let (mut below_pos, mut below_neg) = (0usize, 0usize);
    let mut idx = 0;
    let mut best = (f64::NEG_INFINITY, -1.0);
    for &t in &thresholds {
        while idx < sorted.len() && sorted[idx].0 < t {
            if sorted[idx].1 {
                below_pos += 1;
            } else {
                below_neg += 1;
            }
            idx += 1;
        }
        let tp = n_pos - below_pos;
        let fp = total_neg - below_neg;
        let score = f1(tp, fp, below_pos);
        if score > best.1 {
            best = (t, score);
        }
    }
    Ok(best)
}

/// Number of `|θ_i| > tol` and its fraction of all features.
pub fn selected_count(theta: ArrayView1<f64>, tol: f64) -> (usize, f64) {
    let n = theta.len();
    let count = theta.iter().filter(|t| t.abs() > tol).count();
    let frac = if n == 0 { 0.0 } else { count as f64 / n as f64 };
    (count, frac)
}
