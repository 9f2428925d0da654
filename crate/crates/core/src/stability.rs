//! Bootstrap resampling, feature ranking, subset consistency, and weight
//! signal-to-noise.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::models::{fit, ModelSpec};
use crate::optimizer::OptimizerConfig;

pub const DEFAULT_SNR_THRESHOLD: f64 = 1.96;

/// Fitted weight vectors from repeated fits on bootstrap resamples.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    pub model_tag: String,
    /// One row per bootstrap, one column per feature.
    pub weights: Array2<f64>,
    pub seeds: Vec<u64>,
    /// Row indices drawn for each bootstrap.
    pub resamples: Vec<Vec<usize>>,
}

impl BootstrapEnsemble {
    /// An ensemble from precomputed weights (no resample record).
    pub fn from_weights(model_tag: impl Into<String>, weights: Array2<f64>) -> Self {
        let b = weights.nrows();
        Self {
            model_tag: model_tag.into(),
            weights,
            seeds: (0..b as u64).collect(),
            resamples: vec![Vec::new(); b],
        }
    }

    pub fn n_bootstraps(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    pub fn mean_weights(&self) -> Array1<f64> {
        self.weights
            .mean_axis(Axis(0))
            .unwrap_or_else(|| Array1::zeros(self.n_features()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub importance: Vec<f64>,
    /// Feature indices by descending importance, ties by ascending index.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetFamily {
    pub k: usize,
    /// Per bootstrap, the top-k feature indices in rank order.
    pub subsets: Vec<Vec<usize>>,
}

/// Seed used for bootstrap `b`.
pub fn bootstrap_seed(base_seed: u64, b: usize) -> u64 {
    base_seed.wrapping_add(b as u64)
}

/// `m` row indices drawn with replacement.
pub fn resample_indices(m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m).map(|_| rng.random_range(0..m)).collect()
}

pub fn run_bootstraps(
    d: &Dataset,
    spec: &ModelSpec,
    cfg: &OptimizerConfig,
    n_bootstraps: usize,
    base_seed: u64,
) -> Result<BootstrapEnsemble> {
    run_bootstraps_with(ExecMode::default(), d, spec, cfg, n_bootstraps, base_seed)
}

/// Fits `spec` on `n_bootstraps` resamples of `d`. Bootstrap `b` draws its
/// rows and initial parameters from seed `base_seed + b`, so results do not
/// depend on scheduling.
pub fn run_bootstraps_with(
    mode: ExecMode,
    d: &Dataset,
    spec: &ModelSpec,
    cfg: &OptimizerConfig,
    n_bootstraps: usize,
    base_seed: u64,
) -> Result<BootstrapEnsemble> {
    d.labels()?;
    if n_bootstraps < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 bootstraps, got {n_bootstraps}"
        )));
    }
    spec.validate(d.n_features())?;
    let m = d.n_samples();
    let fits = map_indexed(mode, n_bootstraps, |b| {
        let seed = bootstrap_seed(base_seed, b);
        let rows = resample_indices(m, seed);
        let sample = d.select_rows(&rows);
        fit(spec, &sample, cfg, seed).map(|r| (seed, rows, r.params.effective_theta()))
    });
    let n = d.n_features();
    let mut weights = Array2::zeros((n_bootstraps, n));
    let mut seeds = Vec::with_capacity(n_bootstraps);
    let mut resamples = Vec::with_capacity(n_bootstraps);
    for (b, res) in fits.into_iter().enumerate() {
        let (seed, rows, theta) = res.map_err(|e| Error::Bootstrap {
            index: b,
            source: Box::new(e),
        })?;
        weights.row_mut(b).assign(&theta);
        seeds.push(seed);
        resamples.push(rows);
    }
    Ok(BootstrapEnsemble {
        model_tag: spec.kind.tag().to_string(),
        weights,
        seeds,
        resamples,
    })
}

/// Indices sorted by descending score, ties by ascending index.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

fn check_std(n: usize, raw_std: ArrayView1<f64>) -> Result<()> {
    if raw_std.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} standard deviations for {n} features",
            raw_std.len()
        )));
    }
    Ok(())
}

/// Importance `|mean_b θ_bi| · raw_std_i` and the induced ranking.
pub fn feature_importance(e: &BootstrapEnsemble, raw_std: ArrayView1<f64>) -> Result<FeatureRanking> {
    check_std(e.n_features(), raw_std)?;
    let importance: Vec<f64> = e
        .mean_weights()
        .iter()
        .zip(raw_std.iter())
        .map(|(w, s)| w.abs() * s)
        .collect();
    let order = rank_descending(&importance);
    Ok(FeatureRanking { importance, order })
}

/// The top-`k` features of every bootstrap, each ranked by its own
/// `|θ_bi| · raw_std_i`.
pub fn top_k_subsets(e: &BootstrapEnsemble, raw_std: ArrayView1<f64>, k: usize) -> Result<SubsetFamily> {
    let n = e.n_features();
    check_std(n, raw_std)?;
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "subset size {k} must satisfy 1 ≤ k < {n}"
        )));
    }
    let subsets = e
        .weights
        .axis_iter(Axis(0))
        .map(|row| {
            let scores: Vec<f64> = row.iter().zip(raw_std.iter()).map(|(w, s)| w.abs() * s).collect();
            let mut order = rank_descending(&scores);
            order.truncate(k);
            order
        })
        .collect();
    Ok(SubsetFamily { k, subsets })
}

fn membership(s: &[usize], d: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; d];
    for &i in s {
        if i >= d {
            return Err(Error::InvalidArgument(format!("feature index {i} ≥ {d}")));
        }
        if std::mem::replace(&mut mask[i], true) {
            return Err(Error::InvalidArgument(format!("feature index {i} repeated")));
        }
    }
    Ok(mask)
}

fn check_subset_size(k: usize, d: usize) -> Result<()> {
    if k == 0 || k >= d {
        return Err(Error::InvalidArgument(format!(
            "subset size {k} must satisfy 0 < k < d = {d}"
        )));
    }
    Ok(())
}

/// Chance-corrected overlap `(r d − k²) / (k (d − k))` of two size-k subsets
/// of `d` features.
pub fn consistency_index(s_i: &[usize], s_j: &[usize], d: usize) -> Result<f64> {
    if s_i.len() != s_j.len() {
        return Err(Error::InvalidArgument(format!(
            "subset sizes differ: {} vs {}",
            s_i.len(),
            s_j.len()
        )));
    }
    let k = s_i.len();
    check_subset_size(k, d)?;
    let mask = membership(s_i, d)?;
    membership(s_j, d)?;
    let r = s_j.iter().filter(|&&i| mask[i]).count();
    Ok(ci_from_overlap(r, k, d))
}

fn ci_from_overlap(r: usize, k: usize, d: usize) -> f64 {
    let (r, k, d) = (r as f64, k as f64, d as f64);
    (r * d - k * k) / (k * (d - k))
}

/// Average consistency index over all unordered pairs of subsets.
pub fn mean_consistency(f: &SubsetFamily, d: usize) -> Result<f64> {
    let b = f.subsets.len();
    if b < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 subsets, got {b}")));
    }
    check_subset_size(f.k, d)?;
    let masks = f
        .subsets
        .iter()
        .map(|s| {
            if s.len() != f.k {
                return Err(Error::InvalidArgument(format!(
                    "subset of size {} in a family with k = {}",
                    s.len(),
                    f.k
                )));
            }
            membership(s, d)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for i in 0..b {
        for j in (i + 1)..b {
            let r = f.subsets[j].iter().filter(|&&x| masks[i][x]).count();
            total += ci_from_overlap(r, f.k, d);
        }
    }
    Ok(total / (b * (b - 1) / 2) as f64)
}

/// Per-feature mean weight over its sample standard deviation across
/// bootstraps. Zero spread gives ±∞ for a nonzero mean and 0 otherwise.
pub fn snr(e: &BootstrapEnsemble) -> Vec<f64> {
    let b = e.n_bootstraps();
    e.weights
        .axis_iter(Axis(1))
        .map(|col| {
            let mean = col.sum() / b as f64;
            let sd = if b > 1 {
                (col.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt()
            } else {
                0.0
            };
            if sd > 0.0 {
                mean / sd
            } else if mean != 0.0 {
                f64::INFINITY.copysign(mean)
            } else {
                0.0
            }
        })
        .collect()
}

/// How many of the `top` highest-ranked features have `|SNR| ≥ threshold`.
pub fn snr_above(e: &BootstrapEnsemble, ranking: &FeatureRanking, top: usize, threshold: f64) -> Result<usize> {
    if top > ranking.order.len() || ranking.order.len() != e.n_features() {
        return Err(Error::InvalidArgument(format!(
            "top = {top} with {} ranked features",
            ranking.order.len()
        )));
    }
    let s = snr(e);
    Ok(ranking.order[..top].iter().filter(|&&i| s[i].abs() >= threshold).count())
}
