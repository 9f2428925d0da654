//! Correlated cohorts with planted feature groups.
//!
//! Every group shares one standard-normal latent factor; each feature in the
//! group is that factor plus independent noise, so within-group correlation
//! is `1 / (1 + noise²)`. The first `n_informative_groups` latents drive the
//! label.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use ndarray::{Array1, Array2};

use crate::data::{Dataset, Edge, FeatureGraph};
use crate::error::{Error, Result};
use crate::objectives::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_groups: usize,
    pub group_size: usize,
    pub within_group_noise: f64,
    pub n_informative_groups: usize,
    pub true_weight_scale: f64,
    pub label_noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_samples: 200,
            n_groups: 10,
            group_size: 10,
            within_group_noise: 0.3,
            n_informative_groups: 3,
            true_weight_scale: 1.0,
            label_noise: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn n_features(&self) -> usize {
        self.n_groups * self.group_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_groups == 0 || self.group_size == 0 {
            return Err(Error::InvalidArgument("sample, group and group-size counts must be positive".into()));
        }
        if self.n_informative_groups > self.n_groups {
            return Err(Error::InvalidArgument(format!(
                "{} informative groups exceeds {} groups",
                self.n_informative_groups, self.n_groups
            )));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::InvalidArgument(format!(
                "label_noise = {} must lie in [0, 0.5)",
                self.label_noise
            )));
        }
        if !(self.within_group_noise >= 0.0) || !self.true_weight_scale.is_finite() {
            return Err(Error::InvalidArgument("noise must be ≥ 0 and weight scale finite".into()));
        }
        Ok(())
    }

    /// Column names `gGG_fFF`, which sort in column order.
    pub fn feature_names(&self) -> Vec<String> {
        (0..self.n_groups)
            .flat_map(|g| (0..self.group_size).map(move |j| format!("g{g:02}_f{j:02}")))
            .collect()
    }

    /// Same spec with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Draws a labeled cohort.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let (m, g, gs) = (spec.n_samples, spec.n_groups, spec.group_size);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Array2::<f64>::zeros((m, g * gs));
    let mut y = Array1::<f64>::zeros(m);
    let mut latent = vec![0.0; g];
    for i in 0..m {
        for z in latent.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        for (grp, &z) in latent.iter().enumerate() {
            for j in 0..gs {
                let eps: f64 = rng.sample(StandardNormal);
                x[[i, grp * gs + j]] = z + spec.within_group_noise * eps;
            }
        }
        let logit: f64 = spec.true_weight_scale * latent[..spec.n_informative_groups].iter().sum::<f64>();
        let mut label = if rng.random::<f64>() < sigmoid(logit) { 1.0 } else { -1.0 };
        if rng.random::<f64>() < spec.label_noise {
            label = -label;
        }
        y[i] = label;
    }
    Dataset::new(spec.feature_names(), x, Some(y))
}

/// Draws a cohort and discards its labels.
pub fn generate_unlabeled(spec: &SyntheticSpec) -> Result<Dataset> {
    Ok(generate(spec)?.into_unlabeled())
}

/// Unit-weight cliques within each planted group.
pub fn make_group_graph(spec: &SyntheticSpec) -> FeatureGraph {
    let names = spec.feature_names();
    let gs = spec.group_size;
    let mut edges = Vec::new();
    for g in 0..spec.n_groups {
        for a in 0..gs {
            for b in (a + 1)..gs {
                edges.push(Edge {
                    a: names[g * gs + a].clone(),
                    b: names[g * gs + b].clone(),
                    weight: 1.0,
                });
            }
        }
    }
    FeatureGraph::new(edges).expect("clique edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_laplacian;
    use ndarray::{ArrayView1, Axis};

    fn corr(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        let (ma, mb) = (a.mean().unwrap(), b.mean().unwrap());
        let cov: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn noiseless_groups_are_identical() {
        let spec = SyntheticSpec { within_group_noise: 0.0, n_samples: 30, ..Default::default() };
        let d = generate(&spec).unwrap();
        for g in 0..spec.n_groups {
            let first = d.x().column(g * spec.group_size).to_owned();
            for j in 1..spec.group_size {
                assert_eq!(d.x().column(g * spec.group_size + j), first);
            }
        }
    }

    #[test]
    fn seeded_and_labeled() {
        let spec = SyntheticSpec::default();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_ne!(generate(&spec).unwrap(), generate(&spec.with_seed(1)).unwrap());
        let d = generate(&spec).unwrap();
        assert_eq!(d.n_features(), 100);
        let y = d.y().unwrap();
        assert!(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0));
        assert!(!generate_unlabeled(&spec).unwrap().is_labeled());
    }

    #[test]
    fn within_group_correlation() {
        let spec = SyntheticSpec { within_group_noise: 0.1, n_samples: 500, ..Default::default() };
        let d = generate(&spec).unwrap();
        let x = d.x();
        let mut total = 0.0;
        let mut count = 0;
        for g in 0..spec.n_groups {
            for a in 0..spec.group_size {
                for b in (a + 1)..spec.group_size {
                    total += corr(x.column(g * 10 + a), x.column(g * 10 + b));
                    count += 1;
                }
            }
        }
        assert!(total / count as f64 > 0.9);
    }

    #[test]
    fn population_correlations_at_m1000() {
        let spec = SyntheticSpec { n_samples: 1000, seed: 3, ..Default::default() };
        let d = generate(&spec).unwrap();
        let x = d.x();
        let expected = 1.0 / (1.0 + 0.3f64.powi(2));
        let cols: Vec<_> = x.axis_iter(Axis(1)).collect();
        let mut within = Vec::new();
        let mut cross_max: f64 = 0.0;
        for i in 0..100 {
            for j in (i + 1)..100 {
                let c = corr(cols[i], cols[j]);
                if i / 10 == j / 10 {
                    within.push(c);
                } else {
                    cross_max = cross_max.max(c.abs());
                }
            }
        }
        let mean_within = within.iter().sum::<f64>() / within.len() as f64;
        assert!((mean_within - expected).abs() < 0.03, "{mean_within} vs {expected}");
        assert!(cross_max < 0.1, "{cross_max}");
    }

    #[test]
    fn group_graph_edges() {
        let s = |g, gs| SyntheticSpec { n_groups: g, group_size: gs, n_informative_groups: 1, ..Default::default() };
        assert_eq!(make_group_graph(&s(2, 2)).edges().len(), 2);
        assert_eq!(make_group_graph(&s(1, 4)).edges().len(), 6);
    }

    #[test]
    fn group_graph_has_one_null_direction_per_group() {
        // A Laplacian's null space is spanned by component indicators, so
        // the number of components equals n − rank. Count zero pivots.
        let spec = SyntheticSpec { n_groups: 3, group_size: 3, n_informative_groups: 1, ..Default::default() };
        let l = build_laplacian(&make_group_graph(&spec), &spec.feature_names()).unwrap();
        let mut a = l.matrix().to_owned();
        let n = a.nrows();
        let mut rank = 0;
        for col in 0..n {
            let pivot = (rank..n).max_by(|&i, &j| a[[i, col]].abs().total_cmp(&a[[j, col]].abs())).unwrap();
            if a[[pivot, col]].abs() < 1e-9 {
                continue;
            }
            for c in 0..n {
                a.swap([rank, c], [pivot, c]);
            }
            for r in 0..n {
                if r != rank {
                    let f = a[[r, col]] / a[[rank, col]];
                    for c in 0..n {
                        a[[r, c]] -= f * a[[rank, c]];
                    }
                }
            }
            rank += 1;
        }
        assert_eq!(n - rank, 3);
    }

    #[test]
    fn rejects_invalid_spec() {
        assert!(generate(&SyntheticSpec { n_informative_groups: 11, ..Default::default() }).is_err());
        assert!(generate(&SyntheticSpec { label_noise: 0.5, ..Default::default() }).is_err());
        assert!(generate(&SyntheticSpec { n_samples: 0, ..Default::default() }).is_err());
    }
}
