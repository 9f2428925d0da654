//! The six regularization schemes and how each is fitted.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Laplacian};
use crate::error::{Error, Result};
use crate::objectives::{
    linear_value_grad, FactorizedParams, HyperParams, JointProblem, LinearParams, LinearPenalty,
};
use crate::optimizer::{init_params, minimize, FitResult, Objective, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Lasso,
    ElasticNet,
    LassoGraph,
    LassoAutoencoder,
    LassoAutoencoderGraph,
    AgLassoAutoencoderGraph,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lasso,
        ModelKind::ElasticNet,
        ModelKind::LassoGraph,
        ModelKind::LassoAutoencoder,
        ModelKind::LassoAutoencoderGraph,
        ModelKind::AgLassoAutoencoderGraph,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Lasso => "lasso",
            ModelKind::ElasticNet => "elastic-net",
            ModelKind::LassoGraph => "lasso-graph",
            ModelKind::LassoAutoencoder => "lasso-autoencoder",
            ModelKind::LassoAutoencoderGraph => "lasso-autoencoder-graph",
            ModelKind::AgLassoAutoencoderGraph => "ag-lasso-autoencoder-graph",
        }
    }

    pub fn is_factorized(self) -> bool {
        matches!(
            self,
            ModelKind::LassoAutoencoder
                | ModelKind::LassoAutoencoderGraph
                | ModelKind::AgLassoAutoencoderGraph
        )
    }

    pub fn uses_graph(self) -> bool {
        matches!(
            self,
            ModelKind::LassoGraph | ModelKind::LassoAutoencoderGraph | ModelKind::AgLassoAutoencoderGraph
        )
    }

    pub fn uses_augmentation(self) -> bool {
        self == ModelKind::AgLassoAutoencoderGraph
    }

    pub fn uses_elastic_net(self) -> bool {
        self == ModelKind::ElasticNet
    }

    /// Rejects hyperparameters that this scheme would silently ignore: any
    /// penalty it does not contain must sit at its neutral value.
    pub fn check_hyper(self, h: &HyperParams) -> Result<()> {
        h.validate()?;
        let reject = |name: &str, v: f64| {
            Err(Error::Config(format!(
                "{name} = {v} does not apply to model {}",
                self.tag()
            )))
        };
        if !self.uses_elastic_net() && h.lambda_en != 1.0 {
            return reject("lambda_en", h.lambda_en);
        }
        if !self.uses_graph() && h.lambda_fg != 0.0 {
            return reject("lambda_fg", h.lambda_fg);
        }
        if !self.is_factorized() {
            if h.lambda_ae != 0.0 {
                return reject("lambda_ae", h.lambda_ae);
            }
            if h.lambda_l2 != 0.0 {
                return reject("lambda_l2", h.lambda_l2);
            }
        }
        Ok(())
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

/// A regularization scheme together with the side inputs it needs.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hyper: HyperParams,
    pub laplacian: Option<Arc<Laplacian>>,
    /// External unlabeled rows for autoencoder training, columns aligned
    /// with the labeled data.
    pub augment: Option<Arc<Array2<f64>>>,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, hyper: HyperParams) -> Self {
        Self {
            kind,
            hyper,
            laplacian: None,
            augment: None,
        }
    }

    pub fn with_laplacian(mut self, l: Laplacian) -> Self {
        self.laplacian = Some(Arc::new(l));
        self
    }

    pub fn with_augment(mut self, rows: Array2<f64>) -> Self {
        self.augment = Some(Arc::new(rows));
        self
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        self.kind.check_hyper(&self.hyper)?;
        match (&self.laplacian, self.kind.uses_graph()) {
            (None, true) => {
                return Err(Error::Config(format!("model {} requires a feature graph", self.kind)))
            }
            (Some(l), true) if l.dim() != n_features => {
                return Err(Error::DimensionMismatch(format!(
                    "Laplacian is {}×{0}, data has {n_features} features",
                    l.dim()
                )))
            }
            _ => {}
        }
        match (&self.augment, self.kind.uses_augmentation()) {
            (None, true) => Err(Error::Config(format!(
                "model {} requires augmentation data",
                self.kind
            ))),
            (Some(a), true) if a.ncols() != n_features => Err(Error::DimensionMismatch(format!(
                "augmentation rows have {} columns, data has {n_features}",
                a.ncols()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Linear(LinearParams),
    Factorized(FactorizedParams),
}

impl FittedModel {
    /// The per-feature weight vector (`Wᵀu` for factorized models).
    pub fn effective_theta(&self) -> Array1<f64> {
        match self {
            FittedModel::Linear(p) => p.theta.clone(),
            FittedModel::Factorized(p) => p.effective_theta(),
        }
    }

    pub fn bias(&self) -> f64 {
        match self {
            FittedModel::Linear(p) => p.bias,
            FittedModel::Factorized(p) => p.bias,
        }
    }

    /// Linear scores `θᵀx + bias` for each row.
    pub fn scores(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.dot(&self.effective_theta()) + self.bias()
    }
}

struct LinearObjective<'a> {
    d: &'a Dataset,
    hyper: &'a HyperParams,
    penalty: LinearPenalty<'a>,
}

impl Objective for LinearObjective<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.value_and_gradient(x)?.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(x)?.1)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = LinearParams::from_flat(self.d.n_features(), x)?;
        let (v, g) = linear_value_grad(self.d.x(), self.d.labels()?, &p, self.hyper, self.penalty);
        Ok((v, g.to_flat()))
    }
}

struct FactorizedObjective<'a> {
    problem: JointProblem<'a>,
    k: usize,
}

impl Objective for FactorizedObjective<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        let p = FactorizedParams::from_flat(self.problem.n_features(), self.k, x)?;
        self.problem.value(&p)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.value_and_gradient(x)?.1)
    }

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let p = FactorizedParams::from_flat(self.problem.n_features(), self.k, x)?;
        let (v, g) = self.problem.value_and_grad(&p)?;
        Ok((v, g.to_flat()))
    }
}

/// Fits `spec` on a labeled, standardized dataset. Linear models start at
/// zero; factorized models start from [`init_params`] with `seed`.
pub fn fit(spec: &ModelSpec, d: &Dataset, cfg: &OptimizerConfig, seed: u64) -> Result<FitResult<FittedModel>> {
    d.labels()?;
    spec.validate(d.n_features())?;
    let n = d.n_features();
    let h = &spec.hyper;
    if spec.kind.is_factorized() {
        let aug = if spec.kind.uses_augmentation() {
            spec.augment.as_deref().map(|a| a.view())
        } else {
            None
        };
        let laplacian = if spec.kind.uses_graph() {
            spec.laplacian.as_deref()
        } else {
            None
        };
        let problem = JointProblem::new(d, aug, h, laplacian)?;
        let obj = FactorizedObjective { problem, k: h.hidden_units };
        let init = init_params(n, h.hidden_units, seed).to_flat();
        let r = minimize(&obj, init, cfg)?;
        let k = h.hidden_units;
        Ok(r.map(|x| {
            FittedModel::Factorized(FactorizedParams::from_flat(n, k, &x).expect("optimizer keeps length"))
        }))
    } else {
        let penalty = match spec.kind {
            ModelKind::ElasticNet => LinearPenalty::ElasticNet,
            ModelKind::LassoGraph => LinearPenalty::Graph(
                spec.laplacian.as_deref().expect("validated above"),
            ),
            _ => LinearPenalty::Lasso,
        };
        let obj = LinearObjective { d, hyper: h, penalty };
        let r = minimize(&obj, LinearParams::zeros(n).to_flat(), cfg)?;
        Ok(r.map(|x| FittedModel::Linear(LinearParams::from_flat(n, &x).expect("optimizer keeps length"))))
    }
}
