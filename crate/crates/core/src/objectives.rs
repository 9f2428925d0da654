//! Loss functions and their analytic gradients.
//!
//! Linear models carry a weight vector `theta` and a bias. Factorized models
//! express the weight vector as `theta = Wᵀu`, where `W` (k×N) doubles as the
//! encoder of a one-hidden-layer sigmoid autoencoder with affine decoder
//! `x̃ = V h + b_V`. The absolute value in every L1 term is smoothed as
//! `sqrt(t² + eps)` so all objectives are differentiable. Biases are never
//! penalized by the sparsity, ridge, or graph terms.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Laplacian};
use crate::error::{Error, Result};

pub const DEFAULT_L1_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub theta: Array1<f64>,
    pub bias: f64,
}

impl LinearParams {
    pub fn zeros(n: usize) -> Self {
        Self {
            theta: Array1::zeros(n),
            bias: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `theta` followed by `bias`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.theta.to_vec();
        v.push(self.bias);
        v
    }

    pub fn from_flat(n: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} linear parameters, got {}",
                n + 1,
                flat.len()
            )));
        }
        Ok(Self {
            theta: Array1::from(flat[..n].to_vec()),
            bias: flat[n],
        })
    }
}

/// Parameters of the factorized predictor and its autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedParams {
    /// Low-dimensional weights, length k.
    pub u: Array1<f64>,
    /// Encoder weights, k×N.
    pub w: Array2<f64>,
    /// Decoder weights, N×k.
    pub v: Array2<f64>,
    pub b_w: Array1<f64>,
    pub b_v: Array1<f64>,
    pub bias: f64,
}

impl FactorizedParams {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            u: Array1::zeros(k),
            w: Array2::zeros((k, n)),
            v: Array2::zeros((n, k)),
            b_w: Array1::zeros(k),
            b_v: Array1::zeros(n),
            bias: 0.0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.w.ncols()
    }

    pub fn hidden_units(&self) -> usize {
        self.w.nrows()
    }

    /// `Wᵀu`.
    pub fn effective_theta(&self) -> Array1<f64> {
        self.w.t().dot(&self.u)
    }

    pub fn flat_len(n: usize, k: usize) -> usize {
        k + 2 * k * n + k + n + 1
    }

    /// Concatenation of `u`, `W` (row-major), `V` (row-major), `b_W`, `b_V`
    /// and `bias`.
    pub fn to_flat(&self) -> Vec<f64> {
        let (n, k) = (self.n_features(), self.hidden_units());
        let mut out = Vec::with_capacity(Self::flat_len(n, k));
        out.extend(self.u.iter());
        out.extend(self.w.iter());
        out.extend(self.v.iter());
        out.extend(self.b_w.iter());
        out.extend(self.b_v.iter());
        out.push(self.bias);
        out
    }

    pub fn from_flat(n: usize, k: usize, flat: &[f64]) -> Result<Self> {
        if flat.len() != Self::flat_len(n, k) {
            return Err(Error::DimensionMismatch(format!(
                "expected {} factorized parameters, got {}",
                Self::flat_len(n, k),
                flat.len()
            )));
        }
        let mut rest = flat;
        let mut take = |len: usize| {
            let (head, tail) = rest.split_at(len);
            rest = tail;
            head.to_vec()
        };
        let u = Array1::from(take(k));
        let w = Array2::from_shape_vec((k, n), take(k * n)).expect("shape checked");
        let v = Array2::from_shape_vec((n, k), take(n * k)).expect("shape checked");
        let b_w = Array1::from(take(k));
        let b_v = Array1::from(take(n));
        let bias = take(1)[0];
        Ok(Self {
            u,
            w,
            v,
            b_w,
            b_v,
            bias,
        })
    }

    fn check_shapes(&self) -> Result<()> {
        let (n, k) = (self.n_features(), self.hidden_units());
        if self.u.len() != k
            || self.v.dim() != (n, k)
            || self.b_w.len() != k
            || self.b_v.len() != n
        {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent factorized parameter shapes for N={n}, k={k}"
            )));
        }
        Ok(())
    }
}

/// Regularization weights and model size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Sparsity weight on `theta`.
    pub alpha: f64,
    /// Elastic-net mix: 1 is pure lasso, 0 pure ridge.
    pub lambda_en: f64,
    /// Feature-graph weight.
    pub lambda_fg: f64,
    /// Autoencoder reconstruction weight.
    pub lambda_ae: f64,
    /// Weight decay on the autoencoder's weights and biases.
    pub lambda_l2: f64,
    pub hidden_units: usize,
    pub l1_epsilon: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            lambda_en: 1.0,
            lambda_fg: 0.0,
            lambda_ae: 0.0,
            lambda_l2: 0.0,
            hidden_units: 10,
            l1_epsilon: DEFAULT_L1_EPSILON,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("alpha", self.alpha),
            ("lambda_fg", self.lambda_fg),
            ("lambda_ae", self.lambda_ae),
            ("lambda_l2", self.lambda_l2),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidHyperParam(format!("{name} = {v} must be ≥ 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda_en) {
            return Err(Error::InvalidHyperParam(format!(
                "lambda_en = {} must lie in [0, 1]",
                self.lambda_en
            )));
        }
        if self.hidden_units == 0 {
            return Err(Error::InvalidHyperParam("hidden_units must be positive".into()));
        }
        if !(self.l1_epsilon > 0.0) || !self.l1_epsilon.is_finite() {
            return Err(Error::InvalidHyperParam(format!(
                "l1_epsilon = {} must be > 0",
                self.l1_epsilon
            )));
        }
        Ok(())
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

fn check_features(x: ArrayView2<f64>, n: usize) -> Result<()> {
    if x.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "data has {} features, parameters have {n}",
            x.ncols()
        )));
    }
    Ok(())
}

/// Mean logistic loss at `theta`, its gradient in `theta`, and in the bias.
fn logistic_value_grad(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    theta: ArrayView1<f64>,
    bias: f64,
) -> (f64, Array1<f64>, f64) {
    let m = x.nrows() as f64;
    let scores = x.dot(&theta);
    let mut loss = 0.0;
    let mut dscore = Array1::<f64>::zeros(scores.len());
    for ((s, &yi), g) in scores.iter().zip(y.iter()).zip(dscore.iter_mut()) {
        let margin = yi * (s + bias);
        loss += softplus(-margin);
        *g = -yi * sigmoid(-margin) / m;
    }
    let gtheta = x.t().dot(&dscore);
    (loss / m, gtheta, dscore.sum())
}

fn logistic_value(x: ArrayView2<f64>, y: ArrayView1<f64>, theta: ArrayView1<f64>, bias: f64) -> f64 {
    let scores = x.dot(&theta);
    scores
        .iter()
        .zip(y.iter())
        .map(|(s, &yi)| softplus(-yi * (s + bias)))
        .sum::<f64>()
        / x.nrows() as f64
}

/// Mean logistic loss `(1/M) Σ log(1 + exp(−y (θᵀx + bias)))`.
pub fn logistic_loss_linear(p: &LinearParams, d: &Dataset) -> Result<f64> {
    let y = d.labels()?;
    check_features(d.x(), p.theta.len())?;
    Ok(logistic_value(d.x(), y, p.theta.view(), p.bias))
}

/// Smoothed lasso penalty `α Σ sqrt(θ_i² + eps)`.
pub fn lasso_penalty(theta: ArrayView1<f64>, alpha: f64, eps: f64) -> f64 {
    alpha * theta.iter().map(|t| (t * t + eps).sqrt()).sum::<f64>()
}

fn lasso_penalty_grad(theta: ArrayView1<f64>, alpha: f64, eps: f64) -> Array1<f64> {
    theta.mapv(|t| alpha * t / (t * t + eps).sqrt())
}

/// `(λ_fg / 2) θᵀ L θ`.
pub fn graph_penalty(theta: ArrayView1<f64>, l: &Laplacian, lambda_fg: f64) -> Result<f64> {
    if l.dim() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "Laplacian is {}×{0}, theta has length {}",
            l.dim(),
            theta.len()
        )));
    }
    if lambda_fg == 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * lambda_fg * l.quadratic_form(theta))
}

/// Penalty attached to a linear model.
#[derive(Debug, Clone, Copy)]
pub enum LinearPenalty<'a> {
    /// `α Σ|θ_i|`.
    Lasso,
    /// `α (λ_en Σ|θ_i| + (1 − λ_en) Σ θ_i²)`.
    ElasticNet,
    /// Lasso plus `(λ_fg / 2) θᵀ L θ`.
    Graph(&'a Laplacian),
}

pub(crate) fn linear_value_grad(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    p: &LinearParams,
    h: &HyperParams,
    penalty: LinearPenalty<'_>,
) -> (f64, LinearParams) {
    let theta = p.theta.view();
    let (mut loss, mut g, gbias) = logistic_value_grad(x, y, theta, p.bias);
    let eps = h.l1_epsilon;
    match penalty {
        LinearPenalty::Lasso => {
            loss += lasso_penalty(theta, h.alpha, eps);
            g += &lasso_penalty_grad(theta, h.alpha, eps);
        }
        LinearPenalty::ElasticNet => {
            let l1 = h.alpha * h.lambda_en;
            let l2 = h.alpha * (1.0 - h.lambda_en);
            loss += lasso_penalty(theta, l1, eps) + l2 * theta.dot(&theta);
            g += &lasso_penalty_grad(theta, l1, eps);
            g.scaled_add(2.0 * l2, &theta);
        }
        LinearPenalty::Graph(l) => {
            loss += lasso_penalty(theta, h.alpha, eps);
            g += &lasso_penalty_grad(theta, h.alpha, eps);
            if h.lambda_fg != 0.0 {
                let lt = l.apply(theta);
                loss += 0.5 * h.lambda_fg * theta.dot(&lt);
                g.scaled_add(h.lambda_fg, &lt);
            }
        }
    }
    (loss, LinearParams { theta: g, bias: gbias })
}

fn check_linear(p: &LinearParams, d: &Dataset, h: &HyperParams, penalty: LinearPenalty<'_>) -> Result<()> {
    d.labels()?;
    check_features(d.x(), p.theta.len())?;
    if !(0.0..=1.0).contains(&h.lambda_en) {
        return Err(Error::InvalidHyperParam(format!(
            "lambda_en = {} must lie in [0, 1]",
            h.lambda_en
        )));
    }
    if let LinearPenalty::Graph(l) = penalty {
        if l.dim() != p.theta.len() {
            return Err(Error::DimensionMismatch(format!(
                "Laplacian is {}×{0}, theta has length {}",
                l.dim(),
                p.theta.len()
            )));
        }
    }
    Ok(())
}

/// Logistic loss plus the chosen linear penalty.
pub fn linear_loss(p: &LinearParams, d: &Dataset, h: &HyperParams, penalty: LinearPenalty<'_>) -> Result<f64> {
    check_linear(p, d, h, penalty)?;
    Ok(linear_value_grad(d.x(), d.labels()?, p, h, penalty).0)
}

/// Gradient of [`linear_loss`] with respect to `theta` and the bias.
pub fn linear_grad(
    p: &LinearParams,
    d: &Dataset,
    h: &HyperParams,
    penalty: LinearPenalty<'_>,
) -> Result<LinearParams> {
    check_linear(p, d, h, penalty)?;
    Ok(linear_value_grad(d.x(), d.labels()?, p, h, penalty).1)
}

pub fn lasso_loss(p: &LinearParams, d: &Dataset, h: &HyperParams) -> Result<f64> {
    linear_loss(p, d, h, LinearPenalty::Lasso)
}

pub fn elastic_net_loss(p: &LinearParams, d: &Dataset, h: &HyperParams) -> Result<f64> {
    linear_loss(p, d, h, LinearPenalty::ElasticNet)
}

/// Lasso loss plus the feature-graph penalty.
pub fn graph_loss(p: &LinearParams, d: &Dataset, h: &HyperParams, l: &Laplacian) -> Result<f64> {
    linear_loss(p, d, h, LinearPenalty::Graph(l))
}

/// Mean logistic loss of the factorized predictor `uᵀW x + bias`.
pub fn logistic_loss_factorized(p: &FactorizedParams, d: &Dataset) -> Result<f64> {
    let y = d.labels()?;
    p.check_shapes()?;
    check_features(d.x(), p.n_features())?;
    // (W x)·u summed per sample, i.e. x·(Wᵀu)
    let z = d.x().dot(&p.w.t());
    let scores = z.dot(&p.u);
    Ok(scores
        .iter()
        .zip(y.iter())
        .map(|(s, &yi)| softplus(-yi * (s + p.bias)))
        .sum::<f64>()
        / d.n_samples() as f64)
}

/// Gradient of [`logistic_loss_factorized`]; autoencoder-only blocks are zero.
pub fn logistic_factorized_grad(p: &FactorizedParams, d: &Dataset) -> Result<FactorizedParams> {
    let y = d.labels()?;
    p.check_shapes()?;
    check_features(d.x(), p.n_features())?;
    let theta = p.effective_theta();
    let (_, gtheta, gbias) = logistic_value_grad(d.x(), y, theta.view(), p.bias);
    let mut g = FactorizedParams::zeros(p.n_features(), p.hidden_units());
    chain_theta_grad(p, &gtheta, &mut g);
    g.bias = gbias;
    Ok(g)
}

/// Accumulates `∂/∂u` and `∂/∂W` given `∂/∂θ` for `θ = Wᵀu`.
fn chain_theta_grad(p: &FactorizedParams, gtheta: &Array1<f64>, g: &mut FactorizedParams) {
    g.u += &p.w.dot(gtheta);
    for (mut row, &uk) in g.w.axis_iter_mut(Axis(0)).zip(p.u.iter()) {
        row.scaled_add(uk, gtheta);
    }
}

/// Reconstruction loss averaged over rows, each row contributing
/// `(1/2N) ||x − b_V − V σ(W x + b_W)||²`. When `grad` is given, adds
/// `scale` times the gradient into it.
fn ae_value_grad(
    p: &FactorizedParams,
    rows: ArrayView2<f64>,
    scale: f64,
    grad: Option<&mut FactorizedParams>,
) -> f64 {
    let n = p.n_features() as f64;
    let r = rows.nrows() as f64;
    let mut hidden = rows.dot(&p.w.t());
    hidden += &p.b_w;
    hidden.mapv_inplace(sigmoid);
    let mut resid = rows.to_owned();
    resid -= &p.b_v;
    resid -= &hidden.dot(&p.v.t());
    let loss = resid.iter().map(|v| v * v).sum::<f64>() / (2.0 * n * r);
    if let Some(g) = grad {
        // d(loss)/d(reconstruction) = −resid / (N R)
        let coef = -scale / (n * r);
        let g_recon = resid.mapv(|v| coef * v);
        g.v += &g_recon.t().dot(&hidden);
        g.b_v += &g_recon.sum_axis(Axis(0));
        let mut d_pre = g_recon.dot(&p.v);
        d_pre.zip_mut_with(&hidden, |d, &h| *d *= h * (1.0 - h));
        g.w += &d_pre.t().dot(&rows);
        g.b_w += &d_pre.sum_axis(Axis(0));
    }
    loss
}

/// Autoencoder reconstruction loss over the rows of `x`.
pub fn ae_loss(p: &FactorizedParams, x: ArrayView2<f64>) -> Result<f64> {
    p.check_shapes()?;
    check_features(x, p.n_features())?;
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("no rows for reconstruction".into()));
    }
    Ok(ae_value_grad(p, x, 1.0, None))
}

/// Gradient of [`ae_loss`]; `u` and `bias` blocks are zero.
pub fn ae_grad(p: &FactorizedParams, x: ArrayView2<f64>) -> Result<FactorizedParams> {
    p.check_shapes()?;
    check_features(x, p.n_features())?;
    if x.nrows() == 0 {
        return Err(Error::InvalidArgument("no rows for reconstruction".into()));
    }
    let mut g = FactorizedParams::zeros(p.n_features(), p.hidden_units());
    ae_value_grad(p, x, 1.0, Some(&mut g));
    Ok(g)
}

/// `λ_ℓ2 (‖W‖² + ‖V‖² + ‖b_W‖² + ‖b_V‖²)`.
pub fn ae_l2_penalty(p: &FactorizedParams, lambda_l2: f64) -> f64 {
    if lambda_l2 == 0.0 {
        return 0.0;
    }
    let sq = |a: &[f64]| a.iter().map(|v| v * v).sum::<f64>();
    let total = p.w.iter().map(|v| v * v).sum::<f64>()
        + p.v.iter().map(|v| v * v).sum::<f64>()
        + sq(p.b_w.as_slice().expect("contiguous"))
        + sq(p.b_v.as_slice().expect("contiguous"));
    lambda_l2 * total
}

/// The joint objective with its inputs bound: labeled rows for the
/// predictive term, and the rows the autoencoder reconstructs (the labeled
/// rows, optionally followed by an external unlabeled cohort).
#[derive(Debug, Clone)]
pub struct JointProblem<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    ae_rows: Array2<f64>,
    hyper: HyperParams,
    laplacian: Option<&'a Laplacian>,
}

impl<'a> JointProblem<'a> {
    pub fn new(
        d: &'a Dataset,
        aug: Option<ArrayView2<'_, f64>>,
        hyper: &HyperParams,
        laplacian: Option<&'a Laplacian>,
    ) -> Result<Self> {
        let y = d.labels()?;
        let n = d.n_features();
        if let Some(a) = aug {
            if a.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "augmentation rows have {} columns, dataset has {n}",
                    a.ncols()
                )));
            }
        }
        if let Some(l) = laplacian {
            if l.dim() != n {
                return Err(Error::DimensionMismatch(format!(
                    "Laplacian is {}×{0}, dataset has {n} features",
                    l.dim()
                )));
            }
        }
        let ae_rows = match aug {
            Some(a) if hyper.lambda_ae != 0.0 => {
                ndarray::concatenate(Axis(0), &[d.x(), a]).expect("column counts checked")
            }
            _ => d.x().to_owned(),
        };
        Ok(Self {
            x: d.x(),
            y,
            ae_rows,
            hyper: hyper.clone(),
            laplacian,
        })
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn ae_rows(&self) -> ArrayView2<'_, f64> {
        self.ae_rows.view()
    }

    fn check(&self, p: &FactorizedParams) -> Result<()> {
        p.check_shapes()?;
        check_features(self.x, p.n_features())
    }

    pub fn value(&self, p: &FactorizedParams) -> Result<f64> {
        self.check(p)?;
        Ok(self.eval(p, false).0)
    }

    pub fn value_and_grad(&self, p: &FactorizedParams) -> Result<(f64, FactorizedParams)> {
        self.check(p)?;
        let (v, g) = self.eval(p, true);
        Ok((v, g.expect("gradient requested")))
    }

    fn eval(&self, p: &FactorizedParams, want_grad: bool) -> (f64, Option<FactorizedParams>) {
        let h = &self.hyper;
        let theta = p.effective_theta();
        let mut grad = want_grad.then(|| FactorizedParams::zeros(p.n_features(), p.hidden_units()));

        let mut loss;
        let mut gtheta;
        if let Some(g) = grad.as_mut() {
            let (l, gt, gb) = logistic_value_grad(self.x, self.y, theta.view(), p.bias);
            loss = l;
            gtheta = gt;
            g.bias = gb;
        } else {
            loss = logistic_value(self.x, self.y, theta.view(), p.bias);
            gtheta = Array1::zeros(0);
        }

        loss += lasso_penalty(theta.view(), h.alpha, h.l1_epsilon);
        if want_grad {
            gtheta += &lasso_penalty_grad(theta.view(), h.alpha, h.l1_epsilon);
        }
        if let (Some(l), true) = (self.laplacian, h.lambda_fg != 0.0) {
            let lt = l.apply(theta.view());
            loss += 0.5 * h.lambda_fg * theta.dot(&lt);
            if want_grad {
                gtheta.scaled_add(h.lambda_fg, &lt);
            }
        }
        if let Some(g) = grad.as_mut() {
            chain_theta_grad(p, &gtheta, g);
        }

        if h.lambda_ae != 0.0 {
            loss += h.lambda_ae * ae_value_grad(p, self.ae_rows.view(), h.lambda_ae, grad.as_mut());
        }
        if h.lambda_l2 != 0.0 {
            loss += ae_l2_penalty(p, h.lambda_l2);
            if let Some(g) = grad.as_mut() {
                let c = 2.0 * h.lambda_l2;
                g.w.scaled_add(c, &p.w);
                g.v.scaled_add(c, &p.v);
                g.b_w.scaled_add(c, &p.b_w);
                g.b_v.scaled_add(c, &p.b_v);
            }
        }
        (loss, grad)
    }
}

/// Factorized logistic loss + smoothed lasso on `Wᵀu` + λ_AE × reconstruction
/// loss (on the labeled rows plus `aug`) + autoencoder weight decay + the
/// graph penalty on `Wᵀu` when a Laplacian is supplied.
pub fn joint_loss(
    p: &FactorizedParams,
    d: &Dataset,
    aug: Option<ArrayView2<f64>>,
    h: &HyperParams,
    l: Option<&Laplacian>,
) -> Result<f64> {
    JointProblem::new(d, aug, h, l)?.value(p)
}

/// Gradient of [`joint_loss`] with respect to every parameter block.
pub fn joint_grad(
    p: &FactorizedParams,
    d: &Dataset,
    aug: Option<ArrayView2<f64>>,
    h: &HyperParams,
    l: Option<&Laplacian>,
) -> Result<FactorizedParams> {
    Ok(JointProblem::new(d, aug, h, l)?.value_and_grad(p)?.1)
}
