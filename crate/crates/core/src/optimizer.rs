//! Seeded initialization and full-batch first-order minimization.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::FactorizedParams;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub max_iters: usize,
    pub learning_rate: f64,
    /// Per-coordinate adaptive steps from running first/second moments.
    pub adaptive: bool,
    /// Stop once `|Δloss| / max(1, |loss|)` falls below this.
    pub rel_tol: f64,
    pub seed: u64,
    /// The step size follows a cosine schedule from `learning_rate` down to
    /// `learning_rate * final_lr_fraction` at `max_iters`; 1 keeps it fixed.
    pub final_lr_fraction: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            learning_rate: 0.01,
            adaptive: true,
            rel_tol: 1e-6,
            seed: 0,
            final_lr_fraction: 1e-4,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning_rate = {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("rel_tol = {} must be ≥ 0", self.rel_tol)));
        }
        if !(self.final_lr_fraction > 0.0 && self.final_lr_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "final_lr_fraction = {} must lie in (0, 1]",
                self.final_lr_fraction
            )));
        }
        Ok(())
    }

    /// Step size used for step `t` (1-based).
    pub fn step_size(&self, t: usize) -> f64 {
        let floor = self.final_lr_fraction;
        if floor >= 1.0 {
            return self.learning_rate;
        }
        let progress = (t - 1) as f64 / (self.max_iters.max(2) - 1) as f64;
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress.min(1.0)).cos());
        self.learning_rate * (floor + (1.0 - floor) * cosine)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<P> {
    pub params: P,
    pub final_loss: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// Loss at the initial point followed by the loss after every step.
    pub loss_trace: Vec<f64>,
}

impl<P> FitResult<P> {
    pub fn map<Q>(self, f: impl FnOnce(P) -> Q) -> FitResult<Q> {
        FitResult {
            params: f(self.params),
            final_loss: self.final_loss,
            iterations_used: self.iterations_used,
            converged: self.converged,
            loss_trace: self.loss_trace,
        }
    }
}

/// A differentiable objective over a flat parameter vector.
pub trait Objective {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }
}

/// Adapts a pair of closures into an [`Objective`].
pub struct FnObjective<F, G>(pub F, pub G);

impl<F, G> Objective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.0)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.1)(x))
    }
}

/// Glorot-style uniform `W`, `V` in `(−s, s)` with `s = sqrt(6/(n+k))`,
/// `u ~ N(0, 0.01²)`, zero biases.
pub fn init_params(n: usize, k: usize, seed: u64) -> FactorizedParams {
    assert!(n >= 1 && k >= 1, "init_params needs n, k ≥ 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (6.0 / (n + k) as f64).sqrt();
    let unif = Uniform::new(-s, s).expect("s > 0");
    let normal = Normal::new(0.0, 0.01).expect("valid std");
    let mut p = FactorizedParams::zeros(n, k);
    p.w.iter_mut().for_each(|v| *v = unif.sample(&mut rng));
    p.v.iter_mut().for_each(|v| *v = unif.sample(&mut rng));
    p.u.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
    p
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Full-batch descent from `init`. The returned parameters are the final
/// iterate and `final_loss` its objective value.
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    init: Vec<f64>,
    cfg: &OptimizerConfig,
) -> Result<FitResult<Vec<f64>>> {
    cfg.validate()?;
    let mut x = init;
    let (mut loss, mut grad) = objective.value_and_gradient(&x)?;
    if !loss.is_finite() || !all_finite(&grad) {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut trace = Vec::with_capacity(cfg.max_iters.min(100_000) + 1);
    trace.push(loss);

    let mut m = vec![0.0; x.len()];
    let mut v = vec![0.0; x.len()];
    let mut converged = false;
    let mut iterations = 0;
    for t in 1..=cfg.max_iters {
        let lr = cfg.step_size(t);
        if cfg.adaptive {
            let c1 = 1.0 - BETA1.powi(t as i32);
            let c2 = 1.0 - BETA2.powi(t as i32);
            for i in 0..x.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * grad[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * grad[i] * grad[i];
                x[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        } else {
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= lr * gi;
            }
        }
        let (new_loss, new_grad) = objective.value_and_gradient(&x)?;
        if !new_loss.is_finite() || !all_finite(&new_grad) {
            return Err(Error::NonFinite { iteration: t });
        }
        trace.push(new_loss);
        iterations = t;
        let rel = (new_loss - loss).abs() / loss.abs().max(1.0);
        loss = new_loss;
        grad = new_grad;
        if rel < cfg.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        params: x,
        final_loss: loss,
        iterations_used: iterations,
        converged,
        loss_trace: trace,
    })
}
