//! Binary logistic regression trained by mini-batch SGD with momentum.
//!
//! Loss per batch: mean log-loss plus `l2_decay * ||w||^2 / 2` (bias not
//! penalized). Update: `v <- momentum * v - lr * g`, `theta <- theta + v`,
//! with `g` rescaled to `grad_clip_l2` whenever its L2 norm is larger.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::ClassLabel;
use crate::rng::{derive_seed, stream_rng};

use super::features::{common_dim, FeatureVector, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mini_batch: usize,
    pub max_epochs: usize,
    /// Constant for the whole run.
    pub learning_rate: f64,
    pub momentum: f64,
    pub l2_decay: f64,
    /// L2-norm gradient threshold.
    pub grad_clip_l2: f64,
    pub shuffle_each_epoch: bool,
    /// Half-width of the uniform weight initialization.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mini_batch: 5,
            max_epochs: 6,
            learning_rate: 3e-4,
            momentum: 0.9,
            l2_decay: 1e-4,
            grad_clip_l2: 1.0,
            shuffle_each_epoch: true,
            init_scale: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.mini_batch == 0 {
            return bad("mini batch must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum {} is outside [0, 1)", self.momentum));
        }
        // lr = 0 is allowed so a run can be frozen at initialization.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate {} is invalid", self.learning_rate));
        }
        if !(self.l2_decay >= 0.0 && self.l2_decay.is_finite()) {
            return bad(format!("l2 decay {} is negative", self.l2_decay));
        }
        if self.grad_clip_l2.is_nan() || self.grad_clip_l2 <= 0.0 {
            return bad(format!(
                "gradient threshold {} must be positive",
                self.grad_clip_l2
            ));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init scale {} is invalid", self.init_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Momentum state, weights first then bias.
    pub velocity: Vec<f64>,
}

/// A classifier output: the decided class and the probability of that class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub decision: ClassLabel,
    pub score: f64,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^{-m})` without overflow.
fn log1p_exp_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

fn target(label: ClassLabel) -> Result<f64> {
    match label.0 {
        1 => Ok(1.0),
        -1 => Ok(-1.0),
        c => Err(Error::InvalidLabel(format!(
            "logistic model needs labels -1/+1, got {c}"
        ))),
    }
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Parameters packed as `[w..., b]`.
fn margin(params: &[f64], x: &[f64]) -> f64 {
    let (w, b) = params.split_at(params.len() - 1);
    dot(w, x) + b[0]
}

/// Mean log-loss over `batch` plus the L2 penalty, for packed `[w..., b]`.
pub fn logistic_loss(params: &[f64], batch: &[&Sample], l2_decay: f64) -> Result<f64> {
    let dim = params.len() - 1;
    let mut total = 0.0;
    for s in batch {
        if s.features.dim() != dim {
            return Err(Error::Dimension(format!(
                "expected {dim} features, got {}",
                s.features.dim()
            )));
        }
        total += log1p_exp_neg(target(s.label)? * margin(params, s.features.as_slice()));
    }
    let w = &params[..dim];
    Ok(total / batch.len() as f64 + 0.5 * l2_decay * dot(w, w))
}

/// Analytic gradient of [`logistic_loss`] with respect to `[w..., b]`.
pub fn logistic_gradient(params: &[f64], batch: &[&Sample], l2_decay: f64) -> Result<Vec<f64>> {
    let dim = params.len() - 1;
    let mut g = vec![0.0; dim + 1];
    for s in batch {
        let x = s.features.as_slice();
        if x.len() != dim {
            return Err(Error::Dimension(format!(
                "expected {dim} features, got {}",
                x.len()
            )));
        }
        let y = target(s.label)?;
        // d/dz ln(1 + e^{-yz}) = -y * sigmoid(-yz)
        let dz = -y * sigmoid(-y * margin(params, x));
        for (gi, xi) in g.iter_mut().zip(x) {
            *gi += dz * xi;
        }
        g[dim] += dz;
    }
    let n = batch.len() as f64;
    for (gi, wi) in g[..dim].iter_mut().zip(&params[..dim]) {
        *gi = *gi / n + l2_decay * wi;
    }
    g[dim] /= n;
    Ok(g)
}

/// Rescales `g` in place so its L2 norm is at most `threshold`.
pub fn clip_l2(g: &mut [f64], threshold: f64) {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > threshold {
        let k = threshold / norm;
        g.iter_mut().for_each(|v| *v *= k);
    }
}

/// One momentum step on packed parameters.
pub fn sgdm_step(params: &mut [f64], velocity: &mut [f64], grad: &[f64], lr: f64, momentum: f64) {
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
}

impl LinearModel {
    /// Seeded uniform weights in `[-scale, scale]`, zero bias, zero velocity.
    pub fn init(dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = stream_rng(derive_seed(seed, &[0x1417]), 0);
        let weights = (0..dim)
            .map(|_| {
                if scale > 0.0 {
                    rng.gen_range(-scale..=scale)
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            weights,
            bias: 0.0,
            velocity: vec![0.0; dim + 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn packed(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn unpack(&mut self, params: &[f64]) {
        let dim = self.dim();
        self.weights.copy_from_slice(&params[..dim]);
        self.bias = params[dim];
    }

    /// Probability of class `+1`.
    pub fn probability(&self, x: &FeatureVector) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.dim(),
                x.dim()
            )));
        }
        Ok(sigmoid(dot(&self.weights, x.as_slice()) + self.bias))
    }

    /// `+1` when `P(+1) >= 0.5`, with the score reported for the decided class.
    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        let p = self.probability(x)?;
        Ok(if p >= 0.5 {
            Prediction {
                decision: ClassLabel(1),
                score: p,
            }
        } else {
            Prediction {
                decision: ClassLabel(-1),
                score: 1.0 - p,
            }
        })
    }
}

/// Trains from a seeded initialization. Deterministic given `cfg.seed`.
pub fn sgdm_train(samples: &[Sample], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let dim = common_dim(samples)?;
    for s in samples {
        target(s.label)?;
    }
    let has = |c: i32| samples.iter().any(|s| s.label.0 == c);
    if !(has(1) && has(-1)) {
        return Err(Error::DegenerateTraining(
            "logistic training needs samples of both classes".into(),
        ));
    }

    let mut model = LinearModel::init(dim, cfg.init_scale, cfg.seed);
    let mut params = model.packed();
    let mut velocity = std::mem::take(&mut model.velocity);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut shuffler = stream_rng(derive_seed(cfg.seed, &[0x5ff1e]), 0);

    for _ in 0..cfg.max_epochs {
        if cfg.shuffle_each_epoch {
            order.shuffle(&mut shuffler);
        }
        for chunk in order.chunks(cfg.mini_batch) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
            let mut g = logistic_gradient(&params, &batch, cfg.l2_decay)?;
            clip_l2(&mut g, cfg.grad_clip_l2);
            sgdm_step(
                &mut params,
                &mut velocity,
                &g,
                cfg.learning_rate,
                cfg.momentum,
            );
        }
    }
    model.unpack(&params);
    model.velocity = velocity;
    Ok(model)
}
