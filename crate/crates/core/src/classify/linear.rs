//! Primal linear SVM with squared hinge loss.
//!
//! ```text
//! P(w, b) = ½ ‖w‖² + C Σ max(0, 1 − yᵢ (⟨w, xᵢ⟩ + b))²
//! ```
//!
//! Trained by stochastic gradient steps over a seeded shuffle of the data.
//! At the end of every epoch the full objective is evaluated; an epoch that
//! increases it is rolled back and the step size halved, so the recorded
//! objective never increases.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::smo::check_binary_labels;
use crate::error::{Error, Result};
use crate::gyroball::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearSvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for LinearSvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 50,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Primal objective after each epoch.
    pub objective_history: Vec<f64>,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

fn primal_objective<P: AsRef<[f64]>>(w: &[f64], b: f64, xs: &[P], ys: &[f64], c: f64) -> f64 {
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let v = (1.0 - y * (dot(w, x.as_ref()) + b)).max(0.0);
            v * v
        })
        .sum();
    0.5 * dot(w, w) + c * loss
}

pub fn linear_svm_primal_train<P: AsRef<[f64]>>(
    vectors: &[P],
    labels: &[f64],
    cfg: &LinearSvmConfig,
) -> Result<LinearModel> {
    if vectors.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if vectors.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    check_binary_labels(labels)?;
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        return Err(Error::param("C", format!("must be positive, got {}", cfg.c)));
    }
    if cfg.epochs == 0 {
        return Err(Error::param("epochs", "must be at least 1"));
    }
    let dim = vectors[0].as_ref().len();
    let mut max_sq: f64 = 0.0;
    for v in vectors {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
        max_sq = max_sq.max(dot(v, v));
    }

    let n = vectors.len();
    let nf = n as f64;
    let c = cfg.c;
    // Inverse of the per-sample gradient's Lipschitz bound.
    let mut step = 1.0 / (1.0 / nf + 2.0 * c * (max_sq + 1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut best = primal_objective(&w, b, vectors, labels, c);
    let mut history = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut tw, mut tb) = (w.clone(), b);
        for &i in &order {
            let x = vectors[i].as_ref();
            let y = labels[i];
            let viol = (1.0 - y * (dot(&tw, x) + tb)).max(0.0);
            let g = 2.0 * c * viol * y;
            for (wk, xk) in tw.iter_mut().zip(x) {
                *wk -= step * (*wk / nf - g * xk);
            }
            tb += step * g;
        }
        let obj = primal_objective(&tw, tb, vectors, labels, c);
        if obj <= best {
            w = tw;
            b = tb;
            best = obj;
        } else {
            step *= 0.5;
        }
        history.push(best);
    }

    Ok(LinearModel {
        weights: w,
        bias: b,
        objective_history: history,
    })
}
