//! Soft-margin kernel SVM trained by sequential minimal optimization on a
//! precomputed Gram matrix.
//!
//! Dual problem, with `Q_ij = y_i y_j K_ij`:
//!
//! ```text
//! maximize  D(α) = Σ αᵢ − ½ αᵀ Q α
//! s.t.      0 ≤ αᵢ ≤ C,  Σ αᵢ yᵢ = 0
//! ```
//!
//! Each step picks the maximal violating pair (first-order working set
//! selection) and solves the two-variable subproblem in closed form. The
//! decision function is `f(x) = Σ αᵢ yᵢ K(xᵢ, x) + b`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{self, GramMatrix, KernelSpec, PsdReport};

/// Curvature floor for the pair subproblem when `Kᵢᵢ + Kⱼⱼ − 2Kᵢⱼ ≤ 0`.
const TAU: f64 = 1e-12;
/// Dual coefficients above this count as support vectors.
pub const SUPPORT_EPS: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoConfig {
    pub c: f64,
    pub kkt_tol: f64,
    /// Iteration budget, in multiples of the training set size.
    pub max_passes: usize,
    /// Run the PSD diagnostic on the Gram matrix when `n` is at most this.
    pub psd_check_max_n: usize,
    /// Keep the dual objective after every iteration.
    pub record_objective: bool,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            kkt_tol: 1e-3,
            max_passes: 1000,
            psd_check_max_n: 1000,
            record_objective: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub labels: Vec<f64>,
    pub support_indices: Vec<usize>,
    pub kernel: Option<KernelSpec>,
    pub c: f64,
    pub iterations: usize,
    /// Maximal-violating-pair gap at exit.
    pub final_gap: f64,
    pub dual_objective: f64,
    pub objective_trace: Vec<f64>,
    /// PSD diagnostic of the training Gram matrix, when it was run.
    pub psd: Option<PsdReport>,
}

impl SvmModel {
    /// True when the PSD diagnostic ran and failed, i.e. the solver's
    /// convergence guarantees do not apply.
    pub fn psd_warning(&self) -> bool {
        self.psd.is_some_and(|r| !r.is_psd)
    }
}

pub(crate) fn check_binary_labels(labels: &[f64]) -> Result<()> {
    if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(Error::param("labels", format!("must be ±1, got {bad}")));
    }
    let pos = labels.iter().any(|&y| y > 0.0);
    let neg = labels.iter().any(|&y| y < 0.0);
    if !(pos && neg) {
        return Err(Error::TooFewClasses {
            required: 2,
            found: usize::from(pos) + usize::from(neg),
        });
    }
    Ok(())
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && alpha < c) || (y > 0.0 && alpha > 0.0)
}

pub fn svm_train_smo(gram: &GramMatrix, labels: &[f64], cfg: &SmoConfig) -> Result<SvmModel> {
    let n = gram.n();
    if labels.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: labels.len(),
        });
    }
    check_binary_labels(labels)?;
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        return Err(Error::param("C", format!("must be positive, got {}", cfg.c)));
    }
    if !(cfg.kkt_tol > 0.0) {
        return Err(Error::param("kkt_tol", "must be positive"));
    }
    if gram.entries().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("gram matrix"));
    }

    let psd = if n <= cfg.psd_check_max_n {
        let r = kernels::psd_check(gram, PSD_TOL)?;
        if !r.is_psd {
            log::warn!(
                "gram matrix is not PSD (min eigenvalue {:e}); SMO convergence is not guaranteed",
                r.min_eigenvalue
            );
        }
        Some(r)
    } else {
        None
    };

    let c = cfg.c;
    let y = labels;
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα.
    let mut grad = vec![-1.0; n];
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        alpha
            .iter()
            .zip(grad)
            .map(|(a, g)| 0.5 * a - 0.5 * a * g)
            .sum()
    };
    let mut trace = Vec::new();
    let budget = cfg.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;

    let gap = loop {
        // i maximizes −y G over I_up, j minimizes it over I_low.
        let mut i = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j = None;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let f = -y[t] * grad[t];
            if in_up(alpha[t], y[t], c) && f > m_up {
                m_up = f;
                i = Some(t);
            }
            if in_low(alpha[t], y[t], c) && f < m_low {
                m_low = f;
                j = Some(t);
            }
        }
        let (Some(i), Some(j)) = (i, j) else {
            break 0.0;
        };
        let gap = m_up - m_low;
        if gap <= cfg.kkt_tol {
            break gap;
        }
        if iterations >= budget {
            return Err(Error::NotConverged {
                iterations,
                violation: gap,
            });
        }
        iterations += 1;

        let eta = (gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j)).max(TAU);
        let cap_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
        let cap_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
        let step = (gap / eta).min(cap_i).min(cap_j);

        alpha[i] = if step == cap_i {
            if y[i] > 0.0 { c } else { 0.0 }
        } else {
            alpha[i] + y[i] * step
        };
        alpha[j] = if step == cap_j {
            if y[j] > 0.0 { 0.0 } else { c }
        } else {
            alpha[j] - y[j] * step
        };

        let (ri, rj) = (gram.row(i), gram.row(j));
        for t in 0..n {
            grad[t] += y[t] * step * (ri[t] - rj[t]);
        }
        if cfg.record_objective {
            trace.push(objective(&alpha, &grad));
        }
    };

    let bias = intercept(&alpha, &grad, y, c);
    let support_indices = (0..n).filter(|&t| alpha[t] > SUPPORT_EPS).collect();
    let dual_objective = objective(&alpha, &grad);
    Ok(SvmModel {
        alphas: alpha,
        bias,
        labels: y.to_vec(),
        support_indices,
        kernel: gram.spec().copied(),
        c,
        iterations,
        final_gap: gap,
        dual_objective,
        objective_trace: trace,
        psd,
    })
}

/// Mean of `−yG` over free vectors; without free vectors, the middle of the
/// feasible interval.
fn intercept(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free_n = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..alpha.len() {
        let f = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += f;
            free_n += 1;
        } else {
            if in_up(alpha[t], y[t], c) {
                lb = lb.max(f);
            }
            if in_low(alpha[t], y[t], c) {
                ub = ub.min(f);
            }
        }
    }
    if free_n > 0 {
        free_sum / free_n as f64
    } else if lb.is_finite() && ub.is_finite() {
        0.5 * (lb + ub)
    } else if lb.is_finite() {
        lb
    } else if ub.is_finite() {
        ub
    } else {
        0.0
    }
}

/// `Σ αᵢ yᵢ K(xᵢ, x) + b` given the kernel values of the query against every
/// training point.
pub fn svm_decision(model: &SvmModel, kernel_row: &[f64]) -> Result<f64> {
    if kernel_row.len() != model.alphas.len() {
        return Err(Error::LengthMismatch {
            left: model.alphas.len(),
            right: kernel_row.len(),
        });
    }
    Ok(model
        .support_indices
        .iter()
        .map(|&i| model.alphas[i] * model.labels[i] * kernel_row[i])
        .sum::<f64>()
        + model.bias)
}

/// Largest KKT violation of a model against its training Gram matrix,
/// measured on functional margins `yᵢ f(xᵢ)`.
pub fn max_kkt_violation(model: &SvmModel, gram: &GramMatrix) -> f64 {
    let n = gram.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n)
            .map(|j| model.alphas[j] * model.labels[j] * gram.get(i, j))
            .sum::<f64>()
            + model.bias;
        let margin = model.labels[i] * f;
        let a = model.alphas[i];
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= model.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}

/// `Σ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ`, evaluated directly.
pub fn dual_objective(alphas: &[f64], labels: &[f64], gram: &GramMatrix) -> f64 {
    let n = gram.n();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i] * labels[j] * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}
