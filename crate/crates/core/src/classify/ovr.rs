use rayon::prelude::*;
use serde::Serialize;

use super::linear::{linear_svm_primal_train, LinearModel, LinearSvmConfig};
use super::smo::{svm_decision, svm_train_smo, SmoConfig, SvmModel, PSD_TOL};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec, PsdReport};

/// How each class-vs-rest problem is solved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BinaryTrainer {
    Smo { kernel: KernelSpec, config: SmoConfig },
    LinearPrimal(LinearSvmConfig),
}

#[derive(Debug, Clone)]
pub enum OvrMembers {
    Kernel {
        spec: KernelSpec,
        train: Vec<Vec<f64>>,
        models: Vec<SvmModel>,
        psd: Option<PsdReport>,
    },
    Linear {
        models: Vec<LinearModel>,
    },
}

/// One binary model per class; prediction is the argmax decision value.
#[derive(Debug, Clone)]
pub struct OvrModel {
    classes: Vec<usize>,
    dim: usize,
    members: OvrMembers,
}

impl OvrModel {
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn members(&self) -> &OvrMembers {
        &self.members
    }

    pub fn psd_warning(&self) -> bool {
        match &self.members {
            OvrMembers::Kernel { psd, .. } => psd.is_some_and(|r| !r.is_psd),
            OvrMembers::Linear { .. } => false,
        }
    }
}

fn one_vs_rest(labels: &[usize], class: usize) -> Vec<f64> {
    labels
        .iter()
        .map(|&l| if l == class { 1.0 } else { -1.0 })
        .collect()
}

pub fn ovr_train(reps: &[Vec<f64>], labels: &[usize], trainer: &BinaryTrainer) -> Result<OvrModel> {
    if reps.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if reps.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: reps.len(),
            right: labels.len(),
        });
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::TooFewClasses {
            required: 2,
            found: classes.len(),
        });
    }
    let dim = reps[0].len();

    let members = match *trainer {
        BinaryTrainer::Smo { kernel, config } => {
            let gram = kernels::gram_matrix_of(reps, &kernel)?;
            // The Gram matrix is shared, so the PSD diagnostic runs once here.
            let psd = if gram.n() <= config.psd_check_max_n {
                let r = kernels::psd_check(&gram, PSD_TOL)?;
                if !r.is_psd {
                    log::warn!(
                        "{kernel} gram matrix is not PSD (min eigenvalue {:e})",
                        r.min_eigenvalue
                    );
                }
                Some(r)
            } else {
                None
            };
            let member_cfg = SmoConfig {
                psd_check_max_n: 0,
                ..config
            };
            let models = classes
                .par_iter()
                .map(|&c| {
                    let mut m = svm_train_smo(&gram, &one_vs_rest(labels, c), &member_cfg)?;
                    m.psd = psd;
                    Ok(m)
                })
                .collect::<Result<Vec<_>>>()?;
            OvrMembers::Kernel {
                spec: kernel,
                train: reps.to_vec(),
                models,
                psd,
            }
        }
        BinaryTrainer::LinearPrimal(cfg) => {
            let models = classes
                .par_iter()
                .map(|&c| linear_svm_primal_train(reps, &one_vs_rest(labels, c), &cfg))
                .collect::<Result<Vec<_>>>()?;
            OvrMembers::Linear { models }
        }
    };
    Ok(OvrModel {
        classes,
        dim,
        members,
    })
}

/// Argmax with ties resolved towards the smallest class id.
pub fn argmax_class(classes: &[usize], scores: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..scores.len() {
        if scores[k] > scores[best] || (scores[k] == scores[best] && classes[k] < classes[best]) {
            best = k;
        }
    }
    classes[best]
}

/// Decision value of every class model for each query.
pub fn ovr_decisions<Q: AsRef<[f64]> + Sync>(model: &OvrModel, queries: &[Q]) -> Result<Vec<Vec<f64>>> {
    for q in queries {
        let q = q.as_ref();
        if q.len() != model.dim {
            return Err(Error::DimensionMismatch {
                expected: model.dim,
                found: q.len(),
            });
        }
    }
    match &model.members {
        OvrMembers::Kernel {
            spec,
            train,
            models,
            ..
        } => {
            let rows = kernels::cross_kernel(train, queries, spec)?;
            rows.iter()
                .map(|row| models.iter().map(|m| svm_decision(m, row)).collect())
                .collect()
        }
        OvrMembers::Linear { models } => {
            for q in queries {
                if q.as_ref().iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("query"));
                }
            }
            Ok(queries
                .iter()
                .map(|q| models.iter().map(|m| m.decision(q.as_ref())).collect())
                .collect())
        }
    }
}

pub fn ovr_predict(model: &OvrModel, query: &[f64]) -> Result<usize> {
    let scores = ovr_decisions(model, &[query])?;
    Ok(argmax_class(&model.classes, &scores[0]))
}

pub fn ovr_predict_many<Q: AsRef<[f64]> + Sync>(model: &OvrModel, queries: &[Q]) -> Result<Vec<usize>> {
    Ok(ovr_decisions(model, queries)?
        .iter()
        .map(|s| argmax_class(&model.classes, s))
        .collect())
}
