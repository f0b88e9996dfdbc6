//! Classifiers over document representations.
//!
//! * [`knn`]: k-nearest neighbours under the Poincaré or Euclidean metric.
//! * [`smo`]: binary soft-margin SVM on a precomputed Gram matrix.
//! * [`linear`]: primal linear SVM (squared hinge).
//! * [`ovr`]: one-vs-rest multiclass reduction over either binary trainer.

pub mod knn;
pub mod linear;
pub mod ovr;
pub mod smo;

pub use knn::{knn_fit, knn_predict, knn_predict_many, KnnModel, MetricKind};
pub use linear::{linear_svm_primal_train, LinearModel, LinearSvmConfig};
pub use ovr::{
    argmax_class, ovr_decisions, ovr_predict, ovr_predict_many, ovr_train, BinaryTrainer,
    OvrMembers, OvrModel,
};
pub use smo::{
    dual_objective, max_kkt_violation, svm_decision, svm_train_smo, SmoConfig, SvmModel,
};
