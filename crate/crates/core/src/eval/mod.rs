//! Evaluation protocol: per-subject stratified k-fold cross-validation,
//! confusion-matrix metrics, ROC construction with Youden and
//! closest-to-(0,1) threshold selection, and the side-by-side model
//! comparison report.
//!
//! Thresholds are always selected on training-fold scores; selecting them on
//! the test fold would leak the data being measured.

mod folds;
mod metrics;
mod predictors;
mod report;
mod roc;
mod runner;

pub use folds::{stratified_kfold, FoldSplit};
pub use metrics::{confusion, metrics, ConfusionMatrix, MetricValues};
pub use predictors::{BaselinePredictor, DnnPredictor, IcEmPredictor};
pub use report::{compare_models, EvaluationReport};
pub use roc::{closest01_threshold, roc_curve, youden_threshold, RocCurve, RocPoint};
pub use runner::{
    evaluate_model, EvalContext, EvalError, FoldOutcome, ModelEvaluation, Predictor,
    PredictorError, ThresholdRule,
};
