use std::fmt;

use thiserror::Error;

use crate::neural::LabeledExample;
use crate::social::{ActionLog, SocialGraph};

use super::folds::FoldSplit;
use super::metrics::{metrics, ConfusionMatrix, MetricValues};
use super::roc::{closest01_threshold, roc_curve, youden_threshold};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("fold count {k} is too small (need at least 2)")]
    InvalidFoldCount { k: usize },
    #[error("no examples")]
    NoExamples,
    #[error("scores contain NaN")]
    UndefinedScore,
    #[error("only one class present; a ROC curve needs both")]
    SingleClass,
}

/// A model failure, carried as text so one model's problem annotates its
/// report row instead of aborting the whole comparison.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct PredictorError(pub String);

impl PredictorError {
    pub fn from_error(e: impl fmt::Display) -> Self {
        Self(e.to_string())
    }
}

/// Everything a model may look at while fitting and scoring. The examples
/// are shared by all models so every comparison row measures the same task.
pub struct EvalContext<'a> {
    pub graph: &'a SocialGraph,
    pub log: &'a ActionLog,
    pub examples: &'a [LabeledExample],
    pub timestamp_free: bool,
    pub window: Option<i64>,
}

/// A model evaluable under the cross-validation protocol: refit on each
/// training fold, then score held-out examples.
pub trait Predictor {
    fn name(&self) -> &'static str;
    fn fit(
        &mut self,
        ctx: &EvalContext<'_>,
        fold: usize,
        train: &[usize],
    ) -> Result<(), PredictorError>;
    fn score(&self, ctx: &EvalContext<'_>, example: usize) -> Result<f64, PredictorError>;
}

/// How the activation threshold is chosen on the training fold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdRule {
    Fixed(f64),
    Youden,
    Closest01,
}

impl fmt::Display for ThresholdRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdRule::Fixed(t) => write!(f, "fixed({t})"),
            ThresholdRule::Youden => write!(f, "youden"),
            ThresholdRule::Closest01 => write!(f, "closest-(0,1)"),
        }
    }
}

/// Results of one fold: the threshold chosen on the training side and the
/// held-out confusion.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricValues,
}

/// One model's cross-validated results.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelEvaluation {
    pub model: String,
    pub rule: ThresholdRule,
    pub folds: Vec<FoldOutcome>,
    /// Set when the model could not run; folds may then be empty.
    pub failure: Option<String>,
}

impl ModelEvaluation {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none() && !self.folds.is_empty()
    }

    /// Unweighted per-fold means of (accuracy, tpr, fpr).
    pub fn mean(&self) -> Option<[f64; 3]> {
        if self.folds.is_empty() {
            return None;
        }
        let n = self.folds.len() as f64;
        let mut sums = [0.0; 3];
        for fold in &self.folds {
            sums[0] += fold.metrics.accuracy;
            sums[1] += fold.metrics.tpr;
            sums[2] += fold.metrics.fpr;
        }
        Some([sums[0] / n, sums[1] / n, sums[2] / n])
    }

    /// Sample standard deviation of the per-fold metrics (0 for one fold).
    pub fn std_dev(&self) -> Option<[f64; 3]> {
        let mean = self.mean()?;
        let n = self.folds.len();
        if n < 2 {
            return Some([0.0; 3]);
        }
        let mut sums = [0.0; 3];
        for fold in &self.folds {
            let values = [fold.metrics.accuracy, fold.metrics.tpr, fold.metrics.fpr];
            for (s, (v, m)) in sums.iter_mut().zip(values.iter().zip(&mean)) {
                *s += (v - m) * (v - m);
            }
        }
        Some(sums.map(|s| (s / (n as f64 - 1.0)).sqrt()))
    }

    /// Confusion pooled over all folds, with its metrics.
    pub fn pooled(&self) -> Option<(ConfusionMatrix, MetricValues)> {
        if self.folds.is_empty() {
            return None;
        }
        let mut cm = ConfusionMatrix::default();
        for fold in &self.folds {
            cm.merge(&fold.confusion);
        }
        Some((cm, metrics(&cm)))
    }
}

/// Runs the full protocol for one model: per fold, fit on the training
/// indices, choose the threshold on training scores per `rule`, score the
/// held-out fold, and count the confusion. A fit or scoring failure is
/// recorded on the result rather than propagated.
pub fn evaluate_model(
    predictor: &mut dyn Predictor,
    ctx: &EvalContext<'_>,
    split: &FoldSplit,
    rule: ThresholdRule,
) -> ModelEvaluation {
    let mut result = ModelEvaluation {
        model: predictor.name().to_string(),
        rule,
        folds: Vec::with_capacity(split.k()),
        failure: None,
    };

    for fold in 0..split.k() {
        let train = split.train_indices(fold);
        let test = split.test_indices(fold);
        let outcome = evaluate_fold(predictor, ctx, fold, &train, &test, rule);
        match outcome {
            Ok(fold_outcome) => result.folds.push(fold_outcome),
            Err(e) => {
                result.failure = Some(format!("fold {fold}: {e}"));
                result.folds.clear();
                break;
            }
        }
    }
    result
}

fn evaluate_fold(
    predictor: &mut dyn Predictor,
    ctx: &EvalContext<'_>,
    fold: usize,
    train: &[usize],
    test: &[usize],
    rule: ThresholdRule,
) -> Result<FoldOutcome, PredictorError> {
    predictor.fit(ctx, fold, train)?;

    let threshold = match rule {
        ThresholdRule::Fixed(t) => t,
        ThresholdRule::Youden | ThresholdRule::Closest01 => {
            let mut scored = Vec::with_capacity(train.len());
            for &idx in train {
                scored.push((predictor.score(ctx, idx)?, ctx.examples[idx].label));
            }
            let curve = roc_curve(&scored).map_err(PredictorError::from_error)?;
            match rule {
                ThresholdRule::Youden => youden_threshold(&curve).0,
                _ => closest01_threshold(&curve).0,
            }
        }
    };

    let mut cm = ConfusionMatrix::default();
    for &idx in test {
        let score = predictor.score(ctx, idx)?;
        if score.is_nan() {
            return Err(PredictorError::from_error(EvalError::UndefinedScore));
        }
        cm.add(score >= threshold, ctx.examples[idx].label);
    }
    Ok(FoldOutcome { fold, threshold, confusion: cm, metrics: metrics(&cm) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::folds::stratified_kfold;
    use crate::neural::encode_input;
    use crate::social::{ActionId, IdMap, SubjectId};

    struct OracleScorer;
    impl Predictor for OracleScorer {
        fn name(&self) -> &'static str {
            "oracle"
        }
        fn fit(&mut self, _: &EvalContext<'_>, _: usize, _: &[usize]) -> Result<(), PredictorError> {
            Ok(())
        }
        fn score(&self, ctx: &EvalContext<'_>, example: usize) -> Result<f64, PredictorError> {
            Ok(if ctx.examples[example].label { 1.0 } else { 0.0 })
        }
    }

    struct ConstantScorer(f64);
    impl Predictor for ConstantScorer {
        fn name(&self) -> &'static str {
            "constant"
        }
        fn fit(&mut self, _: &EvalContext<'_>, _: usize, _: &[usize]) -> Result<(), PredictorError> {
            Ok(())
        }
        fn score(&self, _: &EvalContext<'_>, _: usize) -> Result<f64, PredictorError> {
            Ok(self.0)
        }
    }

    struct FailingFitter;
    impl Predictor for FailingFitter {
        fn name(&self) -> &'static str {
            "broken"
        }
        fn fit(&mut self, _: &EvalContext<'_>, _: usize, _: &[usize]) -> Result<(), PredictorError> {
            Err(PredictorError("cannot fit".into()))
        }
        fn score(&self, _: &EvalContext<'_>, _: usize) -> Result<f64, PredictorError> {
            unreachable!()
        }
    }

    fn tiny_context() -> (SocialGraph, ActionLog, Vec<LabeledExample>) {
        let ids = IdMap::dense(2);
        let (graph, _) =
            SocialGraph::build(ids, vec![(SubjectId::new(0), SubjectId::new(1)), (SubjectId::new(1), SubjectId::new(0))]);
        let log = ActionLog::build(2, IdMap::new(), Vec::new());
        let mut examples = Vec::new();
        for s in 0..2u32 {
            let subject = SubjectId::new(s);
            for k in 0..10u32 {
                examples.push(LabeledExample {
                    subject,
                    action: ActionId::new(k),
                    features: encode_input(&graph, subject, &[]).unwrap(),
                    label: k % 2 == 0,
                });
            }
        }
        (graph, log, examples)
    }

    #[test]
    fn oracle_predictor_is_perfect_on_every_fold() {
        let (graph, log, examples) = tiny_context();
        let ctx = EvalContext {
            graph: &graph,
            log: &log,
            examples: &examples,
            timestamp_free: false,
            window: None,
        };
        let split = stratified_kfold(&examples, 5, 0).unwrap();
        let result = evaluate_model(&mut OracleScorer, &ctx, &split, ThresholdRule::Youden);
        assert!(result.succeeded());
        for fold in &result.folds {
            assert_eq!(fold.metrics.accuracy, 1.0);
        }
        assert_eq!(result.mean().unwrap()[0], 1.0);
        assert_eq!(result.std_dev().unwrap()[0], 0.0);
    }

    #[test]
    fn constant_half_with_inclusive_boundary_predicts_all_active() {
        let (graph, log, examples) = tiny_context();
        let ctx = EvalContext {
            graph: &graph,
            log: &log,
            examples: &examples,
            timestamp_free: false,
            window: None,
        };
        let split = stratified_kfold(&examples, 5, 0).unwrap();
        let result =
            evaluate_model(&mut ConstantScorer(0.5), &ctx, &split, ThresholdRule::Fixed(0.5));
        assert!(result.succeeded());
        let positive_fraction = examples.iter().filter(|e| e.label).count() as f64
            / examples.len() as f64;
        let (pooled_cm, pooled_metrics) = result.pooled().unwrap();
        assert_eq!(pooled_cm.true_negatives + pooled_cm.false_negatives, 0);
        assert!((pooled_metrics.accuracy - positive_fraction).abs() < 1e-15);
    }

    #[test]
    fn fit_failure_annotates_the_result() {
        let (graph, log, examples) = tiny_context();
        let ctx = EvalContext {
            graph: &graph,
            log: &log,
            examples: &examples,
            timestamp_free: false,
            window: None,
        };
        let split = stratified_kfold(&examples, 2, 0).unwrap();
        let result = evaluate_model(&mut FailingFitter, &ctx, &split, ThresholdRule::Fixed(0.5));
        assert!(!result.succeeded());
        assert!(result.failure.as_deref().unwrap().contains("cannot fit"));
        assert!(result.mean().is_none());
    }
}
