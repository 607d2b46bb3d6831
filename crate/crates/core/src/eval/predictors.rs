use std::collections::HashSet;

use crate::baselines::{
    combine_joint_probability, episodes_from_log, estimate_bd, estimate_ji, estimate_pc,
    ic_em_fit, EdgeProbabilities, EstimatorKind, IcEmConfig, PartialCreditFlavor,
};
use crate::neural::{fit_subset, MlpModel, TrainConfig};
use crate::social::{scan_propagation, ActionLog, ScanOptions};

use super::runner::{EvalContext, Predictor, PredictorError};

/// Restricts the log to the records whose (subject, action) pair is a
/// positive example of the training fold, so nothing of the held-out fold
/// reaches the estimator.
fn training_sublog(ctx: &EvalContext<'_>, train: &[usize]) -> ActionLog {
    let keep: HashSet<(u32, u32)> = train
        .iter()
        .filter(|&&i| ctx.examples[i].label)
        .map(|&i| (ctx.examples[i].subject.value(), ctx.examples[i].action.value()))
        .collect();
    ctx.log.subset(|rec| keep.contains(&(rec.subject.value(), rec.action.value())))
}

fn noisy_or_score(
    probs: &EdgeProbabilities,
    ctx: &EvalContext<'_>,
    example: usize,
) -> Result<f64, PredictorError> {
    let case = &ctx.examples[example];
    let edge_probs: Vec<f64> = case
        .features
        .active_friends()
        .iter()
        .filter_map(|&friend| probs.for_edge(ctx.graph, friend, case.subject))
        .collect();
    combine_joint_probability(&edge_probs).map_err(PredictorError::from_error)
}

/// Static-estimator baselines (propagation ratio, Jaccard, partial credit).
pub struct BaselinePredictor {
    kind: EstimatorKind,
    probs: Option<EdgeProbabilities>,
}

impl BaselinePredictor {
    pub fn new(kind: EstimatorKind) -> Self {
        assert!(kind != EstimatorKind::IcEm, "use IcEmPredictor for the cascade model");
        Self { kind, probs: None }
    }

    pub fn fitted_probs(&self) -> Option<&EdgeProbabilities> {
        self.probs.as_ref()
    }
}

impl Predictor for BaselinePredictor {
    fn name(&self) -> &'static str {
        self.kind.tag()
    }

    fn fit(
        &mut self,
        ctx: &EvalContext<'_>,
        _fold: usize,
        train: &[usize],
    ) -> Result<(), PredictorError> {
        let sublog = training_sublog(ctx, train);
        let options = ScanOptions { timestamp_free: ctx.timestamp_free, window: ctx.window };
        let stats =
            scan_propagation(ctx.graph, &sublog, options).map_err(PredictorError::from_error)?;
        self.probs = Some(match self.kind {
            EstimatorKind::Bernoulli => estimate_bd(&stats),
            EstimatorKind::Jaccard => estimate_ji(&stats),
            EstimatorKind::PartialCreditBernoulli => {
                estimate_pc(&stats, PartialCreditFlavor::Bernoulli)
            }
            EstimatorKind::PartialCreditJaccard => {
                estimate_pc(&stats, PartialCreditFlavor::Jaccard)
            }
            EstimatorKind::IcEm => unreachable!("checked in constructor"),
        });
        Ok(())
    }

    fn score(&self, ctx: &EvalContext<'_>, example: usize) -> Result<f64, PredictorError> {
        let probs =
            self.probs.as_ref().ok_or_else(|| PredictorError("model not fitted".into()))?;
        noisy_or_score(probs, ctx, example)
    }
}

/// Cascade model fitted by expectation-maximization on the training fold's
/// episodes.
pub struct IcEmPredictor {
    cfg: IcEmConfig,
    probs: Option<EdgeProbabilities>,
}

impl IcEmPredictor {
    pub fn new(cfg: IcEmConfig) -> Self {
        Self { cfg, probs: None }
    }

    pub fn fitted_probs(&self) -> Option<&EdgeProbabilities> {
        self.probs.as_ref()
    }
}

impl Predictor for IcEmPredictor {
    fn name(&self) -> &'static str {
        EstimatorKind::IcEm.tag()
    }

    fn fit(
        &mut self,
        ctx: &EvalContext<'_>,
        _fold: usize,
        train: &[usize],
    ) -> Result<(), PredictorError> {
        if ctx.timestamp_free {
            return Err(PredictorError(
                "cascade fitting needs activation order; timestamp-free mode has none".into(),
            ));
        }
        let sublog = training_sublog(ctx, train);
        let episodes = episodes_from_log(&sublog).map_err(PredictorError::from_error)?;
        let (probs, _) =
            ic_em_fit(&episodes, ctx.graph, &self.cfg).map_err(PredictorError::from_error)?;
        self.probs = Some(probs);
        Ok(())
    }

    fn score(&self, ctx: &EvalContext<'_>, example: usize) -> Result<f64, PredictorError> {
        let probs =
            self.probs.as_ref().ok_or_else(|| PredictorError("model not fitted".into()))?;
        noisy_or_score(probs, ctx, example)
    }
}

/// The neural model, retrained from scratch on every training fold with a
/// fold-specific seed derived from the base seed.
pub struct DnnPredictor {
    cfg: TrainConfig,
    hidden: Vec<usize>,
    model: Option<MlpModel>,
}

impl DnnPredictor {
    pub fn new(cfg: TrainConfig, hidden: Vec<usize>) -> Self {
        assert!(!hidden.is_empty(), "need at least one hidden layer");
        Self { cfg, hidden, model: None }
    }

    pub fn fitted_model(&self) -> Option<&MlpModel> {
        self.model.as_ref()
    }
}

/// SplitMix64 of `base ^ (stream * golden)`: cheap independent seed per fold.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Predictor for DnnPredictor {
    fn name(&self) -> &'static str {
        "DNN"
    }

    fn fit(
        &mut self,
        ctx: &EvalContext<'_>,
        fold: usize,
        train: &[usize],
    ) -> Result<(), PredictorError> {
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(2 * ctx.graph.n_subjects());
        sizes.extend_from_slice(&self.hidden);
        sizes.push(1);
        let cfg = TrainConfig {
            seed: derive_seed(self.cfg.seed, fold as u64 + 1),
            ..self.cfg
        };
        let (model, _) = fit_subset(ctx.examples, train, &sizes, &cfg)
            .map_err(PredictorError::from_error)?;
        self.model = Some(model);
        Ok(())
    }

    fn score(&self, ctx: &EvalContext<'_>, example: usize) -> Result<f64, PredictorError> {
        let model =
            self.model.as_ref().ok_or_else(|| PredictorError("model not fitted".into()))?;
        let (y_hat, _) = model
            .forward_features(&ctx.examples[example].features, None)
            .map_err(PredictorError::from_error)?;
        Ok(y_hat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::folds::stratified_kfold;
    use crate::eval::runner::{evaluate_model, ThresholdRule};
    use crate::neural::{build_training_set, NegativeRule};
    use crate::social::{load_actions, load_graph};

    /// Small world where u_target copies whatever u_src does.
    fn follower_dataset() -> (crate::social::SocialGraph, ActionLog) {
        let (g, _) = load_graph("src\ttgt\ntgt\tsrc\nother\ttgt\n".as_bytes()).unwrap();
        let mut actions = String::new();
        for k in 0..30 {
            actions.push_str(&format!("src\te{k}\t{}\n", 10 * k));
            actions.push_str(&format!("tgt\te{k}\t{}\n", 10 * k + 5));
        }
        for k in 0..30 {
            actions.push_str(&format!("other\tz{k}\t{}\n", 10 * k));
        }
        let (log, _) = load_actions(actions.as_bytes(), &g).unwrap();
        (g, log)
    }

    #[test]
    fn baseline_beats_chance_on_a_copying_world() {
        let (graph, log) = follower_dataset();
        let (examples, _) = build_training_set(&graph, &log, NegativeRule::MatchPositives, false, 11);
        let ctx = EvalContext {
            graph: &graph,
            log: &log,
            examples: &examples,
            timestamp_free: false,
            window: None,
        };
        let split = stratified_kfold(&examples, 3, 5).unwrap();
        let mut bd = BaselinePredictor::new(EstimatorKind::Bernoulli);
        let result = evaluate_model(&mut bd, &ctx, &split, ThresholdRule::Youden);
        assert!(result.succeeded(), "{:?}", result.failure);
        let mean = result.mean().unwrap();
        assert!(mean[0] > 0.6, "accuracy {mean:?}");
    }

    #[test]
    fn icem_refuses_timestamp_free_mode() {
        let (graph, log) = follower_dataset();
        let (examples, _) = build_training_set(&graph, &log, NegativeRule::MatchPositives, false, 11);
        let ctx = EvalContext {
            graph: &graph,
            log: &log,
            examples: &examples,
            timestamp_free: true,
            window: None,
        };
        let split = stratified_kfold(&examples, 3, 5).unwrap();
        let mut ic = IcEmPredictor::new(IcEmConfig::default());
        let result = evaluate_model(&mut ic, &ctx, &split, ThresholdRule::Youden);
        assert!(!result.succeeded());
        assert!(result.failure.unwrap().contains("timestamp-free"));
    }

    #[test]
    fn dnn_predictor_is_deterministic_per_seed() {
        let (graph, log) = follower_dataset();
        let (examples, _) = build_training_set(&graph, &log, NegativeRule::MatchPositives, false, 11);
        let ctx = EvalContext {
            graph: &graph,
            log: &log,
            examples: &examples,
            timestamp_free: false,
            window: None,
        };
        let split = stratified_kfold(&examples, 3, 5).unwrap();
        let cfg = TrainConfig { epochs: 2, seed: 77, ..TrainConfig::default() };
        let mut a = DnnPredictor::new(cfg, vec![16, 8]);
        let mut b = DnnPredictor::new(cfg, vec![16, 8]);
        let ra = evaluate_model(&mut a, &ctx, &split, ThresholdRule::Fixed(0.5));
        let rb = evaluate_model(&mut b, &ctx, &split, ThresholdRule::Fixed(0.5));
        assert!(ra.succeeded(), "{:?}", ra.failure);
        assert_eq!(ra, rb);
    }

    #[test]
    fn derived_seeds_differ_across_folds() {
        let seeds: Vec<u64> = (0..10).map(|f| derive_seed(42, f + 1)).collect();
        let mut unique = seeds.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), seeds.len());
    }
}
