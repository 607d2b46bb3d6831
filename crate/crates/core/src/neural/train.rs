use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::encode::{encode_input, EncodeError, LabeledExample};
use super::mlp::{init_model, loss_bce, Dropout, Gradients, MlpError, MlpInput, MlpModel};
use crate::social::{SocialGraph, SubjectId};

/// Training hyperparameters. The defaults are the ones used throughout the
/// evaluation protocol; every field can be overridden.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub dropout_rate: f64,
    pub learning_rate: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            dropout_rate: 0.1,
            learning_rate: 1e-3,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), MlpError> {
        if self.epochs < 1 {
            return Err(MlpError::InvalidConfig { reason: "epochs must be at least 1" });
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(MlpError::InvalidConfig { reason: "dropout_rate must be in [0, 1)" });
        }
        if !(self.learning_rate > 0.0) {
            return Err(MlpError::InvalidConfig { reason: "learning_rate must be positive" });
        }
        if !(self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0) {
            return Err(MlpError::InvalidConfig { reason: "rmsprop_decay must be in (0, 1)" });
        }
        if !(self.rmsprop_epsilon > 0.0) {
            return Err(MlpError::InvalidConfig { reason: "rmsprop_epsilon must be positive" });
        }
        if self.batch_size < 1 {
            return Err(MlpError::InvalidConfig { reason: "batch_size must be at least 1" });
        }
        Ok(())
    }
}

/// Per-parameter running mean of squared gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsPropState {
    mean_square: Gradients,
}

impl RmsPropState {
    pub fn new(model: &MlpModel) -> Self {
        Self { mean_square: Gradients::zeros_like(model) }
    }
}

/// One optimizer step: `s <- decay*s + (1-decay)*g^2`, then
/// `param <- param - lr * g / (sqrt(s) + eps)` for every parameter.
pub fn rmsprop_step(
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut RmsPropState,
    cfg: &TrainConfig,
) {
    let decay = cfg.rmsprop_decay;
    let lr = cfg.learning_rate;
    let eps = cfg.rmsprop_epsilon;
    let update = |param: &mut f64, s: &mut f64, g: f64| {
        *s = decay * *s + (1.0 - decay) * g * g;
        *param -= lr * g / (s.sqrt() + eps);
    };
    for layer in 0..grads.weights.len() {
        let params = &mut model.weights_mut()[layer];
        let states = &mut state.mean_square.weights[layer];
        for ((p, s), &g) in params.iter_mut().zip(states.iter_mut()).zip(&grads.weights[layer]) {
            update(p, s, g);
        }
    }
    for layer in 0..grads.biases.len() {
        let params = &mut model.biases_mut()[layer];
        let states = &mut state.mean_square.biases[layer];
        for ((p, s), &g) in params.iter_mut().zip(states.iter_mut()).zip(&grads.biases[layer]) {
            update(p, s, g);
        }
    }
}

/// Hidden widths that halve layer by layer, e.g. `(128, 3)` -> `[128, 64, 32]`.
pub fn tower_layers(first_hidden: usize, depth: usize) -> Vec<usize> {
    let mut widths = Vec::with_capacity(depth);
    let mut w = first_hidden;
    for _ in 0..depth {
        widths.push(w.max(1));
        w /= 2;
    }
    widths
}

/// The default architecture for a graph of `n_subjects`:
/// `[2N, 128, 64, 32, 1]`.
pub fn default_tower(n_subjects: usize) -> Vec<usize> {
    let mut sizes = vec![2 * n_subjects];
    sizes.extend(tower_layers(128, 3));
    sizes.push(1);
    sizes
}

/// Trains a model on every example; see [`fit_subset`].
pub fn fit(
    examples: &[LabeledExample],
    layer_sizes: &[usize],
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<f64>), MlpError> {
    let all: Vec<usize> = (0..examples.len()).collect();
    fit_subset(examples, &all, layer_sizes, cfg)
}

/// Trains a fresh model on `examples[indices]` by mini-batch gradient
/// descent under RMSProp, shuffling each epoch with a seeded generator and
/// running exactly `cfg.epochs` epochs. Returns the model and the per-epoch
/// mean training loss.
pub fn fit_subset(
    examples: &[LabeledExample],
    indices: &[usize],
    layer_sizes: &[usize],
    cfg: &TrainConfig,
) -> Result<(MlpModel, Vec<f64>), MlpError> {
    cfg.validate()?;
    if indices.is_empty() {
        return Err(MlpError::NoExamples);
    }
    let expected = examples[indices[0]].features.len();
    if layer_sizes.first().copied() != Some(expected) {
        return Err(MlpError::InputDimensionMismatch {
            expected,
            got: layer_sizes.first().copied().unwrap_or(0),
        });
    }

    // One master stream: initialization first, then shuffling and dropout.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let init_seed = rng.next_u64();
    let mut model = init_model(layer_sizes, init_seed)?;
    let mut state = RmsPropState::new(&model);

    let ones: Vec<Vec<usize>> =
        indices.iter().map(|&i| examples[i].features.one_indices()).collect();
    let labels: Vec<bool> = indices.iter().map(|&i| examples[i].label).collect();

    let mut order: Vec<usize> = (0..indices.len()).collect();
    let mut grads = Gradients::zeros_like(&model);
    let mut loss_trace = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.fill_zero();
            for &k in batch {
                let dropout = (cfg.dropout_rate > 0.0)
                    .then(|| Dropout { rate: cfg.dropout_rate, rng: &mut rng });
                let (y_hat, cache) =
                    model.forward(MlpInput::Indicator(&ones[k]), dropout)?;
                epoch_loss += loss_bce(y_hat, labels[k]);
                model.accumulate_gradients(&cache, labels[k], &mut grads)?;
            }
            grads.scale(1.0 / batch.len() as f64);
            rmsprop_step(&mut model, &grads, &mut state, cfg);
        }
        loss_trace.push(epoch_loss / indices.len() as f64);
    }

    Ok((model, loss_trace))
}

/// Scores one (subject, active-friend set) case with a trained model:
/// encode, then forward without dropout.
pub fn predict_proba(
    model: &MlpModel,
    graph: &SocialGraph,
    subject: SubjectId,
    active: &[SubjectId],
) -> Result<f64, PredictProbaError> {
    let features = encode_input(graph, subject, active)?;
    let (y_hat, _) = model.forward_features(&features, None)?;
    Ok(y_hat)
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PredictProbaError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Model(#[from] MlpError),
}
