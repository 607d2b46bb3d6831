//! Feed-forward neural influence model.
//!
//! A subject and their active friends are encoded as two concatenated
//! length-N indicator vectors — a one-hot subject identity and an
//! active-friend mask restricted to in-neighbors — and fed through a
//! rectifier tower with a logistic output trained under binary
//! cross-entropy. Unlike the noisy-or baselines, the hidden layers can
//! represent joint friend effects, where the influence of one friend
//! depends on another.
//!
//! Everything here is deliberately deterministic: initialization, dropout,
//! shuffling, and negative sampling all derive from explicit seeds, so a
//! (seed, data, config) triple fully determines the trained model.

mod encode;
mod mlp;
mod model_io;
mod train;

pub use encode::{
    build_training_set, encode_input, EncodeError, FeatureVector, LabeledExample, NegativeRule,
    TrainingSetReport,
};
pub use mlp::{
    init_model, loss_bce, Dropout, ForwardCache, Gradients, MlpError, MlpInput, MlpModel,
};
pub use model_io::{read_model, write_model, ModelFileMeta, ModelIoError};
pub use train::{
    default_tower, fit, fit_subset, predict_proba, rmsprop_step, tower_layers, PredictProbaError,
    RmsPropState, TrainConfig,
};
