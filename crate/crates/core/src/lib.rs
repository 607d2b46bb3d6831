//! Social-influence learning toolkit.
//!
//! Given a directed social graph (an edge `j -> i` means `j` can influence `i`)
//! and a log of timestamped actions, this crate learns how strongly friends
//! drive each other's behavior and predicts whether a subject performs an
//! action given their currently active friends.
//!
//! Two families of models share one prediction interface:
//!
//! * independence-assuming baselines: static edge-probability estimators
//!   (propagation ratio, Jaccard-normalized, and their partial-credit
//!   variants), a threshold activation rule over the noisy-or combination of
//!   active friends, and an EM-fitted cascade model;
//! * a feed-forward neural model over a one-hot subject vector concatenated
//!   with an active-friend indicator vector, trained with binary
//!   cross-entropy, which can pick up joint (non-independent) friend effects
//!   the baselines cannot express.
//!
//! The [`eval`] module runs per-subject stratified k-fold cross-validation
//! with ROC-based threshold selection and renders a side-by-side comparison
//! report. The [`synth`] module generates cascade worlds with planted ground
//! truth so every estimator can be checked against known probabilities.

pub mod baselines;
pub mod cli;
pub mod eval;
pub mod neural;
pub mod social;
pub mod synth;

pub use social::{ActionId, ActionLog, SocialGraph, SubjectId};
