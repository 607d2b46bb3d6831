//! Independence-assuming baseline models.
//!
//! All baselines share one scoring rule: the noisy-or combination of the
//! active friends' edge probabilities, thresholded to decide activation.
//! They differ only in how the per-edge probabilities are estimated — static
//! propagation ratios ([`estimate_bd`], [`estimate_ji`], [`estimate_pc`]) or
//! expectation-maximization over cascade episodes ([`ic_em_fit`]).

mod combine;
mod estimators;
mod icem;
mod predict;

pub use combine::{combine_joint_probability, ProbabilityError};
pub use estimators::{
    estimate_bd, estimate_ji, estimate_pc, EdgeProbabilities, EdgeProbabilityIoError,
    EstimatorKind, PartialCreditFlavor,
};
pub use icem::{episodes_from_log, ic_em_fit, EmError, Episode, IcEmConfig};
pub use predict::{ic_predict, lt_predict, Activation, LtConfig};
