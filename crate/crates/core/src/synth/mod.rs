//! Synthetic cascade worlds with planted ground truth.
//!
//! Estimators and the neural model are validated against generated data
//! where the true influence probabilities are known: random directed graphs
//! with per-edge probabilities, independent-cascade episode generation, and
//! a dependent variant where chosen targets activate only when BOTH sources
//! of a planted pair are active — the joint effect the independence-assuming
//! baselines cannot express.

mod cascades;
mod world;

pub use cascades::{generate_dependent_episodes, generate_ic_episodes};
pub use world::{
    generate_graph, write_world_manifest, AndPair, PlantedWorld, SynthError, WorldKind,
};
