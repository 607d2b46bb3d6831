//! Social graph and action-log layer.
//!
//! Everything downstream (baseline estimators, the neural model, the
//! evaluation protocol) consumes the types built here: a dense-id directed
//! graph, a deduplicated action log, per-edge propagation statistics, and
//! per-(subject, action) active-friend sets.

mod filter;
mod graph;
mod ids;
mod ingest;
mod log;
mod scan;

pub use filter::{filter_dataset, FilterError, FilterReport};
pub use graph::{GraphBuildStats, SocialGraph};
pub use ids::{ActionId, IdMap, SubjectId};
pub use ingest::{
    load_actions, load_graph, write_actions, write_graph, ActionLoadStats, GraphLoadStats,
    IngestError,
};
pub use log::{ActionLog, ActionRecord, TimestampMode};
pub use scan::{active_friends, scan_propagation, EdgePropagation, PropagationStats, ScanError,
    ScanOptions};
