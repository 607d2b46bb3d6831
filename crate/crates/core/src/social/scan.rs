use std::collections::HashMap;

use thiserror::Error;

use super::graph::SocialGraph;
use super::ids::{ActionId, SubjectId};
use super::log::{ActionLog, TimestampMode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScanError {
    #[error("log has no timestamps; enable timestamp-free mode to scan by co-performance")]
    MissingTimestamps,
    #[error("log mixes timestamped and untimestamped records; mixed mode is rejected")]
    MixedTimestamps,
    #[error("a propagation window requires timestamps; it cannot be combined with timestamp-free mode")]
    WindowWithoutTimestamps,
}

/// How propagation is counted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ScanOptions {
    /// Count co-performance as propagation in both directions instead of
    /// requiring a strict timestamp order. Never inferred from the data.
    pub timestamp_free: bool,
    /// Optional bound, in timestamp units, on how long before the target's
    /// activation a friend's activation still counts as influence.
    pub window: Option<i64>,
}

/// Per-edge propagation counters for edge `(source -> target)`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgePropagation {
    /// Number of actions performed by the source.
    pub source_actions: u32,
    /// Number of actions performed by the target.
    pub target_actions: u32,
    /// Actions performed by both where the source qualified as an influencer
    /// (strictly earlier, within the window if one is set; co-performance in
    /// timestamp-free mode).
    pub propagated: u32,
    /// Size of the union of the two subjects' action sets.
    pub union_actions: u32,
    /// Propagations weighted by 1/|influencers|, for partial-credit
    /// estimators.
    pub credited: f64,
}

/// Propagation statistics over every edge of a graph, plus the per-(target,
/// action) influencer counts that partial-credit estimators divide by.
#[derive(Clone, Debug)]
pub struct PropagationStats {
    options: ScanOptions,
    per_edge: Vec<EdgePropagation>,
    influencer_counts: HashMap<(SubjectId, ActionId), u32>,
}

impl PropagationStats {
    pub fn options(&self) -> ScanOptions {
        self.options
    }

    pub fn n_edges(&self) -> usize {
        self.per_edge.len()
    }

    pub fn edge(&self, edge_index: usize) -> &EdgePropagation {
        &self.per_edge[edge_index]
    }

    pub fn edges(&self) -> &[EdgePropagation] {
        &self.per_edge
    }

    /// Number of friends that qualified as influencers of `target` on
    /// `action`; 0 if the target did not perform the action or no friend
    /// qualified.
    pub fn influencer_count(&self, target: SubjectId, action: ActionId) -> u32 {
        self.influencer_counts.get(&(target, action)).copied().unwrap_or(0)
    }
}

/// Whether `source`'s record qualifies as influence on a target activation
/// at `target_ts` under the given options.
fn qualifies(
    source_ts: Option<i64>,
    target_ts: Option<i64>,
    options: ScanOptions,
) -> bool {
    if options.timestamp_free {
        return true;
    }
    let (Some(s), Some(t)) = (source_ts, target_ts) else {
        return false;
    };
    if s >= t {
        return false;
    }
    match options.window {
        Some(w) => t - s <= w,
        None => true,
    }
}

/// Scans the log once and produces per-edge propagation counters.
///
/// With timestamps, source-before-target is strict: equal timestamps count
/// as no propagation in either direction. In timestamp-free mode every
/// co-performed action counts as propagation both ways.
pub fn scan_propagation(
    graph: &SocialGraph,
    log: &ActionLog,
    options: ScanOptions,
) -> Result<PropagationStats, ScanError> {
    if options.timestamp_free {
        if options.window.is_some() {
            return Err(ScanError::WindowWithoutTimestamps);
        }
    } else {
        match log.timestamp_mode() {
            TimestampMode::Full => {}
            TimestampMode::Absent if log.n_records() == 0 => {}
            TimestampMode::Absent => return Err(ScanError::MissingTimestamps),
            TimestampMode::Mixed => return Err(ScanError::MixedTimestamps),
        }
    }

    let mut per_edge = vec![EdgePropagation::default(); graph.n_edges()];
    let mut influencer_counts: HashMap<(SubjectId, ActionId), u32> = HashMap::new();

    // Influencer pass: for each activation of a target, find which friends
    // qualified, then split credit equally among them.
    let mut qualified_edges: Vec<usize> = Vec::new();
    for t in 0..graph.n_subjects() {
        let target = SubjectId::new(t as u32);
        let friends = graph.in_neighbors(target);
        if friends.is_empty() {
            continue;
        }
        let in_base = graph.edge_index(friends[0], target).expect("first in-edge exists");
        for &(action, target_ts) in log.actions_of(target) {
            qualified_edges.clear();
            for (offset, &friend) in friends.iter().enumerate() {
                let Some(friend_ts) = log.timestamp_of(friend, action) else {
                    continue;
                };
                if qualifies(friend_ts, target_ts, options) {
                    qualified_edges.push(in_base + offset);
                }
            }
            if qualified_edges.is_empty() {
                continue;
            }
            let count = qualified_edges.len() as u32;
            influencer_counts.insert((target, action), count);
            let credit = 1.0 / f64::from(count);
            for &edge in &qualified_edges {
                per_edge[edge].propagated += 1;
                per_edge[edge].credited += credit;
            }
        }
    }

    // Per-edge set sizes.
    for (edge_index, (source, target)) in graph.edges().enumerate() {
        let a_source = log.actions_of(source);
        let a_target = log.actions_of(target);
        let mut shared = 0usize;
        let (mut i, mut j) = (0usize, 0usize);
        while i < a_source.len() && j < a_target.len() {
            match a_source[i].0.cmp(&a_target[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    shared += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let stats = &mut per_edge[edge_index];
        stats.source_actions = a_source.len() as u32;
        stats.target_actions = a_target.len() as u32;
        stats.union_actions = (a_source.len() + a_target.len() - shared) as u32;
        debug_assert!(stats.propagated <= stats.source_actions.min(stats.target_actions));
        debug_assert!(stats.union_actions >= stats.source_actions.max(stats.target_actions));
    }

    Ok(PropagationStats { options, per_edge, influencer_counts })
}

/// In-neighbors of `subject` that performed `action`, ascending.
///
/// With `before` set, only friends with a timestamp strictly earlier than
/// `before` qualify; untimestamped records never do.
pub fn active_friends(
    graph: &SocialGraph,
    log: &ActionLog,
    subject: SubjectId,
    action: ActionId,
    before: Option<i64>,
) -> Vec<SubjectId> {
    graph
        .in_neighbors(subject)
        .iter()
        .copied()
        .filter(|&friend| match log.timestamp_of(friend, action) {
            None => false,
            Some(ts) => match before {
                None => true,
                Some(cutoff) => ts.is_some_and(|t| t < cutoff),
            },
        })
        .collect()
}
