use thiserror::Error;

use super::estimators::{EdgeProbabilities, EstimatorKind};
use crate::social::{ActionId, ActionLog, SocialGraph, SubjectId, TimestampMode};

#[derive(Debug, Error, PartialEq)]
pub enum EmError {
    #[error("no episodes to fit on")]
    NoEpisodes,
    #[error("episode references subject {subject} outside the graph")]
    UnknownSubject { subject: SubjectId },
    #[error("episode activations are not in non-decreasing timestamp order")]
    UnorderedActivations,
    #[error("subject {subject} appears more than once in an episode")]
    DuplicateActivation { subject: SubjectId },
    #[error("cascade fitting needs activation order; the log has no usable timestamps")]
    MissingTimestamps,
    #[error("invalid config: {reason}")]
    InvalidConfig { reason: &'static str },
}

/// Time-ordered activation history of one action across all subjects.
#[derive(Clone, Debug)]
pub struct Episode {
    pub action: ActionId,
    /// `(subject, timestamp)` sorted by timestamp (ties by subject id).
    pub activations: Vec<(SubjectId, i64)>,
}

impl Episode {
    fn validate(&self, n_subjects: usize) -> Result<(), EmError> {
        let mut prev_ts = i64::MIN;
        let mut seen: Vec<bool> = vec![false; n_subjects];
        for &(subject, ts) in &self.activations {
            if subject.index() >= n_subjects {
                return Err(EmError::UnknownSubject { subject });
            }
            if ts < prev_ts {
                return Err(EmError::UnorderedActivations);
            }
            prev_ts = ts;
            if seen[subject.index()] {
                return Err(EmError::DuplicateActivation { subject });
            }
            seen[subject.index()] = true;
        }
        Ok(())
    }
}

/// One episode per action, activations in timestamp order. Requires a fully
/// timestamped log: co-performance without order cannot anchor the cascade
/// structure EM needs.
pub fn episodes_from_log(log: &ActionLog) -> Result<Vec<Episode>, EmError> {
    if log.n_records() == 0 {
        return Err(EmError::NoEpisodes);
    }
    if log.timestamp_mode() != TimestampMode::Full {
        return Err(EmError::MissingTimestamps);
    }
    let mut episodes = Vec::with_capacity(log.n_actions());
    for a in 0..log.n_actions() {
        let action = ActionId::new(a as u32);
        let mut activations: Vec<(SubjectId, i64)> = log
            .performers(action)
            .iter()
            .map(|&(s, ts)| (s, ts.expect("full timestamp mode")))
            .collect();
        activations.sort_by_key(|&(s, ts)| (ts, s));
        episodes.push(Episode { action, activations });
    }
    Ok(episodes)
}

/// Expectation-maximization settings for cascade-probability fitting.
#[derive(Clone, Copy, Debug)]
pub struct IcEmConfig {
    pub max_iters: usize,
    /// Absolute log-likelihood change below which iteration stops.
    pub ll_tolerance: f64,
    /// Uniform starting probability; must be strictly inside (0, 1), since 0
    /// is an absorbing point of the update.
    pub init_p: f64,
}

impl Default for IcEmConfig {
    fn default() -> Self {
        Self { max_iters: 200, ll_tolerance: 1e-9, init_p: 0.5 }
    }
}

impl IcEmConfig {
    fn validate(&self) -> Result<(), EmError> {
        if self.max_iters < 1 {
            return Err(EmError::InvalidConfig { reason: "max_iters must be at least 1" });
        }
        if !(self.ll_tolerance > 0.0) {
            return Err(EmError::InvalidConfig { reason: "ll_tolerance must be positive" });
        }
        if !(self.init_p > 0.0 && self.init_p < 1.0) {
            return Err(EmError::InvalidConfig { reason: "init_p must lie strictly in (0, 1)" });
        }
        Ok(())
    }
}

/// One observed activation with its candidate influencers: the edges from
/// friends active strictly before the target.
struct ActivationEvent {
    edges: Vec<u32>,
}

/// Fits per-edge influence probabilities by EM over episodes.
///
/// For each episode, a subject that activated with at least one prior-active
/// friend contributes an explained activation; a subject that never
/// activated contributes one failed trial per active friend. The E-step
/// assigns each candidate edge the posterior probability that its coin came
/// up heads given that at least one did; the M-step sets each edge to its
/// mean responsibility over all trials. Returns the probabilities and the
/// log-likelihood trace, which is non-decreasing.
pub fn ic_em_fit(
    episodes: &[Episode],
    graph: &SocialGraph,
    cfg: &IcEmConfig,
) -> Result<(EdgeProbabilities, Vec<f64>), EmError> {
    cfg.validate()?;
    if episodes.is_empty() {
        return Err(EmError::NoEpisodes);
    }
    for episode in episodes {
        episode.validate(graph.n_subjects())?;
    }

    let n_edges = graph.n_edges();
    // Trial structure is fixed by the data; only responsibilities move.
    let mut events: Vec<ActivationEvent> = Vec::new();
    let mut failures = vec![0u64; n_edges];
    let mut trials = vec![0u64; n_edges];

    let mut activation_ts: Vec<Option<i64>> = vec![None; graph.n_subjects()];
    for episode in episodes {
        for &(subject, ts) in &episode.activations {
            activation_ts[subject.index()] = Some(ts);
        }
        for &(subject, ts) in &episode.activations {
            let edges: Vec<u32> = graph
                .in_neighbors(subject)
                .iter()
                .filter(|&&friend| {
                    activation_ts[friend.index()].is_some_and(|friend_ts| friend_ts < ts)
                })
                .map(|&friend| graph.edge_index(friend, subject).expect("in-neighbor edge") as u32)
                .collect();
            if edges.is_empty() {
                continue; // unexplained (seed) adoption; carries no signal
            }
            for &e in &edges {
                trials[e as usize] += 1;
            }
            events.push(ActivationEvent { edges });
        }
        // Every active subject had one failed chance at each inactive
        // out-neighbor.
        for &(subject, _) in &episode.activations {
            for &target in graph.out_neighbors(subject) {
                if activation_ts[target.index()].is_none() {
                    let e = graph.edge_index(subject, target).expect("out-neighbor edge");
                    failures[e] += 1;
                    trials[e] += 1;
                }
            }
        }
        for &(subject, _) in &episode.activations {
            activation_ts[subject.index()] = None;
        }
    }

    let mut probs = vec![cfg.init_p; n_edges];
    let log_likelihood = |probs: &[f64]| -> f64 {
        let mut ll = 0.0;
        for event in &events {
            let mut none = 1.0;
            for &e in &event.edges {
                none *= 1.0 - probs[e as usize];
            }
            ll += (1.0 - none).ln();
        }
        for (e, &count) in failures.iter().enumerate() {
            if count > 0 {
                ll += count as f64 * (1.0 - probs[e]).ln();
            }
        }
        ll
    };

    let mut trace = vec![log_likelihood(&probs)];
    let mut responsibilities = vec![0.0f64; n_edges];
    for _ in 0..cfg.max_iters {
        responsibilities.fill(0.0);
        for event in &events {
            let mut none = 1.0;
            for &e in &event.edges {
                none *= 1.0 - probs[e as usize];
            }
            let explained = 1.0 - none;
            for &e in &event.edges {
                responsibilities[e as usize] += probs[e as usize] / explained;
            }
        }
        for e in 0..n_edges {
            if trials[e] > 0 {
                probs[e] = responsibilities[e] / trials[e] as f64;
            }
        }
        let ll = log_likelihood(&probs);
        let delta = ll - trace.last().copied().expect("trace starts non-empty");
        trace.push(ll);
        if delta.abs() < cfg.ll_tolerance {
            break;
        }
    }

    // Edges that never got a trial carry no evidence of influence.
    for e in 0..n_edges {
        if trials[e] == 0 {
            probs[e] = 0.0;
        }
    }

    Ok((EdgeProbabilities::new(EstimatorKind::IcEm, probs), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::social::{load_actions, load_graph};

    fn single_edge_graph() -> SocialGraph {
        let (g, _) = load_graph("j\ti\n".as_bytes()).unwrap();
        g
    }

    fn single_edge_episodes(n_total: usize, n_followed: usize) -> Vec<Episode> {
        let j = SubjectId::new(0);
        let i = SubjectId::new(1);
        (0..n_total)
            .map(|k| Episode {
                action: ActionId::new(k as u32),
                activations: if k < n_followed {
                    vec![(j, 0), (i, 1)]
                } else {
                    vec![(j, 0)]
                },
            })
            .collect()
    }

    #[test]
    fn single_edge_converges_to_empirical_frequency() {
        let g = single_edge_graph();
        let episodes = single_edge_episodes(10, 7);
        let (probs, trace) = ic_em_fit(&episodes, &g, &IcEmConfig::default()).unwrap();
        assert!((probs.value(0) - 0.7).abs() < 1e-6);
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9, "log-likelihood decreased: {pair:?}");
        }
    }

    #[test]
    fn initializing_at_the_optimum_stops_after_one_iteration() {
        let g = single_edge_graph();
        let episodes = single_edge_episodes(10, 7);
        let cfg = IcEmConfig { init_p: 0.7, ..IcEmConfig::default() };
        let (probs, trace) = ic_em_fit(&episodes, &g, &cfg).unwrap();
        assert!((probs.value(0) - 0.7).abs() < 1e-12);
        // One E/M cycle confirms the fixed point: trace holds the initial
        // value and one post-update value, equal to each other.
        assert_eq!(trace.len(), 2);
        assert!((trace[1] - trace[0]).abs() < 1e-12);
    }

    #[test]
    fn untried_edges_get_zero() {
        let (g, _) = load_graph("j\ti\nx\ty\n".as_bytes()).unwrap();
        let j = g.subject_id("j").unwrap();
        let i = g.subject_id("i").unwrap();
        let episodes = vec![Episode {
            action: ActionId::new(0),
            activations: vec![(j, 0), (i, 1)],
        }];
        let (probs, _) = ic_em_fit(&episodes, &g, &IcEmConfig::default()).unwrap();
        let x = g.subject_id("x").unwrap();
        let y = g.subject_id("y").unwrap();
        assert_eq!(probs.for_edge(&g, x, y).unwrap(), 0.0);
        assert_eq!(probs.for_edge(&g, j, i).unwrap(), 1.0);
    }

    #[test]
    fn empty_and_invalid_inputs_are_rejected() {
        let g = single_edge_graph();
        assert_eq!(
            ic_em_fit(&[], &g, &IcEmConfig::default()).unwrap_err(),
            EmError::NoEpisodes
        );
        let bad = Episode {
            action: ActionId::new(0),
            activations: vec![(SubjectId::new(9), 0)],
        };
        assert!(matches!(
            ic_em_fit(&[bad], &g, &IcEmConfig::default()).unwrap_err(),
            EmError::UnknownSubject { .. }
        ));
        let cfg = IcEmConfig { init_p: 0.0, ..IcEmConfig::default() };
        assert!(matches!(
            ic_em_fit(&single_edge_episodes(1, 1), &g, &cfg).unwrap_err(),
            EmError::InvalidConfig { .. }
        ));
    }

    #[test]
    fn episodes_require_full_timestamps() {
        let (g, _) = load_graph("j\ti\n".as_bytes()).unwrap();
        let (log, _) = load_actions("j\ta\ni\ta\n".as_bytes(), &g).unwrap();
        assert_eq!(episodes_from_log(&log).unwrap_err(), EmError::MissingTimestamps);

        let (log, _) = load_actions("j\ta\t1\ni\ta\t2\nj\tb\t3\n".as_bytes(), &g).unwrap();
        let episodes = episodes_from_log(&log).unwrap();
        assert_eq!(episodes.len(), 2);
        assert_eq!(episodes[0].activations.len(), 2);
        assert_eq!(episodes[0].activations[0].1, 1);
    }
}
