use super::combine::{combine_joint_probability, ProbabilityError};
use super::estimators::EdgeProbabilities;
use crate::social::{SocialGraph, SubjectId};

/// Threshold-activation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LtConfig {
    /// Activation threshold in [0, 1]; the comparison is inclusive.
    pub theta: f64,
}

impl LtConfig {
    pub fn new(theta: f64) -> Self {
        assert!((0.0..=1.0).contains(&theta), "theta {theta} outside [0, 1]");
        Self { theta }
    }
}

/// Outcome of a threshold prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Activation {
    pub score: f64,
    pub active: bool,
}

fn joint_score(
    probs: &EdgeProbabilities,
    graph: &SocialGraph,
    active_friends: &[SubjectId],
    target: SubjectId,
) -> Result<f64, ProbabilityError> {
    // Friends without an edge into the target carry no probability and are
    // ignored; callers normally pass sets already intersected with the
    // in-neighborhood.
    let edge_probs: Vec<f64> = active_friends
        .iter()
        .filter_map(|&friend| probs.for_edge(graph, friend, target))
        .collect();
    combine_joint_probability(&edge_probs)
}

/// Threshold activation over the noisy-or combination of the active
/// friends' edge probabilities: active iff score >= theta.
pub fn lt_predict(
    probs: &EdgeProbabilities,
    graph: &SocialGraph,
    active_friends: &[SubjectId],
    target: SubjectId,
    cfg: &LtConfig,
) -> Result<Activation, ProbabilityError> {
    let score = joint_score(probs, graph, active_friends, target)?;
    Ok(Activation { score, active: score >= cfg.theta })
}

/// Same contract as [`lt_predict`], for probabilities fitted by the cascade
/// EM. Each active friend gets one independent chance, so the probability
/// that at least one succeeds is again the noisy-or combination.
pub fn ic_predict(
    probs: &EdgeProbabilities,
    graph: &SocialGraph,
    active_friends: &[SubjectId],
    target: SubjectId,
    threshold: f64,
) -> Result<Activation, ProbabilityError> {
    let score = joint_score(probs, graph, active_friends, target)?;
    Ok(Activation { score, active: score >= threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::estimators::EstimatorKind;
    use crate::social::load_graph;

    /// The four-friend star with hand-set weights; u3 stays inactive.
    fn star() -> (SocialGraph, EdgeProbabilities, SubjectId, Vec<SubjectId>) {
        let (g, _) = load_graph("u1\tu5\nu2\tu5\nu3\tu5\nu4\tu5\n".as_bytes()).unwrap();
        let u5 = g.subject_id("u5").unwrap();
        let mut values = vec![0.0; g.n_edges()];
        for (name, p) in [("u1", 0.7), ("u2", 0.4), ("u3", 0.8), ("u4", 0.2)] {
            let id = g.subject_id(name).unwrap();
            values[g.edge_index(id, u5).unwrap()] = p;
        }
        let probs = EdgeProbabilities::new(EstimatorKind::Bernoulli, values);
        let active: Vec<SubjectId> =
            ["u1", "u2", "u4"].iter().map(|n| g.subject_id(n).unwrap()).collect();
        (g, probs, u5, active)
    }

    #[test]
    fn star_activation_at_half_threshold() {
        let (g, probs, u5, active) = star();
        let outcome = lt_predict(&probs, &g, &active, u5, &LtConfig::new(0.5)).unwrap();
        assert!((outcome.score - 0.856).abs() < 1e-12);
        assert!(outcome.active);
    }

    #[test]
    fn zero_threshold_includes_zero_score() {
        let (g, probs, u5, _) = star();
        let outcome = lt_predict(&probs, &g, &[], u5, &LtConfig::new(0.0)).unwrap();
        assert_eq!(outcome.score, 0.0);
        assert!(outcome.active);
    }

    #[test]
    fn below_threshold_is_inactive() {
        let (g, _, u5, _) = star();
        let mut values = vec![0.0; g.n_edges()];
        let u1 = g.subject_id("u1").unwrap();
        values[g.edge_index(u1, u5).unwrap()] = 0.49;
        let probs = EdgeProbabilities::new(EstimatorKind::Bernoulli, values);
        let outcome = lt_predict(&probs, &g, &[u1], u5, &LtConfig::new(0.5)).unwrap();
        assert!((outcome.score - 0.49).abs() < 1e-15);
        assert!(!outcome.active);
    }

    #[test]
    fn ic_two_halves_against_seventy() {
        let (g, _) = load_graph("j\ti\nk\ti\n".as_bytes()).unwrap();
        let i = g.subject_id("i").unwrap();
        let j = g.subject_id("j").unwrap();
        let k = g.subject_id("k").unwrap();
        let probs = EdgeProbabilities::new(EstimatorKind::IcEm, vec![0.5, 0.5]);
        let outcome = ic_predict(&probs, &g, &[j, k], i, 0.7).unwrap();
        assert!((outcome.score - 0.75).abs() < 1e-15);
        assert!(outcome.active);

        assert_eq!(ic_predict(&probs, &g, &[], i, 0.7).unwrap().score, 0.0);
    }

    #[test]
    fn ic_boundary_is_inclusive() {
        let (g, _) = load_graph("j\ti\n".as_bytes()).unwrap();
        let i = g.subject_id("i").unwrap();
        let j = g.subject_id("j").unwrap();
        let probs = EdgeProbabilities::new(EstimatorKind::IcEm, vec![0.6]);
        let outcome = ic_predict(&probs, &g, &[j], i, 0.6).unwrap();
        assert!(outcome.active);
    }

    #[test]
    fn friends_without_edges_are_ignored() {
        let (g, _) = load_graph("j\ti\nx\ty\n".as_bytes()).unwrap();
        let i = g.subject_id("i").unwrap();
        let j = g.subject_id("j").unwrap();
        let x = g.subject_id("x").unwrap();
        let mut values = vec![0.0; g.n_edges()];
        values[g.edge_index(j, i).unwrap()] = 0.3;
        let probs = EdgeProbabilities::new(EstimatorKind::Bernoulli, values);
        let with_stranger = lt_predict(&probs, &g, &[j, x], i, &LtConfig::new(0.5)).unwrap();
        let without = lt_predict(&probs, &g, &[j], i, &LtConfig::new(0.5)).unwrap();
        assert_eq!(with_stranger, without);
    }
}
