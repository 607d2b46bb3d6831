use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::social::{active_friends, ActionId, ActionLog, SocialGraph, SubjectId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("subject {subject} outside the graph")]
    UnknownSubject { subject: SubjectId },
    #[error("active friend {friend} is not an in-neighbor of subject {subject}")]
    NotAnInNeighbor { friend: SubjectId, subject: SubjectId },
}

/// Network input for one (subject, active-friend set) pair.
///
/// Logically a length-2N binary vector: the first N entries one-hot encode
/// the subject, the last N mark active friends. Only edges present in the
/// graph may be marked, which [`encode_input`] enforces. Stored sparsely;
/// [`FeatureVector::one_indices`] and [`FeatureVector::to_dense`] expose the
/// vector itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureVector {
    n_subjects: usize,
    subject: SubjectId,
    active_friends: Vec<SubjectId>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        2 * self.n_subjects
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_subjects(&self) -> usize {
        self.n_subjects
    }

    pub fn subject(&self) -> SubjectId {
        self.subject
    }

    pub fn active_friends(&self) -> &[SubjectId] {
        &self.active_friends
    }

    /// Indices of the entries equal to one, ascending.
    pub fn one_indices(&self) -> Vec<usize> {
        let mut ones = Vec::with_capacity(1 + self.active_friends.len());
        ones.push(self.subject.index());
        ones.extend(self.active_friends.iter().map(|f| self.n_subjects + f.index()));
        ones
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.len()];
        for idx in self.one_indices() {
            dense[idx] = 1.0;
        }
        dense
    }
}

/// Builds the concatenated subject/active-friend input vector, rejecting
/// friends that are not in-neighbors of the subject.
pub fn encode_input(
    graph: &SocialGraph,
    subject: SubjectId,
    active: &[SubjectId],
) -> Result<FeatureVector, EncodeError> {
    if subject.index() >= graph.n_subjects() {
        return Err(EncodeError::UnknownSubject { subject });
    }
    let mut friends: Vec<SubjectId> = active.to_vec();
    friends.sort_unstable();
    friends.dedup();
    for &friend in &friends {
        if !graph.has_edge(friend, subject) {
            return Err(EncodeError::NotAnInNeighbor { friend, subject });
        }
    }
    Ok(FeatureVector { n_subjects: graph.n_subjects(), subject, active_friends: friends })
}

/// One training or evaluation case: the encoded input plus whether the
/// subject actually performed the action.
#[derive(Clone, Debug)]
pub struct LabeledExample {
    pub subject: SubjectId,
    pub action: ActionId,
    pub features: FeatureVector,
    pub label: bool,
}

/// How many negative samples to draw per subject.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NegativeRule {
    /// As many negatives as the subject has positives.
    MatchPositives,
    /// A fixed count per subject.
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrainingSetReport {
    pub positives: usize,
    pub negatives: usize,
    /// Subjects with fewer candidate negative actions than requested; all
    /// available candidates were taken instead.
    pub subjects_with_shortfall: usize,
}

/// Builds the labeled example set: one positive per performed action, plus
/// seeded uniform negatives drawn without replacement from the actions the
/// subject did not perform.
///
/// For positives, the active-friend set is taken strictly before the
/// subject's own activation when the record is timestamped (and
/// `timestamp_free` is off). For negatives there is no activation to cut
/// at, so every friend that performed the action counts.
pub fn build_training_set(
    graph: &SocialGraph,
    log: &ActionLog,
    rule: NegativeRule,
    timestamp_free: bool,
    seed: u64,
) -> (Vec<LabeledExample>, TrainingSetReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::new();
    let mut report = TrainingSetReport::default();

    for s in 0..graph.n_subjects() {
        let subject = SubjectId::new(s as u32);
        let performed = log.actions_of(subject);

        for &(action, ts) in performed {
            let cutoff = if timestamp_free { None } else { ts };
            let friends = active_friends(graph, log, subject, action, cutoff);
            let features = encode_input(graph, subject, &friends)
                .expect("active friends are in-neighbors by construction");
            examples.push(LabeledExample { subject, action, features, label: true });
            report.positives += 1;
        }

        let wanted = match rule {
            NegativeRule::MatchPositives => performed.len(),
            NegativeRule::Fixed(n) => n,
        };
        if wanted == 0 {
            continue;
        }
        let candidates: Vec<ActionId> = (0..log.n_actions() as u32)
            .map(ActionId::new)
            .filter(|&a| !log.performed(subject, a))
            .collect();
        let taken = if candidates.len() <= wanted {
            if candidates.len() < wanted {
                report.subjects_with_shortfall += 1;
            }
            candidates
        } else {
            let mut picked = rand::seq::index::sample(&mut rng, candidates.len(), wanted)
                .into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| candidates[i]).collect()
        };
        for action in taken {
            let friends = active_friends(graph, log, subject, action, None);
            let features = encode_input(graph, subject, &friends)
                .expect("active friends are in-neighbors by construction");
            examples.push(LabeledExample { subject, action, features, label: false });
            report.negatives += 1;
        }
    }

    (examples, report)
}
