use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::neural::LabeledExample;

use super::runner::EvalError;

/// Assignment of example indices to k folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldSplit {
    k: usize,
    assignment: Vec<usize>,
}

impl FoldSplit {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_examples(&self) -> usize {
        self.assignment.len()
    }

    pub fn fold_of(&self, example: usize) -> usize {
        self.assignment[example]
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Splits examples into k folds preserving, per subject, the balance of
/// positive and negative examples: within every (subject, label) group the
/// per-fold counts differ by at most one.
///
/// Each group is shuffled with the seeded generator and dealt round-robin;
/// the dealing position carries over between groups so fold sizes stay
/// balanced overall.
pub fn stratified_kfold(
    examples: &[LabeledExample],
    k: usize,
    seed: u64,
) -> Result<FoldSplit, EvalError> {
    if k < 2 {
        return Err(EvalError::InvalidFoldCount { k });
    }
    if examples.is_empty() {
        return Err(EvalError::NoExamples);
    }

    let mut groups: BTreeMap<(u32, bool), Vec<usize>> = BTreeMap::new();
    for (idx, example) in examples.iter().enumerate() {
        groups.entry((example.subject.value(), example.label)).or_default().push(idx);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; examples.len()];
    let mut next_fold = 0usize;
    for (_, mut indices) in groups {
        indices.shuffle(&mut rng);
        for idx in indices {
            assignment[idx] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldSplit { k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{encode_input, LabeledExample};
    use crate::social::{ActionId, IdMap, SocialGraph, SubjectId};

    /// `counts[s]` = (positives, negatives) for subject s; subjects are laid
    /// out in a cycle so everyone has an in-neighbor.
    fn examples_for(counts: &[(usize, usize)]) -> Vec<LabeledExample> {
        let n = counts.len().max(2);
        let ids = IdMap::dense(n);
        let edges: Vec<(SubjectId, SubjectId)> = (0..n)
            .map(|i| (SubjectId::new(i as u32), SubjectId::new(((i + 1) % n) as u32)))
            .collect();
        let (graph, _) = SocialGraph::build(ids, edges);
        let mut examples = Vec::new();
        let mut action = 0u32;
        for (s, &(pos, neg)) in counts.iter().enumerate() {
            let subject = SubjectId::new(s as u32);
            for label in [true, false] {
                let count = if label { pos } else { neg };
                for _ in 0..count {
                    examples.push(LabeledExample {
                        subject,
                        action: ActionId::new(action),
                        features: encode_input(&graph, subject, &[]).unwrap(),
                        label,
                    });
                    action += 1;
                }
            }
        }
        examples
    }

    fn per_fold_counts(
        examples: &[LabeledExample],
        split: &FoldSplit,
        subject: u32,
        label: bool,
    ) -> Vec<usize> {
        (0..split.k())
            .map(|f| {
                split
                    .test_indices(f)
                    .iter()
                    .filter(|&&i| {
                        examples[i].subject.value() == subject && examples[i].label == label
                    })
                    .count()
            })
            .collect()
    }

    #[test]
    fn exact_divisibility_gives_equal_folds() {
        let examples = examples_for(&[(20, 20)]);
        let split = stratified_kfold(&examples, 10, 1).unwrap();
        assert_eq!(per_fold_counts(&examples, &split, 0, true), vec![2; 10]);
        assert_eq!(per_fold_counts(&examples, &split, 0, false), vec![2; 10]);
    }

    #[test]
    fn remainder_spreads_within_one() {
        let examples = examples_for(&[(21, 0)]);
        let split = stratified_kfold(&examples, 10, 1).unwrap();
        let counts = per_fold_counts(&examples, &split, 0, true);
        assert!(counts.iter().all(|&c| c == 2 || c == 3), "{counts:?}");
        assert_eq!(counts.iter().sum::<usize>(), 21);
    }

    #[test]
    fn folds_partition_the_index_set() {
        let examples = examples_for(&[(7, 5), (3, 9), (1, 1)]);
        let split = stratified_kfold(&examples, 4, 3).unwrap();
        let mut seen = vec![false; examples.len()];
        for f in 0..4 {
            for idx in split.test_indices(f) {
                assert!(!seen[idx], "index {idx} in two folds");
                seen[idx] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        // train(f) is exactly the complement of test(f).
        let train = split.train_indices(1);
        let test = split.test_indices(1);
        assert_eq!(train.len() + test.len(), examples.len());
        assert!(train.iter().all(|i| !test.contains(i)));
    }

    #[test]
    fn equal_seeds_reproduce_the_split() {
        let examples = examples_for(&[(10, 10), (5, 7)]);
        let a = stratified_kfold(&examples, 5, 42).unwrap();
        let b = stratified_kfold(&examples, 5, 42).unwrap();
        assert_eq!(a, b);
        let c = stratified_kfold(&examples, 5, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let examples = examples_for(&[(2, 2)]);
        assert!(matches!(
            stratified_kfold(&examples, 1, 0),
            Err(EvalError::InvalidFoldCount { k: 1 })
        ));
        assert!(matches!(stratified_kfold(&[], 2, 0), Err(EvalError::NoExamples)));
    }
}
