use super::runner::EvalError;

/// Binary confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionMatrix {
    pub fn add(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.true_positives += 1,
            (true, false) => self.false_positives += 1,
            (false, false) => self.true_negatives += 1,
            (false, true) => self.false_negatives += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.true_negatives += other.true_negatives;
        self.false_negatives += other.false_negatives;
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Counts (predicted, actual) pairs into a confusion matrix.
pub fn confusion(pairs: &[(bool, bool)]) -> Result<ConfusionMatrix, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::NoExamples);
    }
    let mut cm = ConfusionMatrix::default();
    for &(predicted, actual) in pairs {
        cm.add(predicted, actual);
    }
    Ok(cm)
}

/// Accuracy, true-positive rate, and false-positive rate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricValues {
    pub accuracy: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// No actual positives: tpr reported as 0 by convention.
    pub no_positives: bool,
    /// No actual negatives: fpr reported as 0 by convention.
    pub no_negatives: bool,
}

pub fn metrics(cm: &ConfusionMatrix) -> MetricValues {
    let total = cm.total();
    assert!(total > 0, "metrics of an empty confusion matrix");
    let positives = cm.true_positives + cm.false_negatives;
    let negatives = cm.false_positives + cm.true_negatives;
    MetricValues {
        accuracy: (cm.true_positives + cm.true_negatives) as f64 / total as f64,
        tpr: if positives == 0 { 0.0 } else { cm.true_positives as f64 / positives as f64 },
        fpr: if negatives == 0 { 0.0 } else { cm.false_positives as f64 / negatives as f64 },
        no_positives: positives == 0,
        no_negatives: negatives == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_matrix() {
        let mut pairs = vec![(true, true); 3];
        pairs.push((true, false));
        pairs.extend(vec![(false, false); 5]);
        pairs.push((false, true));
        let cm = confusion(&pairs).unwrap();
        assert_eq!(cm.true_positives, 3);
        assert_eq!(cm.false_positives, 1);
        assert_eq!(cm.true_negatives, 5);
        assert_eq!(cm.false_negatives, 1);

        let m = metrics(&cm);
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        assert!((m.tpr - 0.75).abs() < 1e-15);
        assert!((m.fpr - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn all_correct_has_no_errors() {
        let cm = confusion(&[(true, true), (false, false), (true, true)]).unwrap();
        assert_eq!(cm.false_positives, 0);
        assert_eq!(cm.false_negatives, 0);
        let m = metrics(&cm);
        assert_eq!((m.accuracy, m.tpr, m.fpr), (1.0, 1.0, 0.0));
    }

    #[test]
    fn all_predicted_positive_on_negatives() {
        let cm = confusion(&[(true, false); 4]).unwrap();
        assert_eq!(cm.false_positives, 4);
        assert_eq!(cm.total(), 4);
        let m = metrics(&cm);
        assert_eq!(m.fpr, 1.0);
        assert!(m.no_positives);
        assert_eq!(m.tpr, 0.0);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(confusion(&[]), Err(EvalError::NoExamples)));
    }

    #[test]
    fn degenerate_denominators_are_flagged() {
        let cm = confusion(&[(false, false), (true, false)]).unwrap();
        let m = metrics(&cm);
        assert!(m.no_positives);
        assert!(!m.no_negatives);
        assert_eq!(m.tpr, 0.0);
    }
}
