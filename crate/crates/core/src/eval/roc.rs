use super::runner::EvalError;

/// One operating point: predicting active iff score >= threshold yields
/// this true-positive and false-positive rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Operating points ordered by descending threshold, from the +inf sentinel
/// (nothing predicted active) down to the minimum score (everything
/// predicted active). Both rates are non-decreasing along the curve.
#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
}

impl RocCurve {
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }
}

/// Builds the ROC curve of `(score, actual)` pairs. Candidate thresholds
/// are the distinct scores plus a +inf sentinel; the prediction rule is
/// score >= threshold. Requires both classes to be present.
pub fn roc_curve(scored: &[(f64, bool)]) -> Result<RocCurve, EvalError> {
    if scored.is_empty() {
        return Err(EvalError::NoExamples);
    }
    if scored.iter().any(|(s, _)| s.is_nan()) {
        return Err(EvalError::UndefinedScore);
    }
    let positives = scored.iter().filter(|&&(_, y)| y).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("no NaN after validation"));

    let mut points = vec![RocPoint { threshold: f64::INFINITY, tpr: 0.0, fpr: 0.0 }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].0;
        // Consume the whole tie group: a threshold equal to the score
        // includes every example tied at it.
        while i < sorted.len() && sorted[i].0 == threshold {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            tpr: tp as f64 / positives as f64,
            fpr: fp as f64 / negatives as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Threshold maximizing Youden's J = tpr - fpr; ties resolve toward the
/// larger threshold. Returns `(threshold, J)`.
pub fn youden_threshold(curve: &RocCurve) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::NEG_INFINITY);
    for point in &curve.points {
        let j = point.tpr - point.fpr;
        if j > best.1 {
            best = (point.threshold, j);
        }
    }
    best
}

/// Threshold minimizing the Euclidean distance of the ROC point to the
/// perfect corner (fpr 0, tpr 1); ties resolve toward the larger threshold.
/// Returns `(threshold, distance)`.
pub fn closest01_threshold(curve: &RocCurve) -> (f64, f64) {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for point in &curve.points {
        let distance = (point.fpr.powi(2) + (1.0 - point.tpr).powi(2)).sqrt();
        if distance < best.1 {
            best = (point.threshold, distance);
        }
    }
    best
}
