use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ProbabilityError {
    #[error("probability {value} outside [0, 1]")]
    OutOfRange { value: f64 },
}

/// Noisy-or combination of independent influence probabilities:
/// `1 - prod(1 - p_k)`. An empty set combines to 0.
pub fn combine_joint_probability(probs: &[f64]) -> Result<f64, ProbabilityError> {
    let mut none_succeeds = 1.0;
    for &p in probs {
        if !(0.0..=1.0).contains(&p) {
            return Err(ProbabilityError::OutOfRange { value: p });
        }
        none_succeeds *= 1.0 - p;
    }
    Ok(1.0 - none_succeeds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_scores_zero() {
        assert_eq!(combine_joint_probability(&[]).unwrap(), 0.0);
    }

    #[test]
    fn three_friend_star_weights() {
        let score = combine_joint_probability(&[0.7, 0.4, 0.2]).unwrap();
        assert!((score - 0.856).abs() < 1e-12);
    }

    #[test]
    fn certain_friend_is_absorbing() {
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(combine_joint_probability(&[1.0, x]).unwrap(), 1.0);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(combine_joint_probability(&[0.5, 1.2]).is_err());
        assert!(combine_joint_probability(&[-0.1]).is_err());
        assert!(combine_joint_probability(&[f64::NAN]).is_err());
    }
}
