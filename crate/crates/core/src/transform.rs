//! Smooth bijections between unconstrained optimizer coordinates and
//! constrained model parameters.

/// Bound on unconstrained partial-autocorrelation coordinates so that
/// `tanh` stays strictly inside (-1, 1) in floating point.
const PACF_BOUND: f64 = 15.0;

/// Maps unconstrained values to the coefficients of a stationary AR
/// polynomial `1 - phi_1 z - ... - phi_p z^p` via partial autocorrelations
/// and the Durbin-Levinson recursion.
pub fn pacf_to_ar(u: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(u.len());
    for (k, &uk) in u.iter().enumerate() {
        let r = uk.clamp(-PACF_BOUND, PACF_BOUND).tanh();
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// Partial autocorrelations of an AR polynomial, or `None` when it is not
/// stationary.
pub fn ar_to_pacf(phi: &[f64]) -> Option<Vec<f64>> {
    let p = phi.len();
    let mut cur = phi.to_vec();
    let mut r = vec![0.0; p];
    for k in (0..p).rev() {
        let rk = cur[k];
        if !rk.is_finite() || rk.abs() >= 1.0 {
            return None;
        }
        r[k] = rk;
        let denom = 1.0 - rk * rk;
        let prev: Vec<f64> = (0..k)
            .map(|j| (cur[j] + rk * cur[k - 1 - j]) / denom)
            .collect();
        cur = prev;
    }
    Some(r)
}

/// Inverse of [`pacf_to_ar`].
pub fn ar_to_unconstrained(phi: &[f64]) -> Option<Vec<f64>> {
    ar_to_pacf(phi).map(|r| {
        r.into_iter()
            .map(|v| v.atanh().clamp(-PACF_BOUND, PACF_BOUND))
            .collect()
    })
}

pub fn is_stationary(phi: &[f64]) -> bool {
    ar_to_pacf(phi).is_some()
}

/// Coefficients of an invertible MA polynomial `1 + theta_1 z + ...`.
pub fn pacf_to_ma(u: &[f64]) -> Vec<f64> {
    pacf_to_ar(u).into_iter().map(|v| -v).collect()
}

pub fn ma_to_unconstrained(theta: &[f64]) -> Option<Vec<f64>> {
    let neg: Vec<f64> = theta.iter().map(|v| -v).collect();
    ar_to_unconstrained(&neg)
}

pub fn is_invertible(theta: &[f64]) -> bool {
    let neg: Vec<f64> = theta.iter().map(|v| -v).collect();
    is_stationary(&neg)
}

/// Softmax of `logits` extended with an implicit zero logit. Returns the
/// weights for the explicit logits; their sum is strictly below one and the
/// remainder is the implicit slack weight.
pub fn simplex_with_slack(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(0.0, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
    let total = exps.iter().sum::<f64>() + (-m).exp();
    exps.into_iter().map(|e| e / total).collect()
}

/// Inverse of [`simplex_with_slack`] for positive weights summing below one.
pub fn simplex_with_slack_inv(weights: &[f64]) -> Option<Vec<f64>> {
    let slack = 1.0 - weights.iter().sum::<f64>();
    if slack <= 0.0 || weights.iter().any(|&w| w <= 0.0) {
        return None;
    }
    Some(weights.iter().map(|w| (w / slack).ln()).collect())
}

/// Softmax over `logits` plus an implicit zero logit, returning all
/// `len + 1` weights (which sum to one).
pub fn simplex_full(logits: &[f64]) -> Vec<f64> {
    let mut w = simplex_with_slack(logits);
    let rest = 1.0 - w.iter().sum::<f64>();
    w.push(rest);
    w
}

/// Inverse of [`simplex_full`]: `weights` sum to one, all positive.
pub fn simplex_full_inv(weights: &[f64]) -> Option<Vec<f64>> {
    let (last, head) = weights.split_last()?;
    if *last <= 0.0 || head.iter().any(|&w| w <= 0.0) {
        return None;
    }
    Some(head.iter().map(|w| (w / last).ln()).collect())
}

/// Maps `R^s` onto the open set `sum |b| < 1`.
pub fn l1_ball(u: &[f64]) -> Vec<f64> {
    if u.len() == 1 {
        return vec![u[0].clamp(-PACF_BOUND, PACF_BOUND).tanh()];
    }
    let norm: f64 = u.iter().map(|v| v.abs()).sum();
    u.iter().map(|v| v / (1.0 + norm)).collect()
}

pub fn l1_ball_inv(b: &[f64]) -> Option<Vec<f64>> {
    if b.len() == 1 {
        return (b[0].abs() < 1.0).then(|| vec![b[0].atanh().clamp(-PACF_BOUND, PACF_BOUND)]);
    }
    let norm: f64 = b.iter().map(|v| v.abs()).sum();
    if norm >= 1.0 {
        return None;
    }
    Some(b.iter().map(|v| v / (1.0 - norm)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ar1_is_tanh() {
        assert_eq!(pacf_to_ar(&[0.5]), vec![0.5f64.tanh()]);
        assert!(is_stationary(&[0.9]));
        assert!(!is_stationary(&[1.0]));
        // 1 - 0.5z - 0.6z^2 has a root inside the unit circle
        assert!(!is_stationary(&[0.5, 0.6]));
        assert!(is_stationary(&[0.5, 0.3]));
        assert!(is_invertible(&[0.4]));
        assert!(!is_invertible(&[-1.2]));
    }

    #[test]
    fn simplex_weights() {
        let w = simplex_with_slack(&[0.0, 0.0]);
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-15);
        let back = simplex_with_slack_inv(&[0.05, 0.8]).unwrap();
        let again = simplex_with_slack(&back);
        assert!((again[0] - 0.05).abs() < 1e-14 && (again[1] - 0.8).abs() < 1e-14);
        assert!(simplex_with_slack_inv(&[0.5, 0.5]).is_none());
        let full = simplex_full(&[1.0, -1.0]);
        assert!((full.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn prop_pacf_round_trip(u in prop::collection::vec(-3.0f64..3.0, 1..4)) {
            let phi = pacf_to_ar(&u);
            prop_assert!(is_stationary(&phi));
            let back = ar_to_unconstrained(&phi).unwrap();
            for (a, b) in back.iter().zip(&u) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }

        #[test]
        fn prop_l1_ball(u in prop::collection::vec(-20.0f64..20.0, 1..3)) {
            let b = l1_ball(&u);
            prop_assert!(b.iter().map(|v| v.abs()).sum::<f64>() < 1.0);
            let back = l1_ball_inv(&b).unwrap();
            let again = l1_ball(&back);
            for (a, c) in again.iter().zip(&b) {
                prop_assert!((a - c).abs() < 1e-9);
            }
        }
    }
}
