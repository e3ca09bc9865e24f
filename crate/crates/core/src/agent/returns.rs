//! Discounted returns and generalized advantage estimation.

/// `G_t = r_t + gamma * G_{t+1}`, with the last return equal to the last
/// reward.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> Vec<f64> {
    discounted_return_bootstrapped(rewards, gamma, 0.0)
}

/// Same recursion, seeded with `bootstrap` as the value beyond the last step.
pub fn discounted_return_bootstrapped(rewards: &[f64], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Raw (unnormalized) GAE advantages.
///
/// `next_value` is the critic's estimate after the last step; pass 0 for a
/// terminal end.
pub fn gae(rewards: &[f64], values: &[f64], next_value: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    assert_eq!(rewards.len(), values.len());
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let v_next = if t + 1 < n { values[t + 1] } else { next_value };
        let delta = rewards[t] + gamma * v_next - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    adv
}

/// Shift to zero mean and scale to unit variance. A batch with no spread is
/// only centred.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in adv.iter_mut() {
        *a -= mean;
        if std > 1e-8 {
            *a /= std;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_examples() {
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
        assert_eq!(discounted_return(&[3.0, -1.0, 2.0], 0.0), vec![3.0, -1.0, 2.0]);
        assert_eq!(discounted_return(&[2.0], 0.9), vec![2.0]);
    }

    #[test]
    fn gae_hand_recursion() {
        let a = gae(&[1.0, 0.0], &[0.5, 0.25], 0.0, 0.5, 0.5);
        assert!((a[0] - 0.5625).abs() < 1e-15);
        assert!((a[1] + 0.25).abs() < 1e-15);
    }

    #[test]
    fn gae_lambda_zero_is_td_error() {
        let r = [1.0, 2.0, -1.0];
        let v = [0.3, 0.1, 0.7];
        let a = gae(&r, &v, 0.4, 0.9, 0.0);
        let deltas = [1.0 + 0.9 * 0.1 - 0.3, 2.0 + 0.9 * 0.7 - 0.1, -1.0 + 0.9 * 0.4 - 0.7];
        for (x, d) in a.iter().zip(deltas) {
            assert!((x - d).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_advantages_have_unit_spread() {
        let mut a = vec![1.0, 2.0, 3.0, 4.0];
        normalize_advantages(&mut a);
        let mean: f64 = a.iter().sum::<f64>() / 4.0;
        let var: f64 = a.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        let mut flat = vec![2.0, 2.0];
        normalize_advantages(&mut flat);
        assert_eq!(flat, vec![0.0, 0.0]);
    }
}
