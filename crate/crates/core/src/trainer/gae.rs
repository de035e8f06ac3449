use super::TrainError;

/// Generalized advantage estimation by the backward recursion.
/// `dones[t]` marks that the episode ended on transition t.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), TrainError> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(TrainError::LengthMismatch {
            rewards: n,
            values: values.len(),
            dones: dones.len(),
        });
    }
    let mut advantages = vec![0.0; n];
    let mut next_value = bootstrap_value;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[1.0], &[0.5], &[true], 9.0, 0.98, 0.95).unwrap();
        assert_eq!(a, vec![0.5]);
        assert_eq!(r, vec![1.0]);
    }

    #[test]
    fn zeros_give_zeros() {
        let (a, _) = compute_gae(&[0.0; 8], &[0.0; 8], &[false; 8], 0.0, 0.98, 0.95).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_gae(&[0.0; 3], &[0.0; 2], &[false; 3], 0.0, 0.9, 0.9).is_err());
    }

    #[test]
    fn lambda_zero_is_td_residual() {
        let r = [0.3, -1.0, 2.0, 0.5];
        let v = [0.1, 0.2, -0.4, 1.0];
        let d = [false, true, false, false];
        let (a, _) = compute_gae(&r, &v, &d, 0.7, 0.9, 0.0).unwrap();
        let next = [0.2, -0.4, 1.0, 0.7];
        for t in 0..4 {
            let live = if d[t] { 0.0 } else { 1.0 };
            assert!((a[t] - (r[t] + 0.9 * next[t] * live - v[t])).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_one_is_monte_carlo_minus_value() {
        let r = [0.3, -1.0, 2.0, 0.5, 1.5];
        let v = [0.1, 0.2, -0.4, 1.0, 0.3];
        let (g, l, boot) = (0.95, 1.0, 2.0);
        let (a, ret) = compute_gae(&r, &v, &[false; 5], boot, g, l).unwrap();
        for t in 0..5 {
            let mc: f64 = (t..5).map(|k| g.powi((k - t) as i32) * r[k]).sum::<f64>() + g.powi((5 - t) as i32) * boot;
            assert!((a[t] - (mc - v[t])).abs() < 1e-12);
            assert!((ret[t] - mc).abs() < 1e-12);
        }
    }
}
