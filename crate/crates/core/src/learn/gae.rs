/// Backward recursion `A_i = gamma * lambda * A_{i+1} + delta_i`, `A_{B+1} = 0`.
pub fn gae(deltas: &[f64], gamma: f64, lambda: f64) -> Vec<f64> {
    let gl = gamma * lambda;
    let mut out = vec![0.0; deltas.len()];
    let mut acc = 0.0;
    for i in (0..deltas.len()).rev() {
        acc = gl * acc + deltas[i];
        out[i] = acc;
    }
    out
}

/// TD residuals `r_i + gamma V(o_{i+1}) - V(o_i)`.
pub fn td_residuals(rewards: &[f64], values: &[f64], next_values: &[f64], gamma: f64) -> Vec<f64> {
    rewards.iter().zip(values).zip(next_values).map(|((r, v), nv)| r + gamma * nv - v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_deltas() {
        assert_eq!(gae(&[0.0; 4], 0.5, 0.1), vec![0.0; 4]);
    }

    #[test]
    fn hand_recursion() {
        let a = gae(&[1.0, 1.0, 1.0], 0.5, 0.1);
        let expect = [1.0525, 1.05, 1.0];
        for (x, e) in a.iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_input() {
        assert!(gae(&[], 0.5, 0.1).is_empty());
    }
}
