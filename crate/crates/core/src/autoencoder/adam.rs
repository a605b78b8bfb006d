//! Adam with bias correction.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators, one buffer per parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, param_lens: impl IntoIterator<Item = usize>) -> Self {
        let lens: Vec<usize> = param_lens.into_iter().collect();
        Self {
            config,
            first_moment: lens.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: lens.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
        }
    }

    pub fn for_params(config: AdamConfig, params: &[&[f64]]) -> Self {
        Self::new(config, params.iter().map(|p| p.len()))
    }
}

/// One Adam update over matching parameter and gradient buffers.
///
/// Panics if the buffer layout does not match the state it was built for.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) {
    assert_eq!(params.len(), grads.len(), "parameter/gradient buffer count");
    assert_eq!(params.len(), state.first_moment.len(), "parameter/state buffer count");
    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let correction1 = 1.0 - beta1.powi(t);
    let correction2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        assert_eq!(p.len(), g.len(), "parameter/gradient length");
        assert_eq!(p.len(), m.len(), "parameter/state length");
        for i in 0..p.len() {
            let gi = g[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            p[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = vec![0.3, -1.2];
        let mut fresh = AdamState::new(AdamConfig::default(), [2]);
        adam_step(&mut [p.as_mut_slice()], &[&[0.0, 0.0]], &mut fresh);
        assert_eq!(p, vec![0.3, -1.2]);
        assert_eq!(fresh.step, 1);
    }

    #[test]
    fn zero_gradient_decays_moments() {
        let mut state = AdamState::new(AdamConfig::default(), [2]);
        state.first_moment[0] = vec![0.5, 0.5];
        state.second_moment[0] = vec![0.25, 0.25];
        let mut q = vec![0.0, 0.0];
        adam_step(&mut [q.as_mut_slice()], &[&[0.0, 0.0]], &mut state);
        assert!((state.first_moment[0][0] - 0.45).abs() < 1e-15);
        assert!((state.second_moment[0][0] - 0.999 * 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_step_by_hand() {
        // m = 0.1, v = 0.001; m_hat = 1, v_hat = 1 => step = lr * 1/(1 + 1e-8)
        let mut p = vec![0.0];
        let mut state = AdamState::new(AdamConfig::default(), [1]);
        adam_step(&mut [p.as_mut_slice()], &[&[1.0]], &mut state);
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15, "{}", p[0]);
        assert!((p[0] + 0.001).abs() < 1e-10);
    }

    #[test]
    fn identical_runs_match_bitwise() {
        let run = || {
            let mut p = vec![0.5, -0.5, 2.0];
            let mut state = AdamState::new(AdamConfig::default(), [3]);
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * x + f64::from(k) * 1e-3).collect();
                adam_step(&mut [p.as_mut_slice()], &[&g], &mut state);
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
