use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Moment estimates for a list of parameter blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, block_sizes: &[usize]) -> Self {
        AdamState {
            config,
            t: 0,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }
}

/// One bias-corrected Adam update over matching parameter and gradient
/// blocks.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[Vec<f64>], state: &mut AdamState) -> Result<(), NnError> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(NnError::ShapeMismatch(format!(
            "adam: {} parameter blocks, {} gradient blocks, {} state blocks",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[i].len() {
            return Err(NnError::ShapeMismatch(format!("adam: block {i} sizes differ")));
        }
    }
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, epsilon } = state.config;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut w = vec![0.5, -1.0, 2.0];
        let mut state = AdamState::new(AdamConfig::default(), &[3]);
        adam_step(&mut [&mut w], &[vec![0.0; 3]], &mut state).unwrap();
        assert_eq!(w, vec![0.5, -1.0, 2.0]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut w = vec![0.0; 4];
        let g = vec![3.0, -0.2, 1e-3, -50.0];
        let mut state = AdamState::new(AdamConfig::default(), &[4]);
        adam_step(&mut [&mut w], std::slice::from_ref(&g), &mut state).unwrap();
        for (wi, gi) in w.iter().zip(&g) {
            assert!((wi + 0.001 * gi.signum()).abs() < 1e-7, "{wi} vs {gi}");
        }
    }

    #[test]
    fn deterministic_trajectory() {
        let run = || {
            let mut w = vec![1.0, 2.0];
            let mut state = AdamState::new(AdamConfig::default(), &[2]);
            for k in 0..20 {
                let g = vec![w[0] * 0.3 + k as f64, -w[1]];
                adam_step(&mut [&mut w], &[g], &mut state).unwrap();
            }
            w
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn shape_mismatch() {
        let mut w = vec![0.0; 2];
        let mut state = AdamState::new(AdamConfig::default(), &[2]);
        assert!(adam_step(&mut [&mut w], &[vec![0.0; 3]], &mut state).is_err());
        assert_eq!(state.t, 0);
    }
}
