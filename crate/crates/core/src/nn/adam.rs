//! Adam with bias-corrected moment estimates.

use serde::{Deserialize, Serialize};

use super::network::NetworkParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    /// First-moment estimates, one vector per parameter tensor.
    pub m: Vec<Vec<f64>>,
    /// Second-moment estimates; never negative.
    pub v: Vec<Vec<f64>>,
    /// Number of steps taken.
    pub t: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &NetworkParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors().map(|t| vec![0.0; t.len()]).collect();
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut NetworkParams, grads: &NetworkParams) -> Result<()> {
        if !params.same_shape(grads) {
            return Err(Error::dim(
                "adam_step gradients",
                "parameter-shaped tensors",
                "mismatched shapes",
            ));
        }
        let shapes_ok = params.tensors().count() == self.m.len()
            && params.tensors().zip(&self.m).all(|(p, m)| p.len() == m.len());
        if !shapes_ok {
            return Err(Error::dim(
                "adam_step state",
                "moment tensors matching parameters",
                "mismatched shapes",
            ));
        }
        let slices: Vec<&mut [f64]> = params.tensors_mut().collect();
        let grad_slices: Vec<&[f64]> = grads.tensors().collect();
        self.step_tensors(slices, &grad_slices);
        Ok(())
    }

    /// Update raw tensors. Each `params[i]` must have the length of `m[i]`.
    pub fn step_tensors(&mut self, params: Vec<&mut [f64]>, grads: &[&[f64]]) {
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_state() -> AdamState {
        AdamState {
            config: AdamConfig::default(),
            m: vec![vec![0.0]],
            v: vec![vec![0.0]],
            t: 0,
        }
    }

    fn step_scalar(state: &mut AdamState, theta: &mut f64, g: f64) {
        state.step_tensors(vec![std::slice::from_mut(theta)], &[&[g]]);
    }

    #[test]
    fn zero_gradient_leaves_params_and_counts_step() {
        let mut s = scalar_state();
        let mut theta = 1.25;
        step_scalar(&mut s, &mut theta, 0.0);
        assert_eq!(theta, 1.25);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_is_about_lr() {
        let mut s = scalar_state();
        let mut theta = 0.0;
        step_scalar(&mut s, &mut theta, 10.0);
        // m_hat = g, v_hat = g^2 at t = 1
        let expected = 1e-3 * 10.0 / (10.0 + 1e-8);
        assert!((-theta - expected).abs() < 1e-18, "{theta}");
        assert!((-theta - 1e-3).abs() < 1e-11);
    }

    #[test]
    fn constant_gradient_moves_lr_per_step() {
        let mut s = scalar_state();
        let mut theta = 0.0;
        step_scalar(&mut s, &mut theta, 1.0);
        let after_one = theta;
        step_scalar(&mut s, &mut theta, 1.0);
        assert!((after_one + 1e-3).abs() < 1e-10);
        assert!((theta - after_one + 1e-3).abs() < 1e-10);
        assert!(s.v[0][0] >= 0.0);
    }

    #[test]
    fn first_step_ignores_gradient_scale() {
        let g = [0.3, -2.0, 1e-3, 7.0];
        let run = |c: f64| {
            let mut s = AdamState {
                config: AdamConfig::default(),
                m: vec![vec![0.0; 4]],
                v: vec![vec![0.0; 4]],
                t: 0,
            };
            let mut p = vec![0.0; 4];
            let scaled: Vec<f64> = g.iter().map(|x| x * c).collect();
            s.step_tensors(vec![p.as_mut_slice()], &[&scaled]);
            p
        };
        let base = run(1.0);
        for c in [10.0, 1000.0] {
            for (a, b) in base.iter().zip(run(c)) {
                assert_eq!(a.signum(), b.signum());
                // differences come only from epsilon
                assert!((a - b).abs() < 2e-8, "{a} vs {b}");
            }
        }
    }
}
