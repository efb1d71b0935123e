//! Bias-corrected ADAM.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Moment accumulators for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub t: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub config: AdamConfig,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState { t: 0, m: vec![T::zero(); len], v: vec![T::zero(); len], config }
    }

    /// One update of `params` in place.
    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        assert_eq!(params.len(), self.m.len(), "parameter length");
        assert_eq!(grad.len(), self.m.len(), "gradient length");
        self.t += 1;
        let b1 = T::lit(self.config.beta1);
        let b2 = T::lit(self.config.beta2);
        let lr = T::lit(self.config.lr);
        let eps = T::lit(self.config.epsilon);
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g;
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Functional form: returns updated parameters and state.
pub fn adam_step<T: Scalar>(state: &AdamState<T>, params: &[T], grad: &[T]) -> (Vec<T>, AdamState<T>) {
    let mut state = state.clone();
    let mut params = params.to_vec();
    state.step(&mut params, grad);
    (params, state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let s = AdamState::<f64>::new(1, AdamConfig::default());
        let (p, s1) = adam_step(&s, &[0.0], &[2.0]);
        assert_eq!(s1.t, 1);
        // lr * g / (|g| + eps)
        assert!((p[0] + 1e-3 * 2.0 / (2.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let s = AdamState::<f64>::new(3, AdamConfig::default());
        let (p, _) = adam_step(&s, &[1.0, -2.0, 3.0], &[0.0; 3]);
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn deterministic() {
        let s = AdamState::<f64>::new(2, AdamConfig::default());
        let a = adam_step(&s, &[0.1, 0.2], &[0.3, -0.4]);
        let b = adam_step(&s, &[0.1, 0.2], &[0.3, -0.4]);
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn f32_step() {
        let mut s = AdamState::<f32>::new(1, AdamConfig::default());
        let mut p = [0.0f32];
        s.step(&mut p, &[-5.0]);
        assert!((p[0] - 1e-3).abs() < 1e-8);
    }
}
