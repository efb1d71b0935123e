//! One-hidden-layer perceptron with rectifier hidden units and a logistic
//! output, trained on binary log-loss.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("input has length {found}, network expects {expected}")]
pub struct InputLengthMismatch {
    pub expected: usize,
    pub found: usize,
}

/// Parameters of an `[inputs -> hidden -> 1]` network, stored flat as
/// `[w1 (hidden x inputs, row-major) | b1 (hidden) | w2 (hidden) | b2]`.
///
/// Gradients use the same type and layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<T> {
    inputs: usize,
    hidden: usize,
    data: Vec<T>,
}

/// Probability clamp applied inside the loss.
pub const LOSS_CLAMP: f64 = 1e-12;

pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> MlpParams<T> {
    pub fn param_count(inputs: usize, hidden: usize) -> usize {
        hidden * inputs + hidden + hidden + 1
    }

    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        MlpParams { inputs, hidden, data: vec![T::zero(); Self::param_count(inputs, hidden)] }
    }

    pub fn from_flat(inputs: usize, hidden: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == Self::param_count(inputs, hidden)).then_some(MlpParams { inputs, hidden, data })
    }

    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)) per layer, zero biases.
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(inputs, hidden);
        let l1 = (6.0 / (inputs + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + 1) as f64).sqrt();
        for w in p.w1_mut() {
            *w = T::lit(rng.random_range(-l1..l1));
        }
        for w in p.w2_mut() {
            *w = T::lit(rng.random_range(-l2..l2));
        }
        p
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    fn w1_len(&self) -> usize {
        self.hidden * self.inputs
    }

    pub fn w1(&self) -> &[T] {
        &self.data[..self.w1_len()]
    }

    pub fn b1(&self) -> &[T] {
        let s = self.w1_len();
        &self.data[s..s + self.hidden]
    }

    pub fn w2(&self) -> &[T] {
        let s = self.w1_len() + self.hidden;
        &self.data[s..s + self.hidden]
    }

    pub fn b2(&self) -> T {
        self.data[self.data.len() - 1]
    }

    pub fn w1_mut(&mut self) -> &mut [T] {
        let n = self.w1_len();
        &mut self.data[..n]
    }

    pub fn b1_mut(&mut self) -> &mut [T] {
        let s = self.w1_len();
        let h = self.hidden;
        &mut self.data[s..s + h]
    }

    pub fn w2_mut(&mut self) -> &mut [T] {
        let s = self.w1_len() + self.hidden;
        let h = self.hidden;
        &mut self.data[s..s + h]
    }

    pub fn b2_mut(&mut self) -> &mut T {
        self.data.last_mut().expect("non-empty parameter vector")
    }

    fn check(&self, input: &[T]) -> Result<(), InputLengthMismatch> {
        if input.len() == self.inputs {
            Ok(())
        } else {
            Err(InputLengthMismatch { expected: self.inputs, found: input.len() })
        }
    }

    /// Hidden pre-activations and the output logit. `head` may be a prefix
    /// of the input when `bias` already holds the rest of the first layer.
    fn pre_activations(&self, head: &[T], bias: &[T], hidden_pre: &mut [T]) -> T {
        let w1 = self.w1();
        let w2 = self.w2();
        let mut z = self.b2();
        for j in 0..self.hidden {
            let row = &w1[j * self.inputs..(j + 1) * self.inputs];
            let a = row.iter().zip(head).fold(bias[j], |acc, (&w, &x)| acc + w * x);
            hidden_pre[j] = a;
            if a > T::zero() {
                z = z + w2[j] * a;
            }
        }
        z
    }

    /// Output probability in (0, 1).
    pub fn forward(&self, input: &[T]) -> Result<T, InputLengthMismatch> {
        self.check(input)?;
        let mut scratch = vec![T::zero(); self.hidden];
        Ok(sigmoid(self.pre_activations(input, self.b1(), &mut scratch)))
    }

    /// Adds `scale * dLoss/dParams` for one example into `grad` and returns
    /// the example's log-loss.
    pub fn accumulate_gradient(
        &self,
        input: &[T],
        label: bool,
        scale: T,
        grad: &mut MlpParams<T>,
        scratch: &mut Vec<T>,
    ) -> Result<T, InputLengthMismatch> {
        self.check(input)?;
        let mut delta = vec![T::zero(); self.hidden];
        let loss = self.accumulate_head_gradient(input, self.b1(), label, scale, grad, &mut delta, scratch);
        self.finish_tail_gradient(grad, &delta, &[]);
        Ok(loss)
    }

    /// `b1 + W1[:, k..] * tail` with `k = inputs - tail.len()`: the part of
    /// the first layer fixed by a constant input tail.
    pub fn tail_offset(&self, tail: &[T]) -> Vec<T> {
        let k = self.inputs - tail.len();
        let w1 = self.w1();
        (0..self.hidden)
            .map(|j| {
                let row = &w1[j * self.inputs + k..(j + 1) * self.inputs];
                row.iter().zip(tail).fold(self.b1()[j], |acc, (&w, &x)| acc + w * x)
            })
            .collect()
    }

    /// Forward pass for input `head ‖ tail` given `offset = tail_offset(tail)`.
    pub fn forward_head(&self, head: &[T], offset: &[T], scratch: &mut Vec<T>) -> T {
        scratch.resize(self.hidden, T::zero());
        sigmoid(self.pre_activations(head, offset, scratch))
    }

    /// Gradient of one `head ‖ tail` example for every parameter touching
    /// the head, the second layer included. Hidden deltas are summed into
    /// `delta`; [`finish_tail_gradient`](Self::finish_tail_gradient) turns them
    /// into the `b1` and tail-weight gradients once per batch.
    pub fn accumulate_head_gradient(
        &self,
        head: &[T],
        offset: &[T],
        label: bool,
        scale: T,
        grad: &mut MlpParams<T>,
        delta: &mut [T],
        scratch: &mut Vec<T>,
    ) -> T {
        scratch.resize(self.hidden, T::zero());
        let z = self.pre_activations(head, offset, scratch);
        let p = sigmoid(z);
        let y = if label { T::one() } else { T::zero() };
        let dz = (p - y) * scale;

        let n_in = self.inputs;
        let w2 = self.w2();
        let s_w2 = self.w1_len() + self.hidden;
        let g = grad.as_mut_slice();
        for j in 0..self.hidden {
            let a = scratch[j];
            if a > T::zero() {
                g[s_w2 + j] = g[s_w2 + j] + dz * a;
                let dh = dz * w2[j];
                delta[j] = delta[j] + dh;
                let row = &mut g[j * n_in..(j + 1) * n_in];
                for (gw, &x) in row.iter_mut().zip(head) {
                    *gw = *gw + dh * x;
                }
            }
        }
        let last = g.len() - 1;
        g[last] = g[last] + dz;
        log_loss(p, label)
    }

    /// Adds the summed hidden deltas to the `b1` gradient and their outer
    /// product with `tail` to the tail weights.
    pub fn finish_tail_gradient(&self, grad: &mut MlpParams<T>, delta: &[T], tail: &[T]) {
        let n_in = self.inputs;
        let k = n_in - tail.len();
        let s_b1 = self.w1_len();
        let g = grad.as_mut_slice();
        for (j, &d) in delta.iter().enumerate() {
            g[s_b1 + j] = g[s_b1 + j] + d;
            for (gw, &x) in g[j * n_in + k..(j + 1) * n_in].iter_mut().zip(tail) {
                *gw = *gw + d * x;
            }
        }
    }

    /// Log-loss and its gradient for one example.
    pub fn gradient(&self, input: &[T], label: bool) -> Result<(MlpParams<T>, T), InputLengthMismatch> {
        let mut grad = Self::zeros(self.inputs, self.hidden);
        let mut scratch = Vec::new();
        let loss = self.accumulate_gradient(input, label, T::one(), &mut grad, &mut scratch)?;
        Ok((grad, loss))
    }
}

/// -[y ln p + (1 - y) ln(1 - p)] with p clamped to [1e-12, 1 - 1e-12].
pub fn log_loss<T: Scalar>(p: T, label: bool) -> T {
    let eps = T::lit(LOSS_CLAMP);
    let p = p.max(eps).min(T::one() - eps);
    if label {
        -p.ln()
    } else {
        -(T::one() - p).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_half() {
        let p = MlpParams::<f64>::zeros(4, 3);
        assert_eq!(p.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap(), 0.5);
        let (g, loss) = p.gradient(&[1.0, 2.0, 3.0, 4.0], true).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-15);
        let (_, loss0) = p.gradient(&[1.0, 2.0, 3.0, 4.0], false).unwrap();
        assert!((loss0 - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g.b2(), -0.5);
    }

    #[test]
    fn hand_sized_network() {
        // inputs 4, hidden 2
        let mut p = MlpParams::<f64>::zeros(4, 2);
        p.w1_mut().copy_from_slice(&[0.5, -1.0, 0.25, 0.0, /* unit 2 */ -0.5, 0.1, 0.2, -0.3]);
        p.b1_mut().copy_from_slice(&[0.1, -0.2]);
        p.w2_mut().copy_from_slice(&[1.5, -2.0]);
        *p.b2_mut() = 0.3;
        let x = [1.0, 0.5, 2.0, -1.0];
        // h1 = 0.1 + 0.5 - 0.5 + 0.5 + 0 = 0.6; h2 = -0.2 - 0.5 + 0.05 + 0.4 + 0.3 = 0.05
        // z = 0.3 + 1.5 * 0.6 - 2.0 * 0.05 = 1.1
        let expected = 1.0 / (1.0 + (-1.1f64).exp());
        assert!((p.forward(&x).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_length() {
        let p = MlpParams::<f64>::zeros(4, 2);
        assert_eq!(p.forward(&[1.0]), Err(InputLengthMismatch { expected: 4, found: 1 }));
    }

    #[test]
    fn output_stays_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = MlpParams::<f64>::glorot(6, 5, &mut rng);
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y = p.forward(&x).unwrap();
            assert!(y > 0.0 && y < 1.0);
        }
    }

    #[test]
    fn confident_correct_prediction_has_tiny_gradient() {
        let mut p = MlpParams::<f64>::zeros(2, 2);
        *p.b2_mut() = 40.0;
        let (g, loss) = p.gradient(&[1.0, 1.0], true).unwrap();
        assert!(loss < 1e-12);
        assert!(g.b2().abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = MlpParams::<f64>::glorot(16, 8, &mut rng);
            let x: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y = rng.random_bool(0.5);
            let (g, _) = p.gradient(&x, y).unwrap();
            let h = 1e-6;
            for k in 0..p.as_slice().len() {
                let mut plus = p.clone();
                plus.as_mut_slice()[k] += h;
                let mut minus = p.clone();
                minus.as_mut_slice()[k] -= h;
                let fd = (log_loss(plus.forward(&x).unwrap(), y) - log_loss(minus.forward(&x).unwrap(), y)) / (2.0 * h);
                let an = g.as_slice()[k];
                let denom = an.abs().max(fd.abs()).max(1e-7);
                assert!((an - fd).abs() / denom < 1e-4, "param {k}: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn factored_tail_matches_full_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = MlpParams::<f64>::glorot(12, 6, &mut rng);
        let tail: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
        let batch: Vec<(Vec<f64>, bool)> =
            (0..7).map(|_| ((0..3).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_bool(0.5))).collect();

        let mut full = MlpParams::zeros(12, 6);
        let mut scratch = Vec::new();
        for (head, y) in &batch {
            let x: Vec<f64> = head.iter().chain(&tail).copied().collect();
            p.accumulate_gradient(&x, *y, 0.5, &mut full, &mut scratch).unwrap();
        }
        let mut fact = MlpParams::zeros(12, 6);
        let offset = p.tail_offset(&tail);
        let mut delta = vec![0.0; 6];
        for (head, y) in &batch {
            p.accumulate_head_gradient(head, &offset, *y, 0.5, &mut fact, &mut delta, &mut scratch);
            let x: Vec<f64> = head.iter().chain(&tail).copied().collect();
            assert!((p.forward_head(head, &offset, &mut scratch) - p.forward(&x).unwrap()).abs() < 1e-14);
        }
        p.finish_tail_gradient(&mut fact, &delta, &tail);
        for (a, b) in full.as_slice().iter().zip(fact.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn f32_forward() {
        let p = MlpParams::<f32>::zeros(3, 2);
        assert_eq!(p.forward(&[1.0, 2.0, 3.0]).unwrap(), 0.5f32);
    }
}
