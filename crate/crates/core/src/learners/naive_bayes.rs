//! Gaussian Naive Bayes with log-space prediction.

use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::scalar::Scalar;

/// Relative variance floor, as a fraction of the largest feature variance.
pub const VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb<T> {
    pub priors: Vec<T>,
    /// `means[class][feature]`
    pub means: Vec<Vec<T>>,
    /// `variances[class][feature]`, floor included.
    pub variances: Vec<Vec<T>>,
    pub width: usize,
}

fn mean_var<T: Scalar>(values: impl Iterator<Item = T> + Clone) -> (T, T) {
    let mut n = T::zero();
    let mut sum = T::zero();
    for v in values.clone() {
        sum = sum + v;
        n = n + T::one();
    }
    if n == T::zero() {
        return (T::zero(), T::zero());
    }
    let mean = sum / n;
    let ss = values.fold(T::zero(), |acc, v| acc + (v - mean) * (v - mean));
    (mean, ss / n)
}

/// Fits priors and per-class feature Gaussians. Classes absent from `y` get
/// prior 0.
pub fn train_gaussian_nb<T: Scalar>(x: &[Vec<T>], y: &[usize], n_classes: usize) -> Result<GaussianNb<T>, LearnerError> {
    if x.is_empty() {
        return Err(LearnerError::Empty);
    }
    if x.len() != y.len() {
        return Err(LearnerError::LabelCount { rows: x.len(), labels: y.len() });
    }
    let width = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != width) {
        return Err(LearnerError::WidthMismatch { expected: width, found: row.len() });
    }
    if let Some(&c) = y.iter().find(|&&c| c >= n_classes) {
        return Err(LearnerError::UnknownClass(c));
    }

    let max_var = (0..width)
        .map(|j| mean_var(x.iter().map(|r| r[j])).1)
        .fold(T::zero(), |a, b| a.max(b));
    let floor = if max_var > T::zero() { T::lit(VAR_SMOOTHING) * max_var } else { T::lit(VAR_SMOOTHING) };

    let n = T::from_usize(x.len()).unwrap();
    let mut priors = Vec::with_capacity(n_classes);
    let mut means = Vec::with_capacity(n_classes);
    let mut variances = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let rows: Vec<&Vec<T>> = x.iter().zip(y).filter(|(_, &l)| l == c).map(|(r, _)| r).collect();
        priors.push(T::from_usize(rows.len()).unwrap() / n);
        let (m, v): (Vec<T>, Vec<T>) = (0..width)
            .map(|j| {
                let (m, v) = mean_var(rows.iter().map(|r| r[j]));
                (m, v + floor)
            })
            .unzip();
        means.push(m);
        variances.push(v);
    }
    Ok(GaussianNb { priors, means, variances, width })
}

impl<T: Scalar> GaussianNb<T> {
    pub fn n_classes(&self) -> usize {
        self.priors.len()
    }

    /// Unnormalized log joint per class; `-inf` for zero-prior classes.
    pub fn joint_log_likelihood(&self, x: &[T]) -> Result<Vec<T>, LearnerError> {
        if x.len() != self.width {
            return Err(LearnerError::WidthMismatch { expected: self.width, found: x.len() });
        }
        let two_pi = T::lit(std::f64::consts::TAU);
        let half = T::lit(0.5);
        Ok((0..self.n_classes())
            .map(|c| {
                if self.priors[c] <= T::zero() {
                    return T::neg_infinity();
                }
                let ll = x.iter().enumerate().fold(T::zero(), |acc, (j, &v)| {
                    let var = self.variances[c][j];
                    let d = v - self.means[c][j];
                    acc - half * (two_pi * var).ln() - d * d / (var + var)
                });
                self.priors[c].ln() + ll
            })
            .collect())
    }

    /// Class posteriors, normalized with log-sum-exp.
    pub fn predict_proba(&self, x: &[T]) -> Result<Vec<T>, LearnerError> {
        let jll = self.joint_log_likelihood(x)?;
        Ok(softmax_log(&jll))
    }
}

/// exp(l - logsumexp(l)); entries at `-inf` map to 0.
pub fn softmax_log<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        let u = T::one() / T::from_usize(logits.len()).unwrap();
        return vec![u; logits.len()];
    }
    let sum = logits.iter().fold(T::zero(), |acc, &l| acc + (l - max).exp());
    let lse = max + sum.ln();
    logits.iter().map(|&l| (l - lse).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rows(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn hand_gaussian_cases() {
        let x = rows(&[0.0, 0.4, 1.0, 1.4]);
        let y = [0, 0, 1, 1];
        let m = train_gaussian_nb(&x, &y, 5).unwrap();
        assert!((m.means[0][0] - 0.2).abs() < 1e-15);
        assert!((m.means[1][0] - 1.2).abs() < 1e-15);
        let p = m.predict_proba(&[0.1]).unwrap();
        assert!(p[0] > 0.5);
        let p = m.predict_proba(&[0.7]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9 && (p[1] - 0.5).abs() < 1e-9, "{p:?}");
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn single_class_gets_all_mass() {
        let m = train_gaussian_nb(&rows(&[1.0, 2.0, 3.0]), &[3, 3, 3], 5).unwrap();
        for q in [-100.0, 0.0, 2.5, 1e6] {
            let p = m.predict_proba(&[q]).unwrap();
            assert_eq!(p[3], 1.0);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(train_gaussian_nb::<f64>(&[], &[], 5), Err(LearnerError::Empty));
        let m = train_gaussian_nb(&rows(&[1.0, 2.0]), &[0, 1], 5).unwrap();
        assert_eq!(m.predict_proba(&[1.0, 2.0]), Err(LearnerError::WidthMismatch { expected: 1, found: 2 }));
    }

    #[test]
    fn constant_features_do_not_produce_nan() {
        let x: Vec<Vec<f64>> = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 5.0], vec![1.0, 6.0]];
        let m = train_gaussian_nb(&x, &[0, 0, 1, 1], 5).unwrap();
        let p = m.predict_proba(&[1.0, 0.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!(p[0] > 0.99);
        let all_const = train_gaussian_nb(&[vec![2.0f64], vec![2.0]], &[0, 1], 5).unwrap();
        let p = all_const.predict_proba(&[3.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn probabilities_normalize_and_respect_feature_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<Vec<f64>> = (0..60).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<usize> = (0..60).map(|i| i % 5).collect();
        let m = train_gaussian_nb(&x, &y, 5).unwrap();
        let perm = [2, 0, 1];
        let xp: Vec<Vec<f64>> = x.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let mp = train_gaussian_nb(&xp, &y, 5).unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = m.predict_proba(&q).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let qp: Vec<f64> = perm.iter().map(|&j| q[j]).collect();
            let pp = mp.predict_proba(&qp).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_training_set_gives_same_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let y: Vec<usize> = x.iter().map(|r| usize::from(r[0] + r[1] > 1.0)).collect();
        let a = train_gaussian_nb(&x, &y, 5).unwrap();
        let x2: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let y2: Vec<usize> = y.iter().chain(&y).copied().collect();
        let b = train_gaussian_nb(&x2, &y2, 5).unwrap();
        for _ in 0..100 {
            let q = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let pa = a.predict_proba(&q).unwrap();
            let pb = b.predict_proba(&q).unwrap();
            for (u, v) in pa.iter().zip(&pb) {
                assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn works_in_f32() {
        let x: Vec<Vec<f32>> = vec![vec![0.0], vec![0.4], vec![1.0], vec![1.4]];
        let m = train_gaussian_nb(&x, &[0, 0, 1, 1], 2).unwrap();
        assert!(m.predict_proba(&[0.1f32]).unwrap()[0] > 0.5);
    }
}
