//! Depth-1 decision trees fitted by exhaustive weighted search.

use serde::{Deserialize, Serialize};

use super::LearnerError;
use crate::scalar::OrderedWeight;

/// `x[feature] <= threshold` predicts `left`, otherwise `right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump<T> {
    pub feature: usize,
    pub threshold: T,
    pub left: usize,
    pub right: usize,
}

impl<T: OrderedWeight> DecisionStump<T> {
    pub fn predict(&self, x: &[T]) -> usize {
        if x[self.feature] <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

/// Index of the largest entry; ties go to the lower index.
fn argmax<T: OrderedWeight>(v: &[T]) -> (usize, T) {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    (best, v[best])
}

/// Midpoint of two distinct values, nudged so that `a <= mid < b`.
fn midpoint<T: OrderedWeight>(a: T, b: T) -> T {
    let two = T::one() + T::one();
    let mid = (a + b) / two;
    if mid < b && mid >= a {
        mid
    } else {
        a
    }
}

/// Row indices sorted by each feature.
pub fn feature_orders<T: OrderedWeight>(x: &[Vec<T>]) -> Vec<Vec<usize>> {
    let width = x.first().map_or(0, Vec::len);
    (0..width)
        .map(|f| {
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).expect("feature values are comparable"));
            idx
        })
        .collect()
}

/// Stump minimizing weighted error over every feature and every midpoint
/// between consecutive distinct values. Each side predicts its weight-majority
/// class. Ties prefer the lower feature index, then the lower threshold.
pub fn fit_stump<T: OrderedWeight>(
    x: &[Vec<T>],
    y: &[usize],
    weights: &[T],
    n_classes: usize,
) -> Result<(DecisionStump<T>, T), LearnerError> {
    let orders = feature_orders(x);
    fit_stump_presorted(x, y, weights, n_classes, &orders)
}

/// [`fit_stump`] with precomputed [`feature_orders`].
pub fn fit_stump_presorted<T: OrderedWeight>(
    x: &[Vec<T>],
    y: &[usize],
    weights: &[T],
    n_classes: usize,
    orders: &[Vec<usize>],
) -> Result<(DecisionStump<T>, T), LearnerError> {
    if x.is_empty() {
        return Err(LearnerError::Empty);
    }
    if orders.is_empty() {
        return Err(LearnerError::NoFeatures);
    }
    let mut total = vec![T::zero(); n_classes];
    for (&c, &w) in y.iter().zip(weights) {
        total[c] = total[c] + w;
    }
    let mass = total.iter().fold(T::zero(), |a, &b| a + b);

    // fallback when no feature has two distinct values
    let (majority, top) = argmax(&total);
    let mut best = DecisionStump { feature: 0, threshold: x[0][0], left: majority, right: majority };
    let mut best_err = mass - top;
    let mut found = false;

    let mut left = vec![T::zero(); n_classes];
    let mut right = vec![T::zero(); n_classes];
    for (f, order) in orders.iter().enumerate() {
        left.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..order.len() - 1 {
            let i = order[k];
            left[y[i]] = left[y[i]] + weights[i];
            let (a, b) = (x[i][f], x[order[k + 1]][f]);
            if !(a < b) {
                continue;
            }
            for c in 0..n_classes {
                right[c] = total[c] - left[c];
            }
            let (lc, lw) = argmax(&left);
            let (rc, rw) = argmax(&right);
            let mut err = mass - lw - rw;
            if err < T::zero() {
                err = T::zero();
            }
            if !found || err < best_err {
                best = DecisionStump { feature: f, threshold: midpoint(a, b), left: lc, right: rc };
                best_err = err;
                found = true;
            }
        }
    }
    Ok((best, best_err))
}
