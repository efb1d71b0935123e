//! Multi-class discrete boosting (SAMME) over decision stumps.

use serde::{Deserialize, Serialize};

use super::stump::{feature_orders, fit_stump_presorted, DecisionStump};
use super::LearnerError;
use crate::scalar::Scalar;

pub const DEFAULT_ROUNDS: usize = 100;

/// Errors below this count as a perfect round.
const ZERO_ERROR: f64 = 1e-12;
/// Round weight used for a perfect round, before the ln(K - 1) term.
const PERFECT_ROUND_ODDS: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostRound<T> {
    pub stump: DecisionStump<T>,
    pub alpha: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaboostModel<T> {
    pub n_classes: usize,
    pub width: usize,
    pub rounds: Vec<AdaboostRound<T>>,
}

/// Per-round diagnostics from training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoostTrace<T> {
    /// Weighted error of every fitted stump, including a discarded last one.
    pub errors: Vec<T>,
    /// Sum of example weights after each accepted round.
    pub weight_sums: Vec<T>,
}

pub fn train_adaboost<T: Scalar>(
    x: &[Vec<T>],
    y: &[usize],
    n_rounds: usize,
    n_classes: usize,
) -> Result<AdaboostModel<T>, LearnerError> {
    train_adaboost_traced(x, y, n_rounds, n_classes).map(|(m, _)| m)
}

/// Trains and also returns the per-round trace.
///
/// Round weight is ln((1 - err) / err) + ln(K - 1). A round with
/// err >= (K - 1) / K is discarded and ends training; a perfect round gets a
/// capped weight and ends training.
pub fn train_adaboost_traced<T: Scalar>(
    x: &[Vec<T>],
    y: &[usize],
    n_rounds: usize,
    n_classes: usize,
) -> Result<(AdaboostModel<T>, BoostTrace<T>), LearnerError> {
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
    if y.iter().all(|&c| c == y[0]) {
        return Err(LearnerError::DegenerateLabels);
    }
    if width == 0 {
        return Err(LearnerError::NoFeatures);
    }

    let k = T::from_usize(n_classes).unwrap();
    let ln_k1 = (k - T::one()).ln();
    let give_up = (k - T::one()) / k;
    let orders = feature_orders(x);
    let n = T::from_usize(x.len()).unwrap();
    let mut w = vec![T::one() / n; x.len()];
    let mut rounds = Vec::new();
    let mut trace = BoostTrace::default();

    for _ in 0..n_rounds {
        let (stump, err) = fit_stump_presorted(x, y, &w, n_classes, &orders)?;
        let err = err.max(T::zero());
        trace.errors.push(err);
        if err >= give_up {
            break;
        }
        if err < T::lit(ZERO_ERROR) {
            rounds.push(AdaboostRound { stump, alpha: T::lit(PERFECT_ROUND_ODDS).ln() + ln_k1 });
            trace.weight_sums.push(w.iter().fold(T::zero(), |a, &b| a + b));
            break;
        }
        let alpha = ((T::one() - err) / err).ln() + ln_k1;
        let boost = alpha.exp();
        for (i, wi) in w.iter_mut().enumerate() {
            if stump.predict(&x[i]) != y[i] {
                *wi = *wi * boost;
            }
        }
        let sum = w.iter().fold(T::zero(), |a, &b| a + b);
        w.iter_mut().for_each(|wi| *wi = *wi / sum);
        trace.weight_sums.push(w.iter().fold(T::zero(), |a, &b| a + b));
        rounds.push(AdaboostRound { stump, alpha });
    }
    Ok((AdaboostModel { n_classes, width, rounds }, trace))
}

impl<T: Scalar> AdaboostModel<T> {
    /// Class of the ensemble's weighted vote.
    pub fn class_scores(&self, x: &[T]) -> Result<Vec<T>, LearnerError> {
        if x.len() != self.width {
            return Err(LearnerError::WidthMismatch { expected: self.width, found: x.len() });
        }
        let mut scores = vec![T::zero(); self.n_classes];
        for r in &self.rounds {
            let c = r.stump.predict(x);
            scores[c] = scores[c] + r.alpha;
        }
        Ok(scores)
    }

    /// Vote shares; uniform when no round voted.
    pub fn predict_proba(&self, x: &[T]) -> Result<Vec<T>, LearnerError> {
        let scores = self.class_scores(x)?;
        let total = scores.iter().fold(T::zero(), |a, &b| a + b);
        if total <= T::zero() {
            let u = T::one() / T::from_usize(self.n_classes).unwrap();
            return Ok(vec![u; self.n_classes]);
        }
        Ok(scores.into_iter().map(|s| s / total).collect())
    }

    pub fn predict(&self, x: &[T]) -> Result<usize, LearnerError> {
        let p = self.class_scores(x)?;
        let mut best = 0;
        for c in 1..p.len() {
            if p[c] > p[best] {
                best = c;
            }
        }
        Ok(best)
    }
}
