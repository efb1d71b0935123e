//! From-scratch multi-class classifiers behind one model type.

pub mod adaboost;
pub mod naive_bayes;
pub mod stump;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::InteractionType;

pub use adaboost::{train_adaboost, train_adaboost_traced, AdaboostModel, AdaboostRound, BoostTrace, DEFAULT_ROUNDS};
pub use naive_bayes::{softmax_log, train_gaussian_nb, GaussianNb};
pub use stump::{feature_orders, fit_stump, fit_stump_presorted, DecisionStump};

pub const N_CLASSES: usize = InteractionType::ALL.len();

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LearnerError {
    #[error("no training examples")]
    Empty,
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("feature width {found}, expected {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("class index {0} out of range")]
    UnknownClass(usize),
    #[error("degenerate labels: a single class")]
    DegenerateLabels,
    #[error("no features")]
    NoFeatures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    #[serde(alias = "nb")]
    NaiveBayes,
    Adaboost,
}

impl LearnerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::NaiveBayes => "nb",
            LearnerKind::Adaboost => "adaboost",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nb" | "naive_bayes" => Ok(LearnerKind::NaiveBayes),
            "adaboost" => Ok(LearnerKind::Adaboost),
            _ => Err(format!("unknown learner {s:?} (expected nb or adaboost)")),
        }
    }
}

/// A fitted 5-class model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    NaiveBayes(GaussianNb<f64>),
    Adaboost(AdaboostModel<f64>),
    /// Class frequencies only. Used when there are no features or a single
    /// training class.
    Prior { priors: Vec<f64> },
}

fn class_frequencies(y: &[usize]) -> Vec<f64> {
    let mut counts = vec![0.0; N_CLASSES];
    for &c in y {
        counts[c] += 1.0;
    }
    let n = y.len() as f64;
    counts.into_iter().map(|c| c / n).collect()
}

/// Fits the requested learner, falling back to the prior model for an empty
/// feature set or single-class labels.
pub fn fit_classifier(kind: LearnerKind, x: &[Vec<f64>], y: &[usize]) -> Result<ClassifierModel, LearnerError> {
    if x.is_empty() {
        return Err(LearnerError::Empty);
    }
    if x[0].is_empty() || y.iter().all(|&c| c == y[0]) {
        if let Some(&c) = y.iter().find(|&&c| c >= N_CLASSES) {
            return Err(LearnerError::UnknownClass(c));
        }
        return Ok(ClassifierModel::Prior { priors: class_frequencies(y) });
    }
    Ok(match kind {
        LearnerKind::NaiveBayes => ClassifierModel::NaiveBayes(train_gaussian_nb(x, y, N_CLASSES)?),
        LearnerKind::Adaboost => ClassifierModel::Adaboost(train_adaboost(x, y, DEFAULT_ROUNDS, N_CLASSES)?),
    })
}

impl ClassifierModel {
    /// Probability per class, indexed by [`InteractionType::index`].
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>, LearnerError> {
        match self {
            ClassifierModel::NaiveBayes(m) => m.predict_proba(x),
            ClassifierModel::Adaboost(m) => m.predict_proba(x),
            ClassifierModel::Prior { priors } => Ok(priors.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_feature_set_uses_priors() {
        let x = vec![vec![]; 4];
        let m = fit_classifier(LearnerKind::Adaboost, &x, &[0, 0, 4, 4]).unwrap();
        assert_eq!(m.predict_proba(&[]).unwrap(), vec![0.5, 0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_class_falls_back_to_prior() {
        let x = vec![vec![1.0], vec![2.0]];
        let m = fit_classifier(LearnerKind::Adaboost, &x, &[2, 2]).unwrap();
        assert!(matches!(m, ClassifierModel::Prior { .. }));
    }

    #[test]
    fn learner_names() {
        assert_eq!("nb".parse::<LearnerKind>().unwrap(), LearnerKind::NaiveBayes);
        assert_eq!("adaboost".parse::<LearnerKind>().unwrap(), LearnerKind::Adaboost);
        assert!("svm".parse::<LearnerKind>().is_err());
    }

    #[test]
    fn model_serialization_round_trips() {
        let x = vec![vec![0.1, 3.0], vec![0.7, 1.0], vec![0.35, 2.0], vec![0.9, 0.5]];
        let y = [0, 2, 0, 4];
        for kind in [LearnerKind::NaiveBayes, LearnerKind::Adaboost] {
            let m = fit_classifier(kind, &x, &y).unwrap();
            let text = serde_json::to_string(&m).unwrap();
            let back: ClassifierModel = serde_json::from_str(&text).unwrap();
            assert_eq!(back, m);
        }
    }
}
