//! Persisted per-user model: semantic scorers, normalization, classifier.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureMask, FeatureVector};
use crate::learners::{ClassifierModel, LearnerError, LearnerKind};
use crate::model::{LabeledInstance, Post, ViewContext};
use crate::pipeline::{feature_row, NormStats};
use crate::semantic::SemanticScorer;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bundle format version {found}, expected {BUNDLE_FORMAT_VERSION}")]
    Version { found: u32 },
}

/// Field order here is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserModelBundle {
    pub format_version: u32,
    pub user_id: String,
    pub learner: LearnerKind,
    pub mask: FeatureMask,
    pub include_age: bool,
    /// One per positive type, in `InteractionType::POSITIVE` order.
    pub scorers: Vec<SemanticScorer>,
    pub norm: NormStats,
    pub model: ClassifierModel,
}

impl UserModelBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header = serde_json::from_str(text)?;
        if header.format_version != BUNDLE_FORMAT_VERSION {
            return Err(BundleError::Version { found: header.format_version });
        }
        Ok(serde_json::from_str(text)?)
    }

    /// Class probabilities for a precomputed feature row.
    pub fn predict_features(&self, fv: &FeatureVector, inst: &LabeledInstance) -> Result<Vec<f64>, LearnerError> {
        let raw = feature_row(fv, inst, self.mask, self.include_age);
        self.model.predict_proba(&self.norm.apply(&raw))
    }

    /// Scores a post outside any listing: rank and score are treated as
    /// missing, and the post is observed at `observed_at`.
    pub fn predict_post(&self, post: &Post, title_avg: &[f64], observed_at: i64) -> Result<Vec<f64>, LearnerError> {
        let inst = LabeledInstance {
            user_id: self.user_id.clone(),
            post_id: post.post_id.clone(),
            label: crate::model::InteractionType::DoNothing,
            observed_at,
            context: ViewContext::Frontpage,
            rank: None,
            score: None,
            age_hours: crate::model::age_hours(observed_at, post.created_utc),
        };
        let mut semantic = [0.0; 4];
        for (s, scorer) in semantic.iter_mut().zip(&self.scorers) {
            *s = scorer.score_embedding(title_avg);
        }
        let (fv, _) = FeatureVector::compute(&inst, post, semantic);
        self.predict_features(&fv, &inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::fit_classifier;
    use crate::model::InteractionType;

    fn bundle() -> UserModelBundle {
        let x = vec![vec![0.1, 0.3], vec![0.9, 0.2], vec![0.4, 0.8], vec![0.7, 0.6]];
        UserModelBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            user_id: "u".into(),
            learner: LearnerKind::NaiveBayes,
            mask: "000110".parse().unwrap(),
            include_age: false,
            scorers: InteractionType::POSITIVE
                .iter()
                .map(|&itype| SemanticScorer::Degenerate { itype, base_rate: 0.25 })
                .collect(),
            norm: NormStats::fit(&x),
            model: fit_classifier(LearnerKind::NaiveBayes, &x, &[0, 4, 0, 4]).unwrap(),
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let b = bundle();
        let text = b.to_json();
        let back = UserModelBundle::from_json(&text).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_other_versions() {
        let text = bundle().to_json().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(matches!(UserModelBundle::from_json(&text), Err(BundleError::Version { found: 9 })));
    }

    #[test]
    fn predicts_unlisted_posts() {
        let post = Post { post_id: "x".into(), subreddit: "s".into(), title: "Hello there".into(), created_utc: 0, subscribers: 9 };
        let p = bundle().predict_post(&post, &[0.0, 0.0], 3600).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
