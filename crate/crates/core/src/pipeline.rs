//! Per-user training and evaluation: negatives, split, semantic scorers,
//! feature rows, classifier, metrics.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{UserModelBundle, BUNDLE_FORMAT_VERSION};
use crate::eval::{evaluate_probabilities, MetricError, UserReport, DEFAULT_THRESHOLD};
use crate::features::{enumerate_masks, FeatureMask, FeatureVector, FeatureWarning};
use crate::ingest::EmbeddingTable;
use crate::learners::{fit_classifier, LearnerError, LearnerKind};
use crate::model::{Corpus, InteractionType, LabeledInstance};
use crate::sampling::{
    assemble_instances, temporal_split, NegativeSampler, SamplingError, SplitDataset, DEFAULT_TRAIN_FRACTION,
    DEFAULT_WINDOW_HOURS,
};
use crate::semantic::{build_centroids, train_scorer_with, SemanticHyper, SemanticScorer, TitleEmbeddings};

pub const DEFAULT_MIN_INTERACTIONS: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("instance refers to unknown post {0:?}")]
    MissingPost(String),
    #[error("empty test partition")]
    EmptyTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub learner: LearnerKind,
    pub window_hours: f64,
    pub train_fraction: f64,
    pub mask: FeatureMask,
    /// Append hours-since-submission after the masked columns.
    pub include_age: bool,
    pub semantic: SemanticHyper,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            learner: LearnerKind::Adaboost,
            window_hours: DEFAULT_WINDOW_HOURS,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            mask: FeatureMask::FULL,
            include_age: false,
            semantic: SemanticHyper::default(),
            seed: 0,
        }
    }
}

/// Per-feature standardization fitted on the train partition. Constant
/// columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl NormStats {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; width];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; width];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scale {
            let sd = (*s / n).sqrt();
            *s = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
        }
        NormStats { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Shared, read-only inputs for every user's pipeline.
pub struct FeatureContext<'a> {
    pub corpus: &'a Corpus,
    pub table: &'a EmbeddingTable,
    pub titles: TitleEmbeddings,
}

impl<'a> FeatureContext<'a> {
    pub fn new(corpus: &'a Corpus, table: &'a EmbeddingTable) -> Self {
        FeatureContext { corpus, table, titles: TitleEmbeddings::build(corpus.posts(), table) }
    }

    /// Semantic scores of an instance's post, one per positive type.
    pub fn semantic_scores(&self, scorers: &[SemanticScorer], post_id: &str) -> [f64; 4] {
        let zero = vec![0.0; self.titles.dim()];
        let emb = self.titles.get(post_id).unwrap_or(&zero);
        let mut out = [0.0; 4];
        for (o, s) in out.iter_mut().zip(scorers) {
            *o = s.score_embedding(emb);
        }
        out
    }

    /// Unmasked feature rows for `instances`.
    pub fn feature_vectors(
        &self,
        scorers: &[SemanticScorer],
        instances: &[LabeledInstance],
    ) -> Result<Vec<FeatureVector>, PipelineError> {
        instances
            .iter()
            .map(|inst| {
                let post = self.corpus.post(&inst.post_id).ok_or_else(|| PipelineError::MissingPost(inst.post_id.clone()))?;
                let (fv, warning) = FeatureVector::compute(inst, post, self.semantic_scores(scorers, &inst.post_id));
                if let Some(FeatureWarning::EmptyTitle { post_id }) = warning {
                    warn!("post {post_id} has an empty title; readability set to 0");
                }
                Ok(fv)
            })
            .collect()
    }
}

/// Masked (and optionally age-extended) raw row.
pub fn feature_row(fv: &FeatureVector, inst: &LabeledInstance, mask: FeatureMask, include_age: bool) -> Vec<f64> {
    let mut row = fv.project(mask);
    if include_age {
        row.push(inst.age_hours);
    }
    row
}

/// Negatives, instance assembly, and the temporal split for one user.
pub fn prepare_user(sampler: &NegativeSampler<'_>, user: &str, cfg: &PipelineConfig) -> Result<SplitDataset, PipelineError> {
    let negatives = sampler.negatives_for(user, cfg.window_hours)?;
    let instances = assemble_instances(sampler.corpus(), user, negatives);
    Ok(temporal_split(instances, cfg.train_fraction)?)
}

/// The four per-type semantic scorers, trained on the train partition only.
pub fn train_scorers(ctx: &FeatureContext<'_>, user: &str, train: &[LabeledInstance], cfg: &PipelineConfig) -> Vec<SemanticScorer> {
    let centroids = build_centroids(train, ctx.corpus, ctx.table);
    InteractionType::POSITIVE
        .iter()
        .map(|&t| train_scorer_with(user, t, train, &ctx.titles, &centroids, &cfg.semantic, cfg.seed).scorer)
        .collect()
}

/// Fits normalization and the classifier for one mask over precomputed rows.
pub fn fit_bundle(
    user: &str,
    scorers: Vec<SemanticScorer>,
    train: &[LabeledInstance],
    train_fvs: &[FeatureVector],
    mask: FeatureMask,
    learner: LearnerKind,
    include_age: bool,
) -> Result<UserModelBundle, PipelineError> {
    let raw: Vec<Vec<f64>> = train_fvs.iter().zip(train).map(|(fv, i)| feature_row(fv, i, mask, include_age)).collect();
    let norm = NormStats::fit(&raw);
    let x: Vec<Vec<f64>> = raw.iter().map(|r| norm.apply(r)).collect();
    let y: Vec<usize> = train.iter().map(|i| i.label.index()).collect();
    let model = fit_classifier(learner, &x, &y)?;
    Ok(UserModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        user_id: user.to_string(),
        learner,
        mask,
        include_age,
        scorers,
        norm,
        model,
    })
}

pub fn train_user(
    ctx: &FeatureContext<'_>,
    user: &str,
    split: &SplitDataset,
    cfg: &PipelineConfig,
) -> Result<UserModelBundle, PipelineError> {
    let scorers = train_scorers(ctx, user, &split.train, cfg);
    let fvs = ctx.feature_vectors(&scorers, &split.train)?;
    fit_bundle(user, scorers, &split.train, &fvs, cfg.mask, cfg.learner, cfg.include_age)
}

fn predict_rows(bundle: &UserModelBundle, test: &[LabeledInstance], fvs: &[FeatureVector]) -> Result<Vec<Vec<f64>>, PipelineError> {
    test.iter().zip(fvs).map(|(inst, fv)| Ok(bundle.predict_features(fv, inst)?)).collect()
}

/// Class probabilities for every test instance, plus the per-type report.
pub fn evaluate_user(
    ctx: &FeatureContext<'_>,
    bundle: &UserModelBundle,
    test: &[LabeledInstance],
) -> Result<(UserReport, Vec<Vec<f64>>), PipelineError> {
    if test.is_empty() {
        return Err(PipelineError::EmptyTest);
    }
    let fvs = ctx.feature_vectors(&bundle.scorers, test)?;
    let probs = predict_rows(bundle, test, &fvs)?;
    let labels: Vec<InteractionType> = test.iter().map(|i| i.label).collect();
    let report = evaluate_probabilities(&bundle.user_id, &probs, &labels, DEFAULT_THRESHOLD)?;
    Ok((report, probs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub mask: FeatureMask,
    pub report: UserReport,
}

/// Retrains the classifier for every mask, reusing one set of semantic
/// scorers. Rows come back in mask order.
pub fn run_ablation(
    ctx: &FeatureContext<'_>,
    user: &str,
    split: &SplitDataset,
    cfg: &PipelineConfig,
    masks: &[FeatureMask],
) -> Result<Vec<AblationRow>, PipelineError> {
    if split.test.is_empty() {
        return Err(PipelineError::EmptyTest);
    }
    let scorers = train_scorers(ctx, user, &split.train, cfg);
    let train_fvs = ctx.feature_vectors(&scorers, &split.train)?;
    let test_fvs = ctx.feature_vectors(&scorers, &split.test)?;
    let labels: Vec<InteractionType> = split.test.iter().map(|i| i.label).collect();
    masks
        .iter()
        .map(|&mask| {
            let bundle = fit_bundle(user, scorers.clone(), &split.train, &train_fvs, mask, cfg.learner, cfg.include_age)?;
            let probs = predict_rows(&bundle, &split.test, &test_fvs)?;
            let report = evaluate_probabilities(user, &probs, &labels, DEFAULT_THRESHOLD)?;
            Ok(AblationRow { mask, report })
        })
        .collect()
}

/// All 64 masks.
pub fn run_full_ablation(
    ctx: &FeatureContext<'_>,
    user: &str,
    split: &SplitDataset,
    cfg: &PipelineConfig,
) -> Result<Vec<AblationRow>, PipelineError> {
    run_ablation(ctx, user, split, cfg, &enumerate_masks())
}
