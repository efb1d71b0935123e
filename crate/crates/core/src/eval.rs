//! Per-type metrics, cross-user aggregation, and the random baseline.

use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{InteractionType, LabeledInstance, Timestamp};
use crate::rng::keyed_rng;

pub const DEFAULT_THRESHOLD: f64 = 0.5;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric undefined: labels contain a single class")]
    Undefined,
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
}

fn cmp_scores<T: PartialOrd>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}

/// Mann-Whitney AUC: (wins + ties / 2) / (P * N) over positive-negative pairs.
///
/// Pair counts are accumulated as integers, so the only rounding is the final
/// division.
pub fn roc_auc<T: PartialOrd + Copy>(scores: &[T], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let p = labels.iter().filter(|&&l| l).count() as u128;
    let n = labels.len() as u128 - p;
    if p == 0 || n == 0 {
        return Err(MetricError::Undefined);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| cmp_scores(&scores[a], &scores[b]));

    // twice the Mann-Whitney numerator
    let mut doubled: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && cmp_scores(&scores[idx[start]], &scores[idx[end]]) == Ordering::Equal {
            end += 1;
        }
        let group_pos = idx[start..end].iter().filter(|&&i| labels[i]).count() as u128;
        let group_neg = (end - start) as u128 - group_pos;
        doubled += 2 * group_pos * negatives_below + group_pos * group_neg;
        negatives_below += group_neg;
        start = end;
    }
    Ok(doubled as f64 / (2 * p * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    /// 1.0 when nothing is predicted positive.
    pub precision: f64,
    /// `None` when the labels contain no positives.
    pub recall: Option<f64>,
}

/// Predicted positive iff `score > threshold`.
pub fn precision_recall_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<PrecisionRecall, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s > threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    Ok(PrecisionRecall { precision, recall })
}

/// Average ranks (1-based) with ties sharing their mean rank.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| cmp_scores(&v[a], &v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation; `None` when either side is constant or the
/// lengths differ.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Metrics for one positive type of one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeCell {
    pub itype: InteractionType,
    pub auc: Option<f64>,
    pub precision: f64,
    pub recall: Option<f64>,
    /// Test instances labeled with this type.
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub user_id: String,
    /// One cell per positive type, in `InteractionType::POSITIVE` order.
    pub cells: Vec<TypeCell>,
    pub n_test: usize,
}

impl UserReport {
    pub fn cell(&self, itype: InteractionType) -> Option<&TypeCell> {
        self.cells.iter().find(|c| c.itype == itype)
    }

    /// Mean of the defined per-type AUCs.
    pub fn mean_unweighted(&self) -> Option<f64> {
        let v: Vec<f64> = self.cells.iter().filter_map(|c| c.auc).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Defined per-type AUCs weighted by the test counts of each type.
    pub fn mean_weighted(&self) -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for c in &self.cells {
            if let Some(a) = c.auc {
                num += a * c.n_test as f64;
                den += c.n_test as f64;
            }
        }
        (den > 0.0).then(|| num / den)
    }
}

/// One-vs-rest metrics from class-probability rows (indexed by
/// [`InteractionType::index`]) against the true labels.
pub fn evaluate_probabilities(
    user_id: &str,
    probs: &[Vec<f64>],
    labels: &[InteractionType],
    threshold: f64,
) -> Result<UserReport, MetricError> {
    if probs.len() != labels.len() {
        return Err(MetricError::LengthMismatch { scores: probs.len(), labels: labels.len() });
    }
    let cells = InteractionType::POSITIVE
        .iter()
        .map(|&t| {
            let scores: Vec<f64> = probs.iter().map(|p| p[t.index()]).collect();
            let truth: Vec<bool> = labels.iter().map(|&l| l == t).collect();
            let pr = precision_recall_at(&scores, &truth, threshold)?;
            Ok(TypeCell {
                itype: t,
                auc: roc_auc(&scores, &truth).ok(),
                precision: pr.precision,
                recall: pr.recall,
                n_test: truth.iter().filter(|&&b| b).count(),
            })
        })
        .collect::<Result<Vec<_>, MetricError>>()?;
    Ok(UserReport { user_id: user_id.to_string(), cells, n_test: labels.len() })
}

/// Mean with a normal-approximation 95% interval across users.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

/// `None` for an empty sample; half-width 0 for a single value.
pub fn mean_ci(values: &[f64]) -> Option<MeanCi> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let half = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        Z_95 * var.sqrt() / n.sqrt()
    };
    Some(MeanCi { mean, ci_low: mean - half, ci_high: mean + half, n: values.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    /// Per positive type, `None` when no user had a defined cell.
    pub per_type: Vec<(InteractionType, Option<MeanCi>)>,
    pub mean_unweighted: Option<MeanCi>,
    pub mean_weighted: Option<MeanCi>,
}

impl AggregateReport {
    pub fn type_mean(&self, itype: InteractionType) -> Option<f64> {
        self.per_type.iter().find(|(t, _)| *t == itype).and_then(|(_, m)| m.map(|m| m.mean))
    }
}

/// Cross-user means. Reports are summed in user-id order, so the result does
/// not depend on the order they are passed in.
pub fn aggregate(reports: &[UserReport]) -> AggregateReport {
    let mut sorted: Vec<&UserReport> = reports.iter().collect();
    sorted.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    let per_type = InteractionType::POSITIVE
        .iter()
        .map(|&t| {
            let v: Vec<f64> = sorted.iter().filter_map(|r| r.cell(t).and_then(|c| c.auc)).collect();
            (t, mean_ci(&v))
        })
        .collect();
    let unweighted: Vec<f64> = sorted.iter().filter_map(|r| r.mean_unweighted()).collect();
    let weighted: Vec<f64> = sorted.iter().filter_map(|r| r.mean_weighted()).collect();
    AggregateReport { per_type, mean_unweighted: mean_ci(&unweighted), mean_weighted: mean_ci(&weighted) }
}

/// Precision and recall of uniform random scores at threshold 0.5, averaged
/// over trials. Recall is averaged over trials where it is defined.
pub fn random_baseline(test: &[LabeledInstance], itype: InteractionType, n_trials: usize, seed: u64) -> (f64, Option<f64>) {
    let truth: Vec<bool> = test.iter().map(|i| i.label == itype).collect();
    let mut rng = keyed_rng(seed, &["baseline", itype.as_str()]);
    let mut scores = vec![0.0; truth.len()];
    let (mut p_sum, mut r_sum, mut r_n) = (0.0, 0.0, 0usize);
    for _ in 0..n_trials {
        scores.iter_mut().for_each(|s| *s = rng.random::<f64>());
        let pr = precision_recall_at(&scores, &truth, DEFAULT_THRESHOLD).expect("lengths match");
        p_sum += pr.precision;
        if let Some(r) = pr.recall {
            r_sum += r;
            r_n += 1;
        }
    }
    let trials = n_trials.max(1) as f64;
    (p_sum / trials, (r_n > 0).then(|| r_sum / r_n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "FP")]
    FalsePositive,
    #[serde(rename = "TN")]
    TrueNegative,
    #[serde(rename = "FN")]
    FalseNegative,
}

impl Outcome {
    pub fn classify(prob: f64, label: bool, threshold: f64) -> Self {
        match (prob > threshold, label) {
            (true, true) => Outcome::TruePositive,
            (true, false) => Outcome::FalsePositive,
            (false, false) => Outcome::TrueNegative,
            (false, true) => Outcome::FalseNegative,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::TruePositive => "TP",
            Outcome::FalsePositive => "FP",
            Outcome::TrueNegative => "TN",
            Outcome::FalseNegative => "FN",
        }
    }
}

/// One row of a per-user, per-type prediction trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub observed_at: Timestamp,
    pub prob: f64,
    pub label: bool,
    pub outcome: Outcome,
}

pub fn trace_rows(test: &[LabeledInstance], probs: &[Vec<f64>], itype: InteractionType, threshold: f64) -> Vec<TraceRow> {
    test.iter()
        .zip(probs)
        .map(|(inst, p)| {
            let prob = p[itype.index()];
            let label = inst.label == itype;
            TraceRow { observed_at: inst.observed_at, prob, label, outcome: Outcome::classify(prob, label, threshold) }
        })
        .collect()
}
