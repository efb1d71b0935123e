//! The six feature groups, their column layout, and ablation masks.

mod readability;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use readability::{count_syllables, flesch_from_counts, flesch_reading_ease, text_counts, EmptyText};

use crate::model::{LabeledInstance, Post};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureGroup {
    Rank,
    Score,
    Readability,
    Subscribers,
    TitleLength,
    Semantic,
}

impl FeatureGroup {
    /// Bit order used by masks and their 6-character string form.
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::Rank,
        FeatureGroup::Score,
        FeatureGroup::Readability,
        FeatureGroup::Subscribers,
        FeatureGroup::TitleLength,
        FeatureGroup::Semantic,
    ];

    pub fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            FeatureGroup::Rank => &["rank", "rank_missing"],
            FeatureGroup::Score => &["log_score", "score_hidden"],
            FeatureGroup::Readability => &["flesch"],
            FeatureGroup::Subscribers => &["log_subscribers"],
            FeatureGroup::TitleLength => &["title_words"],
            FeatureGroup::Semantic => &[
                "semantic_upvote",
                "semantic_downvote",
                "semantic_browse_content",
                "semantic_browse_comments",
            ],
        }
    }
}

/// Subset of feature groups. Bit `i` is `FeatureGroup::ALL[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(u8);

impl FeatureMask {
    pub const EMPTY: FeatureMask = FeatureMask(0);
    pub const FULL: FeatureMask = FeatureMask(0b11_1111);

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits <= Self::FULL.0).then_some(FeatureMask(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn only(group: FeatureGroup) -> Self {
        FeatureMask(group.bit())
    }

    pub fn contains(self, group: FeatureGroup) -> bool {
        self.0 & group.bit() != 0
    }

    pub fn with(self, group: FeatureGroup) -> Self {
        FeatureMask(self.0 | group.bit())
    }

    pub fn without(self, group: FeatureGroup) -> Self {
        FeatureMask(self.0 & !group.bit())
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn groups(self) -> impl Iterator<Item = FeatureGroup> {
        FeatureGroup::ALL.into_iter().filter(move |g| self.contains(*g))
    }

    /// Names of the emitted columns, in emission order.
    pub fn column_names(self) -> Vec<&'static str> {
        self.groups().flat_map(|g| g.columns().iter().copied()).collect()
    }

    pub fn width(self) -> usize {
        self.groups().map(|g| g.columns().len()).sum()
    }
}

impl fmt::Display for FeatureMask {
    /// Six `0`/`1` characters in group order Rank..Semantic.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for g in FeatureGroup::ALL {
            f.write_str(if self.contains(g) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for FeatureMask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != 6 {
            return Err(format!("mask {s:?} must have 6 characters"));
        }
        let mut mask = FeatureMask::EMPTY;
        for (c, g) in s.chars().zip(FeatureGroup::ALL) {
            match c {
                '1' => mask = mask.with(g),
                '0' => {}
                _ => return Err(format!("mask {s:?} may only contain 0 and 1")),
            }
        }
        Ok(mask)
    }
}

impl Serialize for FeatureMask {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureMask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// All 64 masks in binary counting order, empty first and full last.
pub fn enumerate_masks() -> Vec<FeatureMask> {
    (0..=FeatureMask::FULL.0).map(FeatureMask).collect()
}

/// Full feature row before masking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub rank_value: f64,
    pub rank_missing: f64,
    pub log_score: f64,
    pub score_hidden: f64,
    pub flesch: f64,
    pub log_subscribers: f64,
    pub title_words: f64,
    pub semantic: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureWarning {
    /// Title had no words; readability was zero-filled.
    EmptyTitle { post_id: String },
}

/// ln(1 + |x|) with the sign of x.
pub fn signed_log1p(x: i64) -> f64 {
    (x.unsigned_abs() as f64).ln_1p() * (x.signum() as f64)
}

impl FeatureVector {
    pub fn compute(instance: &LabeledInstance, post: &Post, semantic: [f64; 4]) -> (Self, Option<FeatureWarning>) {
        let (rank_value, rank_missing) = match instance.rank {
            Some(r) => (r as f64, 0.0),
            None => (0.0, 1.0),
        };
        let (log_score, score_hidden) = match instance.score {
            Some(s) => (signed_log1p(s), 0.0),
            None => (0.0, 1.0),
        };
        let (flesch, warning) = match flesch_reading_ease::<f64>(&post.title) {
            Ok(v) => (v, None),
            Err(EmptyText) => (0.0, Some(FeatureWarning::EmptyTitle { post_id: post.post_id.clone() })),
        };
        let fv = FeatureVector {
            rank_value,
            rank_missing,
            log_score,
            score_hidden,
            flesch,
            log_subscribers: (post.subscribers as f64).ln_1p(),
            title_words: post.title.split_whitespace().count() as f64,
            semantic,
        };
        (fv, warning)
    }

    /// Emits the columns of the groups in `mask`, in group order.
    pub fn project(&self, mask: FeatureMask) -> Vec<f64> {
        let mut out = Vec::with_capacity(mask.width());
        for g in mask.groups() {
            match g {
                FeatureGroup::Rank => out.extend([self.rank_value, self.rank_missing]),
                FeatureGroup::Score => out.extend([self.log_score, self.score_hidden]),
                FeatureGroup::Readability => out.push(self.flesch),
                FeatureGroup::Subscribers => out.push(self.log_subscribers),
                FeatureGroup::TitleLength => out.push(self.title_words),
                FeatureGroup::Semantic => out.extend(self.semantic),
            }
        }
        out
    }
}

/// Feature row for one instance, restricted to `mask`.
pub fn extract_features(
    instance: &LabeledInstance,
    post: &Post,
    semantic_scores: [f64; 4],
    mask: FeatureMask,
) -> (Vec<f64>, Option<FeatureWarning>) {
    let (fv, warning) = FeatureVector::compute(instance, post, semantic_scores);
    (fv.project(mask), warning)
}
