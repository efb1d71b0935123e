//! Per-type probability distributions over rank, score, age, and readability,
//! split by view-context group.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::features::flesch_reading_ease;
use crate::model::{age_hours, ContextGroup, Corpus, InteractionType};

pub const MAX_RANK: i64 = 50;
pub const MAX_AGE_HOURS: f64 = 48.0;
pub const READABILITY_BIN_WIDTH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    Rank,
    Score,
    AgeHours,
    Readability,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [Dimension::Rank, Dimension::Score, Dimension::AgeHours, Dimension::Readability];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Rank => "rank",
            Dimension::Score => "score",
            Dimension::AgeHours => "age_hours",
            Dimension::Readability => "readability",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown dimension {0:?} (expected rank, score, age_hours, or readability)")]
pub struct UnknownDimension(pub String);

impl FromStr for Dimension {
    type Err = UnknownDimension;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dimension::ALL.into_iter().find(|d| d.as_str() == s).ok_or_else(|| UnknownDimension(s.to_string()))
    }
}

/// Half-open interval `[low, high)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    pub dimension: Dimension,
    pub group: ContextGroup,
    pub bins: Vec<Bin>,
    /// Binned event counts per positive type, aligned with `bins`.
    pub counts: BTreeMap<InteractionType, Vec<u64>>,
    /// Events of the group left out of the bins: absent rank, rank above the
    /// cap, hidden score, age past the cap, or an empty title.
    pub excluded: u64,
    /// Share of the group's events with a hidden score (score dimension only).
    pub hidden_score_fraction: Option<f64>,
}

impl DistributionTable {
    /// `count / binned total` per bin; `None` for a type with no binned events.
    pub fn probabilities(&self, itype: InteractionType) -> Option<Vec<f64>> {
        let c = self.counts.get(&itype)?;
        let total: u64 = c.iter().sum();
        (total > 0).then(|| c.iter().map(|&n| n as f64 / total as f64).collect())
    }

    /// Counts summed over all types.
    pub fn pooled_counts(&self) -> Vec<u64> {
        let mut out = vec![0; self.bins.len()];
        for c in self.counts.values() {
            for (o, n) in out.iter_mut().zip(c) {
                *o += n;
            }
        }
        out
    }

    /// Lower edge of the bin holding the pooled median.
    pub fn pooled_median_bin(&self) -> Option<f64> {
        let counts = self.pooled_counts();
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let mut acc = 0;
        for (bin, n) in self.bins.iter().zip(&counts) {
            acc += n;
            if 2 * acc >= total {
                return Some(bin.low);
            }
        }
        None
    }
}

fn score_bin(score: i64) -> usize {
    if score <= 0 {
        0
    } else {
        // bin k >= 1 holds [2^(k-1), 2^k)
        (64 - (score as u64).leading_zeros()) as usize
    }
}

/// Builds one table for `dimension` over the events of `group`.
pub fn distribution_by(corpus: &Corpus, dimension: Dimension, group: ContextGroup) -> DistributionTable {
    let events: Vec<_> = corpus.events().iter().filter(|e| e.context.group() == group).collect();
    if events.is_empty() {
        warn!("no {} events for context group {}", dimension, group.as_str());
    }
    // (type, bin index) per binned event
    let mut keyed: Vec<(InteractionType, i64)> = Vec::with_capacity(events.len());
    let mut excluded = 0u64;
    let mut hidden = 0u64;
    let width = READABILITY_BIN_WIDTH;
    for e in &events {
        let post = corpus.post(&e.post_id);
        let key = match dimension {
            Dimension::Rank => e.rank.filter(|&r| (1..=MAX_RANK).contains(&r)),
            Dimension::Score => match e.score {
                Some(s) => Some(score_bin(s) as i64),
                None => {
                    hidden += 1;
                    None
                }
            },
            Dimension::AgeHours => post
                .map(|p| age_hours(e.timestamp, p.created_utc))
                .filter(|&a| a < MAX_AGE_HOURS)
                .map(|a| a.floor() as i64),
            Dimension::Readability => post
                .and_then(|p| flesch_reading_ease::<f64>(&p.title).ok())
                .map(|f| (f / width).floor() as i64),
        };
        match key {
            Some(k) => keyed.push((e.itype, k)),
            None => excluded += 1,
        }
    }

    let bins: Vec<Bin> = match dimension {
        Dimension::Rank => (1..=MAX_RANK).map(|r| Bin { low: r as f64, high: (r + 1) as f64 }).collect(),
        Dimension::AgeHours => (0..MAX_AGE_HOURS as i64).map(|h| Bin { low: h as f64, high: (h + 1) as f64 }).collect(),
        Dimension::Score => {
            let top = keyed.iter().map(|k| k.1).max().unwrap_or(0).max(1);
            let mut b = vec![Bin { low: f64::NEG_INFINITY, high: 1.0 }];
            b.extend((1..=top).map(|k| Bin { low: (1u64 << (k - 1)) as f64, high: (1u64 << k) as f64 }));
            b
        }
        Dimension::Readability => {
            let lo = keyed.iter().map(|k| k.1).min().unwrap_or(0);
            let hi = keyed.iter().map(|k| k.1).max().unwrap_or(0);
            (lo..=hi).map(|k| Bin { low: k as f64 * width, high: (k + 1) as f64 * width }).collect()
        }
    };
    let offset = match dimension {
        Dimension::Rank => 1,
        Dimension::Readability => keyed.iter().map(|k| k.1).min().unwrap_or(0),
        Dimension::Score | Dimension::AgeHours => 0,
    };

    let mut counts: BTreeMap<InteractionType, Vec<u64>> =
        InteractionType::POSITIVE.iter().map(|&t| (t, vec![0; bins.len()])).collect();
    for (t, k) in keyed {
        if let Some(c) = counts.get_mut(&t) {
            c[(k - offset) as usize] += 1;
        }
    }
    let hidden_score_fraction =
        (dimension == Dimension::Score && !events.is_empty()).then(|| hidden as f64 / events.len() as f64);
    DistributionTable { dimension, group, bins, counts, excluded, hidden_score_fraction }
}

/// Share of each positive type among all events, in `POSITIVE` order.
pub fn type_shares(corpus: &Corpus) -> [f64; 4] {
    let mut counts = [0u64; 4];
    for e in corpus.events() {
        if let Some(i) = InteractionType::POSITIVE.iter().position(|&t| t == e.itype) {
            counts[i] += 1;
        }
    }
    let n = corpus.events().len().max(1) as f64;
    counts.map(|c| c as f64 / n)
}

/// Fraction of events with a hidden score.
pub fn hidden_score_fraction(corpus: &Corpus) -> f64 {
    let n = corpus.events().len();
    if n == 0 {
        return 0.0;
    }
    corpus.events().iter().filter(|e| e.score.is_none()).count() as f64 / n as f64
}
