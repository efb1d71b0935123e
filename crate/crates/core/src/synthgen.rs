//! Seeded synthetic corpus with planted rank, recency, score, readability, and
//! title-vocabulary effects.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::flesch_reading_ease;
use crate::ingest::EmbeddingTable;
use crate::model::{Corpus, InteractionEvent, InteractionType, Post, ViewContext, SECONDS_PER_HOUR};
use crate::rng::keyed_rng;

/// 2015-08-01T00:00:00Z.
pub const BASE_EPOCH: i64 = 1_438_387_200;

/// Interaction shares (upvote, downvote, browse_content, browse_comments)
/// from 27,618 / 2,431 / 265,239 / 43,982 recorded interactions.
pub const REFERENCE_CLASS_MIX: [f64; 4] = [0.0814, 0.0072, 0.7818, 0.1296];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid generator config: {0}")]
pub struct GenConfigError(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub n_users: usize,
    pub n_posts: usize,
    pub n_subreddits: usize,
    /// Rank exponent for frontpage and /r/all listings.
    pub rank_bias_exponent: f64,
    pub rank_bias_exponent_subreddit: f64,
    pub recency_median_hours_front: f64,
    pub recency_median_hours_subreddit: f64,
    /// Log-space spread of the recency kernel.
    pub recency_sigma: f64,
    /// Shares of (upvote, downvote, browse_content, browse_comments).
    pub class_mix: [f64; 4],
    pub hidden_score_fraction: f64,
    /// Listed-but-ignored posts per interaction: a page of n listed posts
    /// yields n / (1 + ratio) interactions on average.
    pub noninteraction_ratio: f64,
    /// Planted title tokens per interaction type name.
    pub vocab_by_type: BTreeMap<String, Vec<String>>,
    pub horizon_hours: f64,
    pub sessions_per_user: usize,
    pub page_size: usize,
    /// Each user browses one of this many listing pages, so ranks run from
    /// `25 * page + 1`. More pages give each user a distinct rank band.
    pub listing_pages: usize,
    pub subreddits_per_user: usize,
    /// Posts stay listed this long after submission.
    pub listing_window_hours: f64,
    /// Probability that an interaction takes the post's planted type rather
    /// than a draw from `class_mix`.
    pub type_fidelity: f64,
    /// Strength of the preference for easy-to-read titles.
    pub easy_title_bias: f64,
    pub planted_tokens_min: usize,
    pub planted_tokens_max: usize,
    pub title_words_min: usize,
    pub title_words_max: usize,
    pub background_vocab: usize,
    pub subscribers_min: u64,
    pub subscribers_max: u64,
    /// Shares of (frontpage, all, subreddit) page loads.
    pub context_mix: [f64; 3],
    /// Time constant of a post's vote accumulation; 0 shows the final score
    /// immediately.
    pub score_growth_hours: f64,
    /// Probability that a post's final score is negative.
    pub negative_score_rate: f64,
    pub embedding_dim: usize,
}

/// Six tokens per type with syllable counts 1, 1, 2, 2, 3, 3, so planted
/// words do not shift readability between types.
fn default_vocab() -> BTreeMap<String, Vec<String>> {
    let words = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    BTreeMap::from([
        ("upvote".to_string(), words(&["proud", "thanks", "happy", "pretty", "wholesome", "amazing"])),
        ("downvote".to_string(), words(&["scam", "fake", "repost", "bogus", "misleading", "dishonest"])),
        ("browse_content".to_string(), words(&["gif", "pic", "photo", "video", "timelapse", "gallery"])),
        ("browse_comments".to_string(), words(&["thoughts", "why", "debate", "serious", "opinion", "discussion"])),
    ])
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 1,
            n_users: 100,
            n_posts: 20_000,
            n_subreddits: 200,
            rank_bias_exponent: 0.3,
            rank_bias_exponent_subreddit: 1.0,
            recency_median_hours_front: 4.0,
            recency_median_hours_subreddit: 1.5,
            recency_sigma: 1.0,
            class_mix: REFERENCE_CLASS_MIX,
            hidden_score_fraction: 0.4,
            noninteraction_ratio: 9.0,
            vocab_by_type: default_vocab(),
            horizon_hours: 720.0,
            sessions_per_user: 340,
            page_size: 25,
            listing_pages: 1,
            subreddits_per_user: 5,
            listing_window_hours: 48.0,
            type_fidelity: 0.8,
            easy_title_bias: 1.0,
            planted_tokens_min: 0,
            planted_tokens_max: 3,
            title_words_min: 3,
            title_words_max: 12,
            background_vocab: 400,
            subscribers_min: 1_000,
            subscribers_max: 10_000_000,
            context_mix: [0.35, 0.15, 0.5],
            score_growth_hours: 6.0,
            negative_score_rate: 0.05,
            embedding_dim: 16,
        }
    }
}

fn check(cond: bool, msg: &str) -> Result<(), GenConfigError> {
    if cond {
        Ok(())
    } else {
        Err(GenConfigError(msg.to_string()))
    }
}

fn is_distribution(v: &[f64]) -> bool {
    v.iter().all(|&p| p >= 0.0 && p.is_finite()) && (v.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenConfigError> {
        check(self.n_users >= 1 && self.n_posts >= 1 && self.n_subreddits >= 1, "n_users, n_posts, n_subreddits must be >= 1")?;
        check(is_distribution(&self.class_mix), "class_mix must be nonnegative and sum to 1")?;
        check(is_distribution(&self.context_mix), "context_mix must be nonnegative and sum to 1")?;
        check((0.0..=1.0).contains(&self.hidden_score_fraction), "hidden_score_fraction must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.type_fidelity), "type_fidelity must lie in [0, 1]")?;
        check((0.0..=1.0).contains(&self.negative_score_rate), "negative_score_rate must lie in [0, 1]")?;
        check(self.noninteraction_ratio >= 0.0, "noninteraction_ratio must be >= 0")?;
        check(self.rank_bias_exponent >= 0.0 && self.rank_bias_exponent_subreddit >= 0.0, "rank exponents must be >= 0")?;
        check(
            self.recency_median_hours_front > 0.0 && self.recency_median_hours_subreddit > 0.0 && self.recency_sigma > 0.0,
            "recency medians and sigma must be > 0",
        )?;
        check(self.horizon_hours > 0.0 && self.listing_window_hours > 0.0, "horizon and listing window must be > 0")?;
        check(self.sessions_per_user >= 1 && self.page_size >= 1 && self.listing_pages >= 1, "session sizes must be >= 1")?;
        check(
            (1..=self.n_subreddits).contains(&self.subreddits_per_user),
            "subreddits_per_user must lie in [1, n_subreddits]",
        )?;
        check(self.planted_tokens_min <= self.planted_tokens_max, "planted_tokens_min exceeds planted_tokens_max")?;
        check(
            self.title_words_min >= 1 && self.title_words_min <= self.title_words_max,
            "title word bounds must satisfy 1 <= min <= max",
        )?;
        check(self.background_vocab >= 1 && self.embedding_dim >= 1, "background_vocab and embedding_dim must be >= 1")?;
        check(
            self.subscribers_min >= 1 && self.subscribers_min <= self.subscribers_max,
            "subscriber bounds must satisfy 1 <= min <= max",
        )?;
        check(self.score_growth_hours >= 0.0, "score_growth_hours must be >= 0")?;
        for (k, words) in &self.vocab_by_type {
            let t: InteractionType = k.parse().map_err(|_| GenConfigError(format!("vocab_by_type key {k:?} is not a type")))?;
            check(t.is_positive(), "vocab_by_type keys must be positive interaction types")?;
            check(words.iter().all(|w| !w.is_empty() && w.chars().all(char::is_alphanumeric)), "planted tokens must be alphanumeric")?;
        }
        Ok(())
    }

    fn planted(&self, t: InteractionType) -> &[String] {
        self.vocab_by_type.get(t.as_str()).map_or(&[], Vec::as_slice)
    }

    fn rank_exponent(&self, ctx: ViewContext) -> f64 {
        match ctx {
            ViewContext::Subreddit => self.rank_bias_exponent_subreddit,
            _ => self.rank_bias_exponent,
        }
    }

    fn recency_median(&self, ctx: ViewContext) -> f64 {
        match ctx {
            ViewContext::Subreddit => self.recency_median_hours_subreddit,
            _ => self.recency_median_hours_front,
        }
    }
}

/// Log-normal recency kernel scaled to peak at 1.
fn recency_kernel(age_hours: f64, median: f64, sigma: f64) -> f64 {
    if age_hours <= 0.0 {
        return 0.0;
    }
    let mu = median.ln();
    let mode = (mu - sigma * sigma).exp();
    let log_pdf = |a: f64| -a.ln() - (a.ln() - mu).powi(2) / (2.0 * sigma * sigma);
    (log_pdf(age_hours) - log_pdf(mode)).exp()
}

/// rank^-e times the recency kernel; in [0, 1].
pub fn interaction_propensity(cfg: &GenConfig, rank: u64, age_hours: f64, context: ViewContext) -> f64 {
    let r = rank.max(1) as f64;
    r.powf(-cfg.rank_exponent(context)) * recency_kernel(age_hours, cfg.recency_median(context), cfg.recency_sigma)
}

const CONSONANTS: &[char] = &['b', 'd', 'f', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v', 'z'];
const VOWELS: &[char] = &['a', 'i', 'o', 'u'];

/// Pronounceable consonant-vowel words with 1 to 4 syllables each, distinct
/// and disjoint from the planted vocabulary.
fn background_words(cfg: &GenConfig) -> Vec<String> {
    let mut rng = keyed_rng(cfg.seed, &["synth", "vocab"]);
    let n = cfg.background_vocab;
    let mut seen: BTreeSet<String> = cfg.vocab_by_type.values().flatten().map(|w| w.to_lowercase()).collect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = 1 + (out.len() % 4);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())]);
            w.push(VOWELS[rng.random_range(0..VOWELS.len())]);
        }
        if rng.random_bool(0.5) {
            w.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())]);
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn draw_index(weights: &[f64], rng: &mut ChaCha8Rng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return Some(i);
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0)
}

struct GenPost {
    post: Post,
    affinity: InteractionType,
    final_score: i64,
    appeal: f64,
}

/// Generated corpus plus the per-post planted type, for diagnostics.
#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub corpus: Corpus,
    pub affinity: BTreeMap<String, InteractionType>,
}

fn generate_posts(cfg: &GenConfig, vocab: &[String]) -> Vec<GenPost> {
    let mut rng = keyed_rng(cfg.seed, &["synth", "posts"]);
    let (lo, hi) = ((cfg.subscribers_min as f64).ln(), (cfg.subscribers_max as f64).ln());
    let subscribers: Vec<u64> =
        (0..cfg.n_subreddits).map(|_| if hi > lo { rng.random_range(lo..=hi).exp().round() as u64 } else { cfg.subscribers_min }).collect();
    let score_mag = LogNormal::new(1.5, 1.5).expect("valid log-normal");
    let start = -cfg.listing_window_hours * SECONDS_PER_HOUR;
    let end = cfg.horizon_hours * SECONDS_PER_HOUR;

    (0..cfg.n_posts)
        .map(|i| {
            let sub = rng.random_range(0..cfg.n_subreddits);
            let created = BASE_EPOCH + rng.random_range(start..end).floor() as i64;
            let affinity = InteractionType::POSITIVE[draw_index(&cfg.class_mix, &mut rng).expect("class_mix sums to 1")];
            let n_words = rng.random_range(cfg.title_words_min..=cfg.title_words_max);
            let mut words: Vec<String> = (0..n_words).map(|_| vocab[rng.random_range(0..vocab.len())].clone()).collect();
            let planted = cfg.planted(affinity);
            if !planted.is_empty() {
                for _ in 0..rng.random_range(cfg.planted_tokens_min..=cfg.planted_tokens_max) {
                    let at = rng.random_range(0..=words.len());
                    words.insert(at, planted[rng.random_range(0..planted.len())].clone());
                }
            }
            let mut title = words.join(" ");
            if let Some(first) = title.get(0..1) {
                title.replace_range(0..1, &first.to_uppercase());
            }
            if rng.random_bool(0.2) {
                title.push(['.', '?', '!'][rng.random_range(0..3)]);
            }
            let magnitude: f64 = score_mag.sample(&mut rng);
            let magnitude = magnitude.floor() as i64;
            let final_score = if rng.random_bool(cfg.negative_score_rate) { -(magnitude.min(50)) - 1 } else { magnitude };
            let fre = flesch_reading_ease::<f64>(&title).unwrap_or(0.0);
            let appeal = (cfg.easy_title_bias * (fre - 50.0) / 50.0).exp();
            GenPost {
                post: Post {
                    post_id: format!("p{i:06}"),
                    subreddit: format!("sub{sub:03}"),
                    title,
                    created_utc: created,
                    subscribers: subscribers[sub],
                },
                affinity,
                final_score,
                appeal,
            }
        })
        .collect()
}

fn displayed_score(cfg: &GenConfig, final_score: i64, age_hours: f64) -> i64 {
    if cfg.score_growth_hours == 0.0 {
        return final_score;
    }
    (final_score as f64 * (1.0 - (-age_hours / cfg.score_growth_hours).exp())).round() as i64
}

/// Posts sorted by creation time, globally and per subreddit.
struct Listings {
    order: Vec<usize>,
    created: Vec<i64>,
    by_sub: Vec<(Vec<usize>, Vec<i64>)>,
}

impl Listings {
    fn new(posts: &[GenPost], n_subs: usize) -> Self {
        let mut order: Vec<usize> = (0..posts.len()).collect();
        order.sort_by_key(|&i| (posts[i].post.created_utc, i));
        let created = order.iter().map(|&i| posts[i].post.created_utc).collect();
        let mut by_sub = vec![(Vec::new(), Vec::new()); n_subs];
        for &i in &order {
            let s: usize = posts[i].post.subreddit[3..].parse().expect("generated subreddit name");
            by_sub[s].0.push(i);
            by_sub[s].1.push(posts[i].post.created_utc);
        }
        Listings { order, created, by_sub }
    }

    fn window<'a>(ids: &'a [usize], created: &[i64], from: i64, to: i64) -> &'a [usize] {
        let a = created.partition_point(|&c| c < from);
        let b = created.partition_point(|&c| c <= to);
        &ids[a..b]
    }
}

/// Builds the corpus. Deterministic in the config, seed included.
pub fn generate(cfg: &GenConfig) -> Result<SynthCorpus, GenConfigError> {
    cfg.validate()?;
    let vocab = background_words(cfg);
    let posts = generate_posts(cfg, &vocab);
    let listings = Listings::new(&posts, cfg.n_subreddits);
    let window = (cfg.listing_window_hours * SECONDS_PER_HOUR) as i64;
    let horizon = cfg.horizon_hours * SECONDS_PER_HOUR;
    let contexts = [ViewContext::Frontpage, ViewContext::All, ViewContext::Subreddit];

    let mut events = Vec::new();
    for u in 0..cfg.n_users {
        let user_id = format!("u{u:04}");
        let mut rng = keyed_rng(cfg.seed, &["synth", "user", &user_id]);
        let subs: Vec<usize> = sample(&mut rng, cfg.n_subreddits, cfg.subreddits_per_user).into_vec();
        let offset = (cfg.page_size * rng.random_range(0..cfg.listing_pages)) as u64;

        for _ in 0..cfg.sessions_per_user {
            let t = BASE_EPOCH + rng.random_range(0.0..horizon).floor() as i64;
            let ctx = contexts[draw_index(&cfg.context_mix, &mut rng).expect("context_mix sums to 1")];
            let pool: Vec<usize> = match ctx {
                ViewContext::All => Listings::window(&listings.order, &listings.created, t - window, t).to_vec(),
                ViewContext::Frontpage => {
                    let mut v: Vec<usize> = subs
                        .iter()
                        .flat_map(|&s| Listings::window(&listings.by_sub[s].0, &listings.by_sub[s].1, t - window, t))
                        .copied()
                        .collect();
                    v.sort_unstable();
                    v
                }
                ViewContext::Subreddit => {
                    let s = subs[rng.random_range(0..subs.len())];
                    Listings::window(&listings.by_sub[s].0, &listings.by_sub[s].1, t - window, t).to_vec()
                }
            };
            if pool.is_empty() {
                continue;
            }
            let shown = cfg.page_size.min(pool.len());
            let listed: Vec<usize> = sample(&mut rng, pool.len(), shown).into_iter().map(|i| pool[i]).collect();
            let weights: Vec<f64> = listed
                .iter()
                .enumerate()
                .map(|(pos, &p)| {
                    let age = (t - posts[p].post.created_utc) as f64 / SECONDS_PER_HOUR;
                    interaction_propensity(cfg, offset + pos as u64 + 1, age, ctx) * posts[p].appeal
                })
                .collect();
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                continue;
            }
            // each listed post is engaged with independently; the expected
            // count is shown / (1 + noninteraction_ratio)
            let scale = shown as f64 / (1.0 + cfg.noninteraction_ratio) / total;
            let mut j = 0;
            for (pos, &w) in weights.iter().enumerate() {
                if !rng.random_bool((w * scale).min(1.0)) {
                    continue;
                }
                let gp = &posts[listed[pos]];
                let itype = if rng.random_bool(cfg.type_fidelity) {
                    gp.affinity
                } else {
                    InteractionType::POSITIVE[draw_index(&cfg.class_mix, &mut rng).expect("class_mix sums to 1")]
                };
                let timestamp = t + 7 * j as i64;
                let age = (timestamp - gp.post.created_utc) as f64 / SECONDS_PER_HOUR;
                let score = (!rng.random_bool(cfg.hidden_score_fraction)).then(|| displayed_score(cfg, gp.final_score, age));
                events.push(InteractionEvent {
                    user_id: user_id.clone(),
                    post_id: gp.post.post_id.clone(),
                    itype,
                    timestamp,
                    context: ctx,
                    rank: Some((offset + pos as u64 + 1) as i64),
                    score,
                });
                j += 1;
            }
        }
    }
    let affinity = posts.iter().map(|g| (g.post.post_id.clone(), g.affinity)).collect();
    let posts = posts.into_iter().map(|g| g.post).collect();
    Ok(SynthCorpus { corpus: Corpus::new(posts, events), affinity })
}

pub fn generate_corpus(cfg: &GenConfig) -> Result<Corpus, GenConfigError> {
    generate(cfg).map(|s| s.corpus)
}

/// Embedding table covering the background vocabulary and every planted
/// token. Background vectors are isotropic noise; planted tokens of a type
/// cluster around a shared direction.
pub fn generate_embeddings(cfg: &GenConfig) -> Result<EmbeddingTable, GenConfigError> {
    cfg.validate()?;
    let vocab = background_words(cfg);
    let mut rng = keyed_rng(cfg.seed, &["synth", "embeddings"]);
    let d = cfg.embedding_dim;
    let noise = Normal::new(0.0, 1.0 / (d as f64).sqrt()).expect("valid normal");
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for w in &vocab {
        vectors.insert(w.clone(), (0..d).map(|_| noise.sample(&mut rng)).collect());
    }
    for t in InteractionType::POSITIVE {
        let center: Vec<f64> = (0..d).map(|_| 2.0 * noise.sample(&mut rng)).collect();
        for w in cfg.planted(t) {
            let v = center.iter().map(|c| c + 0.25 * noise.sample(&mut rng)).collect();
            vectors.entry(w.to_lowercase()).or_insert(v);
        }
    }
    Ok(EmbeddingTable::from_vectors(d, vectors).expect("generated vectors share one dimension"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_corpus;
    use crate::semantic::tokenize;

    fn small() -> GenConfig {
        GenConfig { n_users: 20, n_posts: 2_000, n_subreddits: 20, sessions_per_user: 30, ..GenConfig::default() }
    }

    #[test]
    fn propensity_shape() {
        let flat = GenConfig { rank_bias_exponent: 0.0, ..GenConfig::default() };
        assert_eq!(
            interaction_propensity(&flat, 1, 3.0, ViewContext::Frontpage),
            interaction_propensity(&flat, 9, 3.0, ViewContext::Frontpage)
        );
        let lin = GenConfig { rank_bias_exponent: 1.0, ..GenConfig::default() };
        let r1 = interaction_propensity(&lin, 1, 3.0, ViewContext::All);
        let r2 = interaction_propensity(&lin, 2, 3.0, ViewContext::All);
        assert!((r1 / r2 - 2.0).abs() < 1e-12);
        let cfg = GenConfig::default();
        for a in [0.0, 0.1, 1.0, 4.0, 30.0, 500.0] {
            let p = interaction_propensity(&cfg, 1, a, ViewContext::Subreddit);
            assert!((0.0..=1.0).contains(&p));
        }
        let mode = (4f64.ln() - 1.0).exp();
        assert!((interaction_propensity(&cfg, 1, mode, ViewContext::Frontpage) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recency_median_of_weighted_uniform_ages() {
        // ages uniform over the listing window, accepted with the kernel
        let cfg = GenConfig::default();
        let mut rng = keyed_rng(3, &["ages"]);
        let mut ages = Vec::new();
        while ages.len() < 20_000 {
            let a = rng.random_range(0.0..48.0);
            if rng.random::<f64>() < interaction_propensity(&cfg, 1, a, ViewContext::Frontpage) {
                ages.push(a);
            }
        }
        ages.sort_by(f64::total_cmp);
        let median = ages[ages.len() / 2];
        assert!((3.5..=4.5).contains(&median), "{median}");
    }

    #[test]
    fn deterministic_and_valid() {
        let a = generate_corpus(&small()).unwrap();
        let b = generate_corpus(&small()).unwrap();
        assert_eq!((a.posts(), a.events()), (b.posts(), b.events()));
        assert!(!a.events().is_empty());
        let report = validate_corpus(&a, 1);
        assert!(report.violations.is_empty(), "{:?}", &report.violations[..3.min(report.violations.len())]);
        let other = generate_corpus(&GenConfig { seed: 2, ..small() }).unwrap();
        assert_ne!(a.events(), other.events());
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = GenConfig { class_mix: [0.5, 0.5, 0.5, 0.0], ..GenConfig::default() };
        assert!(generate_corpus(&bad).is_err());
        let bad = GenConfig { n_users: 0, ..GenConfig::default() };
        assert!(bad.validate().is_err());
        let mut bad = GenConfig::default();
        bad.vocab_by_type.insert("do_nothing".into(), vec!["x".into()]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn planted_tokens_follow_affinity() {
        let s = generate(&small()).unwrap();
        let cfg = small();
        for p in s.corpus.posts().iter().take(300) {
            let aff = s.affinity[&p.post_id];
            for tok in tokenize(&p.title) {
                for t in InteractionType::POSITIVE {
                    if t != aff {
                        assert!(!cfg.planted(t).contains(&tok), "{tok} in {}", p.title);
                    }
                }
            }
        }
    }

    #[test]
    fn embeddings_cover_titles() {
        let cfg = small();
        let table = generate_embeddings(&cfg).unwrap();
        assert_eq!(table.dim(), 16);
        let corpus = generate_corpus(&cfg).unwrap();
        for p in corpus.posts().iter().take(200) {
            for tok in tokenize(&p.title) {
                assert!(table.get(&tok).is_some(), "{tok}");
            }
        }
    }

    #[test]
    fn hidden_scores_and_ranks() {
        let c = generate_corpus(&small()).unwrap();
        let hidden = c.events().iter().filter(|e| e.score.is_none()).count() as f64 / c.events().len() as f64;
        assert!((hidden - 0.4).abs() < 0.05, "{hidden}");
        assert!(c.events().iter().all(|e| (1..=25).contains(&e.rank.unwrap())));
    }
}
