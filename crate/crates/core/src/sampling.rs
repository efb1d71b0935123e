//! Negative sampling, instance assembly and the temporal train/test split.

use std::collections::{BTreeMap, HashMap, HashSet};

use thiserror::Error;

use crate::model::{age_hours, Corpus, InteractionType, LabeledInstance, SECONDS_PER_HOUR};

pub const DEFAULT_WINDOW_HOURS: f64 = 12.0;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("user {0:?} has no events")]
    UnknownUser(String),
    #[error("unsplittable: {0} instance(s), need at least 2")]
    Unsplittable(usize),
    #[error("train fraction {0} outside (0, 1)")]
    BadFraction(f64),
}

/// Per-subreddit, time-ordered index over a corpus, built once and shared
/// read-only across users.
#[derive(Debug)]
pub struct NegativeSampler<'a> {
    corpus: &'a Corpus,
    by_subreddit: HashMap<&'a str, Vec<usize>>,
    by_user: HashMap<&'a str, Vec<usize>>,
}

impl<'a> NegativeSampler<'a> {
    pub fn new(corpus: &'a Corpus) -> Self {
        let mut by_subreddit: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut by_user: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, e) in corpus.events().iter().enumerate() {
            by_user.entry(e.user_id.as_str()).or_default().push(i);
            if let Some(p) = corpus.post(&e.post_id) {
                by_subreddit.entry(p.subreddit.as_str()).or_default().push(i);
            }
        }
        NegativeSampler { corpus, by_subreddit, by_user }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    /// Posts the user plausibly saw but did not touch: posts in the same
    /// subreddit that other users interacted with within `window_hours` of
    /// one of the user's events, minus every post the user ever interacted
    /// with. Each post yields one instance, snapshotted from its earliest
    /// witnessing event.
    pub fn negatives_for(&self, user: &str, window_hours: f64) -> Result<Vec<LabeledInstance>, SamplingError> {
        let own = self.by_user.get(user).ok_or_else(|| SamplingError::UnknownUser(user.to_string()))?;
        let events = self.corpus.events();
        let touched: HashSet<&str> = own.iter().map(|&i| events[i].post_id.as_str()).collect();
        let window = window_hours * SECONDS_PER_HOUR;

        // post id -> earliest witnessing event index (events are time-sorted)
        let mut earliest: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in own {
            let e = &events[i];
            let Some(post) = self.corpus.post(&e.post_id) else { continue };
            let Some(stream) = self.by_subreddit.get(post.subreddit.as_str()) else { continue };
            let lo = stream.partition_point(|&j| ((e.timestamp - events[j].timestamp) as f64) > window);
            for &j in &stream[lo..] {
                let w = &events[j];
                if (w.timestamp - e.timestamp) as f64 > window {
                    break;
                }
                if w.user_id == user || touched.contains(w.post_id.as_str()) {
                    continue;
                }
                earliest.entry(w.post_id.as_str()).and_modify(|k| *k = (*k).min(j)).or_insert(j);
            }
        }

        let mut witnesses: Vec<usize> = earliest.into_values().collect();
        witnesses.sort_unstable();
        Ok(witnesses
            .into_iter()
            .map(|j| {
                let w = &events[j];
                let post = self.corpus.post(&w.post_id).expect("indexed events resolve");
                LabeledInstance {
                    user_id: user.to_string(),
                    post_id: w.post_id.clone(),
                    label: InteractionType::DoNothing,
                    observed_at: w.timestamp,
                    context: w.context,
                    rank: w.rank,
                    score: w.score,
                    age_hours: age_hours(w.timestamp, post.created_utc),
                }
            })
            .collect())
    }

    /// The user's raw events as labeled instances, in event order.
    pub fn positives_for(&self, user: &str) -> Vec<LabeledInstance> {
        let events = self.corpus.events();
        self.by_user
            .get(user)
            .into_iter()
            .flatten()
            .filter_map(|&i| {
                let e = &events[i];
                self.corpus.post(&e.post_id).map(|p| LabeledInstance::from_event(e, p))
            })
            .collect()
    }
}

/// Negatives for one user. Builds a fresh index; use [`NegativeSampler`] when
/// sampling for many users.
pub fn build_negatives(corpus: &Corpus, user: &str, window_hours: f64) -> Result<Vec<LabeledInstance>, SamplingError> {
    NegativeSampler::new(corpus).negatives_for(user, window_hours)
}

/// One positive instance per raw event, followed by the negatives.
pub fn assemble_instances(corpus: &Corpus, user: &str, negatives: Vec<LabeledInstance>) -> Vec<LabeledInstance> {
    let mut out: Vec<LabeledInstance> = corpus
        .events_of(user)
        .filter_map(|(_, e)| corpus.post(&e.post_id).map(|p| LabeledInstance::from_event(e, p)))
        .collect();
    out.extend(negatives);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Vec<LabeledInstance>,
    pub test: Vec<LabeledInstance>,
}

/// Number of training rows: ceil(n * fraction), kept within [1, n - 1].
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    // the epsilon absorbs products like 0.3 * 10 = 3.0000000000000004
    let k = (n as f64 * train_fraction - 1e-9).ceil() as usize;
    k.clamp(1, n - 1)
}

/// Stable-sorts by observation time (ties keep input order) and puts the
/// first ceil(n * fraction) rows in train.
pub fn temporal_split(mut instances: Vec<LabeledInstance>, train_fraction: f64) -> Result<SplitDataset, SamplingError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(SamplingError::BadFraction(train_fraction));
    }
    if instances.len() < 2 {
        return Err(SamplingError::Unsplittable(instances.len()));
    }
    instances.sort_by_key(|i| i.observed_at);
    let k = train_size(instances.len(), train_fraction);
    let test = instances.split_off(k);
    Ok(SplitDataset { train: instances, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{event, post};
    use crate::model::{InteractionEvent, Post, ViewContext};
    use proptest::prelude::*;

    use InteractionType::*;

    fn ids(v: &[LabeledInstance]) -> Vec<&str> {
        v.iter().map(|i| i.post_id.as_str()).collect()
    }

    fn three_user_corpus(extra: Vec<InteractionEvent>) -> Corpus {
        let posts = vec![post("P1", "S", "a", 90.0), post("P2", "S", "b", 90.0), post("P3", "S", "c", 90.0)];
        let mut events = vec![
            event("A", "P1", BrowseContent, 100.0),
            event("B", "P2", BrowseContent, 105.0),
            event("C", "P3", BrowseContent, 120.0),
        ];
        events.extend(extra);
        Corpus::new(posts, events)
    }

    #[test]
    fn hand_traced_window() {
        let negs = build_negatives(&three_user_corpus(vec![]), "A", 12.0).unwrap();
        assert_eq!(ids(&negs), vec!["P2"]);
        assert_eq!(negs[0].label, DoNothing);
        assert_eq!(negs[0].observed_at, 105 * 3600);
        assert!((negs[0].age_hours - 15.0).abs() < 1e-12);
    }

    #[test]
    fn no_other_users_means_no_negatives() {
        let corpus = Corpus::new(vec![post("P1", "S", "a", 0.0)], vec![event("A", "P1", Upvote, 1.0)]);
        assert!(build_negatives(&corpus, "A", 12.0).unwrap().is_empty());
    }

    #[test]
    fn interacted_posts_are_removed() {
        let corpus = three_user_corpus(vec![event("A", "P2", Upvote, 400.0)]);
        assert!(build_negatives(&corpus, "A", 12.0).unwrap().is_empty());
    }

    #[test]
    fn unknown_user_is_an_error() {
        assert_eq!(
            build_negatives(&three_user_corpus(vec![]), "Z", 12.0),
            Err(SamplingError::UnknownUser("Z".into()))
        );
    }

    #[test]
    fn duplicates_collapse_to_earliest_witness() {
        let mut late = event("C", "P2", Upvote, 108.0);
        late.rank = Some(9);
        let corpus = three_user_corpus(vec![late, event("C", "P2", BrowseComments, 104.0)]);
        let negs = build_negatives(&corpus, "A", 12.0).unwrap();
        assert_eq!(ids(&negs), vec!["P2"]);
        assert_eq!(negs[0].observed_at, 104 * 3600);
    }

    #[test]
    fn multiple_types_on_one_post_give_multiple_positives() {
        let corpus = Corpus::new(
            vec![post("P", "S", "t", 0.0)],
            vec![event("A", "P", BrowseContent, 1.0), event("A", "P", Upvote, 2.0)],
        );
        let inst = assemble_instances(&corpus, "A", vec![]);
        assert_eq!(inst.len(), 2);
        assert_eq!(inst[0].post_id, inst[1].post_id);
        assert_ne!(inst[0].label, inst[1].label);
    }

    fn at(ts: &[i64]) -> Vec<LabeledInstance> {
        ts.iter()
            .enumerate()
            .map(|(i, &t)| LabeledInstance {
                user_id: "u".into(),
                post_id: format!("p{i}"),
                label: Upvote,
                observed_at: t,
                context: ViewContext::All,
                rank: None,
                score: None,
                age_hours: 0.0,
            })
            .collect()
    }

    #[test]
    fn split_examples() {
        let s = temporal_split(at(&[3, 1, 4, 2]), 0.5).unwrap();
        assert_eq!(s.train.iter().map(|i| i.observed_at).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(s.test.iter().map(|i| i.observed_at).collect::<Vec<_>>(), vec![3, 4]);

        let s = temporal_split(at(&[1, 2, 3, 4, 5]), 0.5).unwrap();
        assert_eq!(s.train.len(), 3);
        assert_eq!(s.test.len(), 2);

        let s = temporal_split(at(&[7, 7]), 0.5).unwrap();
        assert_eq!(s.train[0].post_id, "p0");
        assert_eq!(s.test[0].post_id, "p1");

        assert_eq!(temporal_split(at(&[1]), 0.5), Err(SamplingError::Unsplittable(1)));
        assert!(temporal_split(at(&[1, 2]), 1.0).is_err());
    }

    #[test]
    fn train_size_ceiling() {
        assert_eq!(train_size(10, 0.3), 3);
        assert_eq!(train_size(5, 0.5), 3);
        assert_eq!(train_size(2, 0.99), 1);
    }

    fn arb_corpus() -> impl Strategy<Value = Corpus> {
        prop::collection::vec((0usize..4, 0usize..8, 0i64..96, 0usize..4), 1..60).prop_map(|rows| {
            let posts: Vec<Post> = (0..8).map(|i| post(&format!("p{i}"), &format!("s{}", i % 2), "t", 0.0)).collect();
            let events = rows
                .into_iter()
                .map(|(u, p, h, t)| event(&format!("u{u}"), &format!("p{p}"), InteractionType::POSITIVE[t], h as f64))
                .collect();
            Corpus::new(posts, events)
        })
    }

    proptest! {
        #[test]
        fn negatives_never_overlap_positives_and_are_witnessed(corpus in arb_corpus(), window in 0.0f64..30.0) {
            let sampler = NegativeSampler::new(&corpus);
            for user in corpus.users() {
                let negs = sampler.negatives_for(&user, window).unwrap();
                let own: Vec<_> = corpus.events_of(&user).map(|(_, e)| e).collect();
                for n in &negs {
                    prop_assert!(own.iter().all(|e| e.post_id != n.post_id));
                    let sub = &corpus.post(&n.post_id).unwrap().subreddit;
                    let witnessed = corpus.events().iter().any(|w| {
                        w.user_id != user && w.post_id == n.post_id && w.timestamp == n.observed_at
                            && own.iter().any(|e| &corpus.post(&e.post_id).unwrap().subreddit == sub
                                && ((e.timestamp - w.timestamp).abs() as f64) <= window * 3600.0)
                    });
                    prop_assert!(witnessed);
                }
                let smaller = sampler.negatives_for(&user, window / 2.0).unwrap();
                for n in &smaller {
                    prop_assert!(negs.iter().any(|m| m.post_id == n.post_id));
                }
            }
        }

        #[test]
        fn split_preserves_instances(ts in prop::collection::vec(0i64..20, 2..40), frac in 0.05f64..0.95) {
            let input = at(&ts);
            let s = temporal_split(input.clone(), frac).unwrap();
            prop_assert_eq!(s.train.len(), train_size(input.len(), frac));
            let max_train = s.train.iter().map(|i| i.observed_at).max().unwrap();
            let min_test = s.test.iter().map(|i| i.observed_at).min().unwrap();
            prop_assert!(max_train <= min_test);
            let mut all: Vec<_> = s.train.into_iter().chain(s.test).map(|i| i.post_id).collect();
            all.sort();
            let mut expected: Vec<_> = input.into_iter().map(|i| i.post_id).collect();
            expected.sort();
            prop_assert_eq!(all, expected);
        }
    }
}
