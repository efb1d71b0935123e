//! Semantic interactivity scores: averaged title embeddings plus class
//! centroids, fed to a per-user, per-type perceptron trained with ADAM.

pub mod adam;
pub mod mlp;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ingest::EmbeddingTable;
use crate::model::{Corpus, InteractionType, LabeledInstance, Post};
use crate::rng::keyed_rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{log_loss, sigmoid, InputLengthMismatch, MlpParams};

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(title: &str) -> impl Iterator<Item = String> + '_ {
    title
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

fn scale(mut v: Vec<f64>, n: usize) -> Vec<f64> {
    if n > 0 {
        let n = n as f64;
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

/// Mean vector of the in-vocabulary title tokens; zero when none are known.
pub fn average_title_embedding(title: &str, table: &EmbeddingTable) -> Vec<f64> {
    let mut acc = vec![0.0; table.dim()];
    let mut n = 0;
    for token in tokenize(title) {
        if let Some(v) = table.get(&token) {
            add_into(&mut acc, v);
            n += 1;
        }
    }
    scale(acc, n)
}

/// Sum of known-token vectors and the number of known tokens.
fn title_token_sum(title: &str, table: &EmbeddingTable) -> (Vec<f64>, usize) {
    let mut acc = vec![0.0; table.dim()];
    let mut n = 0;
    for token in tokenize(title) {
        if let Some(v) = table.get(&token) {
            add_into(&mut acc, v);
            n += 1;
        }
    }
    (acc, n)
}

/// Average title embedding per post, computed once per corpus.
#[derive(Debug, Clone)]
pub struct TitleEmbeddings {
    dim: usize,
    by_post: HashMap<String, Vec<f64>>,
}

impl TitleEmbeddings {
    pub fn build<'a>(posts: impl IntoIterator<Item = &'a Post>, table: &EmbeddingTable) -> Self {
        let by_post = posts
            .into_iter()
            .map(|p| (p.post_id.clone(), average_title_embedding(&p.title, table)))
            .collect();
        TitleEmbeddings { dim: table.dim(), by_post }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, post_id: &str) -> Option<&[f64]> {
        self.by_post.get(post_id).map(Vec::as_slice)
    }
}

/// Train-partition centroids: all title tokens, and per positive type the
/// mean title embedding of posts with / without that type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    pub overall: Vec<f64>,
    pub with_type: BTreeMap<InteractionType, Vec<f64>>,
    pub without_type: BTreeMap<InteractionType, Vec<f64>>,
}

impl CentroidSet {
    /// overall ‖ with(itype) ‖ without(itype).
    pub fn context_for(&self, itype: InteractionType) -> Vec<f64> {
        let mut v = self.overall.clone();
        v.extend_from_slice(&self.with_type[&itype]);
        v.extend_from_slice(&self.without_type[&itype]);
        v
    }
}

pub fn build_centroids(train: &[LabeledInstance], corpus: &Corpus, table: &EmbeddingTable) -> CentroidSet {
    let d = table.dim();
    // distinct posts in id order, with the labels each received
    let mut labels: BTreeMap<&str, BTreeSet<InteractionType>> = BTreeMap::new();
    for inst in train {
        labels.entry(inst.post_id.as_str()).or_default().insert(inst.label);
    }

    let mut overall = vec![0.0; d];
    let mut overall_n = 0;
    let mut titles = Vec::with_capacity(labels.len());
    for (post_id, set) in &labels {
        let Some(post) = corpus.post(post_id) else { continue };
        let (sum, n) = title_token_sum(&post.title, table);
        add_into(&mut overall, &sum);
        overall_n += n;
        titles.push((scale(sum, n), set));
    }

    let mut with_type = BTreeMap::new();
    let mut without_type = BTreeMap::new();
    for t in InteractionType::POSITIVE {
        let (mut w, mut wn) = (vec![0.0; d], 0);
        let (mut wo, mut won) = (vec![0.0; d], 0);
        for (emb, set) in &titles {
            if set.contains(&t) {
                add_into(&mut w, emb);
                wn += 1;
            } else {
                add_into(&mut wo, emb);
                won += 1;
            }
        }
        with_type.insert(t, scale(w, wn));
        without_type.insert(t, scale(wo, won));
    }
    CentroidSet { overall: scale(overall, overall_n), with_type, without_type }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticHyper {
    pub hidden: usize,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many consecutive epochs improving by less than `min_improvement`.
    pub patience: usize,
    pub min_improvement: f64,
}

impl Default for SemanticHyper {
    fn default() -> Self {
        SemanticHyper {
            hidden: 64,
            adam: AdamConfig::default(),
            batch_size: 32,
            max_epochs: 50,
            patience: 5,
            min_improvement: 1e-4,
        }
    }
}

/// A trained per-user, per-type scorer with its frozen centroids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SemanticScorer {
    Trained {
        itype: InteractionType,
        /// overall ‖ with ‖ without centroids, 3d values.
        context: Vec<f64>,
        params: MlpParams<f64>,
    },
    /// Training data had a single class; emits the base rate.
    Degenerate { itype: InteractionType, base_rate: f64 },
}

impl SemanticScorer {
    pub fn itype(&self) -> InteractionType {
        match self {
            SemanticScorer::Trained { itype, .. } | SemanticScorer::Degenerate { itype, .. } => *itype,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, SemanticScorer::Degenerate { .. })
    }

    /// Word-vector width the scorer was trained on; `None` when degenerate.
    pub fn embedding_dim(&self) -> Option<usize> {
        match self {
            SemanticScorer::Trained { context, .. } => Some(context.len() / 3),
            SemanticScorer::Degenerate { .. } => None,
        }
    }

    /// Score from a precomputed average title embedding.
    pub fn score_embedding(&self, title_avg: &[f64]) -> f64 {
        match self {
            SemanticScorer::Degenerate { base_rate, .. } => *base_rate,
            SemanticScorer::Trained { context, params, .. } => {
                let mut input = Vec::with_capacity(title_avg.len() + context.len());
                input.extend_from_slice(title_avg);
                input.extend_from_slice(context);
                params.forward(&input).expect("scorer input width fixed at training")
            }
        }
    }
}

/// Probability in [0, 1] that the user interacts with `post` as the scorer's type.
pub fn score_semantic(scorer: &SemanticScorer, post: &Post, table: &EmbeddingTable) -> f64 {
    scorer.score_embedding(&average_title_embedding(&post.title, table))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedScorer {
    pub scorer: SemanticScorer,
    /// Mean training log-loss after each epoch.
    pub history: Vec<f64>,
}

/// Trains the scorer for one (user, type) from precomputed title embeddings
/// and centroids. Deterministic in `(seed, user, itype)`.
pub fn train_scorer_with(
    user: &str,
    itype: InteractionType,
    train: &[LabeledInstance],
    titles: &TitleEmbeddings,
    centroids: &CentroidSet,
    hyper: &SemanticHyper,
    seed: u64,
) -> TrainedScorer {
    let zero = vec![0.0; titles.dim()];
    let context = centroids.context_for(itype);
    // the centroid block is constant, so only the title block varies per row
    let rows: Vec<(&[f64], bool)> =
        train.iter().map(|inst| (titles.get(&inst.post_id).unwrap_or(&zero), inst.label == itype)).collect();

    let positives = rows.iter().filter(|r| r.1).count();
    if positives == 0 || positives == rows.len() {
        let base_rate = if rows.is_empty() { 0.0 } else { positives as f64 / rows.len() as f64 };
        return TrainedScorer { scorer: SemanticScorer::Degenerate { itype, base_rate }, history: Vec::new() };
    }

    let mut rng = keyed_rng(seed, &["semantic", user, itype.as_str()]);
    let inputs = titles.dim() + context.len();
    let mut params = MlpParams::<f64>::glorot(inputs, hyper.hidden, &mut rng);
    let mut adam = AdamState::new(params.as_slice().len(), hyper.adam);
    let mut grad = MlpParams::zeros(inputs, hyper.hidden);
    let mut delta = vec![0.0; hyper.hidden];
    let mut scratch = Vec::new();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut history = Vec::with_capacity(hyper.max_epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let batch = hyper.batch_size.max(1);

    for _ in 0..hyper.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            grad.as_mut_slice().iter_mut().for_each(|g| *g = 0.0);
            delta.iter_mut().for_each(|d| *d = 0.0);
            let offset = params.tail_offset(&context);
            let w = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let (x, y) = rows[i];
                params.accumulate_head_gradient(x, &offset, y, w, &mut grad, &mut delta, &mut scratch);
            }
            params.finish_tail_gradient(&mut grad, &delta, &context);
            adam.step(params.as_mut_slice(), grad.as_slice());
        }
        let offset = params.tail_offset(&context);
        let loss = rows.iter().map(|&(x, y)| log_loss(params.forward_head(x, &offset, &mut scratch), y)).sum::<f64>()
            / rows.len() as f64;
        history.push(loss);
        if best - loss < hyper.min_improvement {
            stale += 1;
            if stale >= hyper.patience {
                break;
            }
        } else {
            stale = 0;
        }
        best = best.min(loss);
    }
    TrainedScorer { scorer: SemanticScorer::Trained { itype, context, params }, history }
}

/// Builds centroids from `train` and trains the scorer for one (user, type).
pub fn train_semantic_scorer(
    user: &str,
    itype: InteractionType,
    train: &[LabeledInstance],
    corpus: &Corpus,
    table: &EmbeddingTable,
    hyper: &SemanticHyper,
    seed: u64,
) -> TrainedScorer {
    let titles = TitleEmbeddings::build(corpus.posts(), table);
    let centroids = build_centroids(train, corpus, table);
    train_scorer_with(user, itype, train, &titles, &centroids, hyper, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ViewContext;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use InteractionType::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_vectors(
            2,
            [("a".to_string(), vec![1.0, 2.0]), ("z".to_string(), vec![0.0, 0.0]), ("b".to_string(), vec![2.0, 4.0])],
        )
        .unwrap()
    }

    #[test]
    fn averages_known_tokens() {
        let t = table();
        assert_eq!(average_title_embedding("a a", &t), vec![1.0, 2.0]);
        assert_eq!(average_title_embedding("Z, B!", &t), vec![1.0, 2.0]);
        assert_eq!(average_title_embedding("nothing known", &t), vec![0.0, 0.0]);
        assert_eq!(average_title_embedding("", &t), vec![0.0, 0.0]);
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Hello, World! it's 2015").collect::<Vec<_>>(), vec!["hello", "world", "it", "s", "2015"]);
    }

    fn inst(post: &str, label: InteractionType, t: i64) -> LabeledInstance {
        LabeledInstance {
            user_id: "u".into(),
            post_id: post.into(),
            label,
            observed_at: t,
            context: ViewContext::All,
            rank: Some(1),
            score: None,
            age_hours: 1.0,
        }
    }

    fn corpus(titles: &[(&str, &str)]) -> Corpus {
        let posts = titles
            .iter()
            .map(|(id, title)| Post {
                post_id: id.to_string(),
                subreddit: "s".into(),
                title: title.to_string(),
                created_utc: 0,
                subscribers: 1,
            })
            .collect();
        Corpus::new(posts, vec![])
    }

    #[test]
    fn centroid_edge_cases() {
        let t = table();
        let c = corpus(&[("p1", "a"), ("p2", "b")]);

        let single = build_centroids(&[inst("p1", Upvote, 0)], &c, &t);
        assert_eq!(single.overall, vec![1.0, 2.0]);
        assert_eq!(single.with_type[&Upvote], vec![1.0, 2.0]);
        assert_eq!(single.without_type[&Upvote], vec![0.0, 0.0]);

        let two = build_centroids(&[inst("p1", Upvote, 0), inst("p2", DoNothing, 1)], &c, &t);
        assert_eq!(two.with_type[&Upvote], vec![1.0, 2.0]);
        assert_eq!(two.without_type[&Upvote], vec![2.0, 4.0]);
        assert_eq!(two.with_type[&Downvote], vec![0.0, 0.0]);
        assert_eq!(two.without_type[&Downvote], vec![1.5, 3.0]);
        assert_eq!(two.overall, vec![1.5, 3.0]);
        assert_eq!(two.context_for(Upvote).len(), 6);
    }

    #[test]
    fn centroids_ignore_instance_order() {
        let t = table();
        let c = corpus(&[("p1", "a b"), ("p2", "b z"), ("p3", "a")]);
        let mut rows = vec![inst("p1", Upvote, 0), inst("p2", DoNothing, 1), inst("p3", BrowseContent, 2), inst("p1", Downvote, 3)];
        let a = build_centroids(&rows, &c, &t);
        rows.reverse();
        let b = build_centroids(&rows, &c, &t);
        for (x, y) in a.context_for(Upvote).iter().zip(b.context_for(Upvote)) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    /// Titles carry a marker word exactly when the label is the target type.
    fn planted_data(n: usize, rng: &mut ChaCha8Rng) -> (Corpus, EmbeddingTable, Vec<LabeledInstance>) {
        let words = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"];
        let mut vectors: Vec<(String, Vec<f64>)> =
            words.iter().map(|w| (w.to_string(), (0..8).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
        vectors.push(("upword".into(), vec![2.0; 8]));
        let table = EmbeddingTable::from_vectors(8, vectors).unwrap();
        let mut titles = Vec::new();
        let mut rows = Vec::new();
        for i in 0..n {
            let up = rng.random_bool(0.3);
            let mut title: Vec<&str> = (0..rng.random_range(3..7)).map(|_| words[rng.random_range(0..words.len())]).collect();
            if up {
                title.insert(rng.random_range(0..title.len()), "upword");
            }
            titles.push((format!("p{i}"), title.join(" ")));
            rows.push(inst(&format!("p{i}"), if up { Upvote } else { DoNothing }, i as i64));
        }
        let refs: Vec<(&str, &str)> = titles.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        (corpus(&refs), table, rows)
    }

    fn auc(scores: &[f64], labels: &[bool]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &a) in scores.iter().enumerate() {
            for (j, &b) in scores.iter().enumerate() {
                if labels[i] && !labels[j] {
                    den += 1.0;
                    num += if a > b { 1.0 } else if a == b { 0.5 } else { 0.0 };
                }
            }
        }
        num / den
    }

    #[test]
    fn learns_planted_vocabulary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (c, t, rows) = planted_data(400, &mut rng);
        let (train, test) = rows.split_at(250);
        let trained = train_semantic_scorer("u", Upvote, train, &c, &t, &SemanticHyper::default(), 9);
        assert!(!trained.scorer.is_degenerate());
        assert_eq!(trained.scorer.embedding_dim(), Some(t.dim()));
        let scores: Vec<f64> = test.iter().map(|i| score_semantic(&trained.scorer, c.post(&i.post_id).unwrap(), &t)).collect();
        let labels: Vec<bool> = test.iter().map(|i| i.label == Upvote).collect();
        assert!(auc(&scores, &labels) > 0.9);
        let planted = Post { post_id: "q".into(), subreddit: "s".into(), title: "upword".into(), created_utc: 0, subscribers: 1 };
        assert!(score_semantic(&trained.scorer, &planted, &t) > 0.9);

        // loss is nonincreasing up to 1e-3 per epoch
        for w in trained.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "{:?}", trained.history);
        }
        // repeated scoring is pure; retraining is deterministic
        let p = c.post("p0").unwrap();
        assert_eq!(score_semantic(&trained.scorer, p, &t), score_semantic(&trained.scorer, p, &t));
        let again = train_semantic_scorer("u", Upvote, train, &c, &t, &SemanticHyper::default(), 9);
        assert_eq!(again, trained);
    }

    #[test]
    fn random_labels_give_chance_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (c, t, mut rows) = planted_data(1200, &mut rng);
        for r in &mut rows {
            r.label = if rng.random_bool(0.3) { Upvote } else { DoNothing };
        }
        let (train, test) = rows.split_at(600);
        let trained = train_semantic_scorer("u", Upvote, train, &c, &t, &SemanticHyper::default(), 1);
        let scores: Vec<f64> = test.iter().map(|i| score_semantic(&trained.scorer, c.post(&i.post_id).unwrap(), &t)).collect();
        let labels: Vec<bool> = test.iter().map(|i| i.label == Upvote).collect();
        let a = auc(&scores, &labels);
        assert!((0.44..=0.56).contains(&a), "{a}");
    }

    #[test]
    fn identical_titles_learn_the_base_rate() {
        let t = table();
        let c = corpus(&[("p", "a b")]);
        let rows: Vec<_> = (0..200).map(|i| inst("p", if i % 4 == 0 { Upvote } else { DoNothing }, i)).collect();
        let trained = train_semantic_scorer("u", Upvote, &rows, &c, &t, &SemanticHyper::default(), 2);
        let s = score_semantic(&trained.scorer, c.post("p").unwrap(), &t);
        assert!((s - 0.25).abs() < 0.05, "{s}");
    }

    #[test]
    fn single_class_is_degenerate() {
        let t = table();
        let c = corpus(&[("p", "a")]);
        let rows: Vec<_> = (0..5).map(|i| inst("p", Upvote, i)).collect();
        let trained = train_semantic_scorer("u", Upvote, &rows, &c, &t, &SemanticHyper::default(), 2);
        assert_eq!(trained.scorer, SemanticScorer::Degenerate { itype: Upvote, base_rate: 1.0 });
        assert_eq!(trained.scorer.embedding_dim(), None);
        let other = train_semantic_scorer("u", Downvote, &rows, &c, &t, &SemanticHyper::default(), 2);
        assert_eq!(score_semantic(&other.scorer, c.post("p").unwrap(), &t), 0.0);
    }
}
