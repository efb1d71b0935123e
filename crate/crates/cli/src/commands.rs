//! The six subcommands. Each returns a summary value for callers and tests;
//! files are written after all parallel work has been collected.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;

use feedmodel::bundle::UserModelBundle;
use feedmodel::eval::{aggregate, mean_ci, random_baseline, trace_rows, AggregateReport, UserReport, DEFAULT_THRESHOLD};
use feedmodel::features::enumerate_masks;
use feedmodel::ingest::{parse_embedding_table, parse_events, parse_posts, write_events, write_posts, EmbeddingTable, LineError};
use feedmodel::model::{validate_corpus, ContextGroup, Corpus, InteractionType, LabeledInstance, Post};
use feedmodel::pipeline::{prepare_user, run_full_ablation, train_user, AblationRow, FeatureContext, PipelineError};
use feedmodel::sampling::NegativeSampler;
use feedmodel::semantic::average_title_embedding;
use feedmodel::stats::{distribution_by, hidden_score_fraction, type_shares, Dimension, DistributionTable, MAX_AGE_HOURS};
use feedmodel::synthgen::{generate_corpus, generate_embeddings};
use feedmodel::FeatureMask;

use crate::config::RunConfig;
use crate::output::{create_dir, num, write_csv, write_text};
use crate::CliError;

/// Random-baseline trials per user and type.
const BASELINE_TRIALS: usize = 200;

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Other(format!("cannot start worker pool: {e}")))
}

fn open(path: &Path, what: &str) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(CliError::io(format!("cannot open {what} {}", path.display())))
}

fn report_line_errors(path: &Path, errors: &[LineError]) {
    if errors.is_empty() {
        return;
    }
    warn!("{}: skipped {} malformed record(s)", path.display(), errors.len());
    for e in errors.iter().take(5) {
        warn!("  {e}");
    }
}

fn load_posts(cfg: &RunConfig) -> Result<Vec<Post>, CliError> {
    let (posts, errors) =
        parse_posts(open(&cfg.posts, "post log")?).map_err(CliError::io(format!("cannot read {}", cfg.posts.display())))?;
    report_line_errors(&cfg.posts, &errors);
    Ok(posts)
}

fn load_corpus(cfg: &RunConfig) -> Result<Corpus, CliError> {
    let posts = load_posts(cfg)?;
    let (events, errors) = parse_events(open(&cfg.events, "event log")?, &posts)
        .map_err(CliError::io(format!("cannot read {}", cfg.events.display())))?;
    report_line_errors(&cfg.events, &errors);
    Ok(Corpus::new(posts, events))
}

fn load_embeddings(cfg: &RunConfig) -> Result<EmbeddingTable, CliError> {
    parse_embedding_table(open(&cfg.embeddings, "embedding table")?)
        .map_err(|e| CliError::Other(format!("{}: {e}", cfg.embeddings.display())))
}

/// Users at or above `min_interactions`, and the rest.
fn partition_users(corpus: &Corpus, min_interactions: usize) -> (Vec<String>, Vec<String>) {
    let report = validate_corpus(corpus, min_interactions);
    if !report.violations.is_empty() {
        warn!("{} data problem(s) in the corpus, e.g. {}", report.violations.len(), report.violations[0]);
    }
    corpus.users().into_iter().partition(|u| report.valid_users.contains(u))
}

/// File stem for a user id: anything outside `[A-Za-z0-9_-]` becomes `_`.
fn file_stem(user: &str) -> String {
    user.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub users: usize,
    pub posts: usize,
    pub events: usize,
    /// In `InteractionType::POSITIVE` order.
    pub per_type: [usize; 4],
}

impl fmt::Display for SynthSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "users {}  posts {}  events {}", self.users, self.posts, self.events)?;
        for (t, n) in InteractionType::POSITIVE.iter().zip(self.per_type) {
            let share = n as f64 / self.events.max(1) as f64;
            writeln!(f, "  {:<16}{:>8}  {:.4}", t.as_str(), n, share)?;
        }
        Ok(())
    }
}

/// Writes `posts.jsonl`, `events.jsonl`, and `embeddings.txt` to the
/// configured input paths.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary, CliError> {
    let corpus = generate_corpus(&cfg.synth).map_err(|e| CliError::Config(e.to_string()))?;
    let table = generate_embeddings(&cfg.synth).map_err(|e| CliError::Config(e.to_string()))?;

    let mut buf = Vec::new();
    write_posts(&mut buf, corpus.posts()).expect("writing to memory");
    write_text(&cfg.posts, &buf)?;
    buf.clear();
    write_events(&mut buf, corpus.events()).expect("writing to memory");
    write_text(&cfg.events, &buf)?;
    buf.clear();
    table.write(&mut buf).expect("writing to memory");
    write_text(&cfg.embeddings, &buf)?;

    let mut per_type = [0; 4];
    for e in corpus.events() {
        if let Some(i) = InteractionType::POSITIVE.iter().position(|&t| t == e.itype) {
            per_type[i] += 1;
        }
    }
    Ok(SynthSummary { users: corpus.users().len(), posts: corpus.posts().len(), events: corpus.events().len(), per_type })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub trained: Vec<String>,
    /// Below `min_interactions`.
    pub skipped: Vec<String>,
    /// Valid users whose pipeline failed, with the reason.
    pub failed: Vec<(String, String)>,
}

impl fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trained {} bundle(s); skipped {} user(s) below the interaction threshold; {} failed",
            self.trained.len(),
            self.skipped.len(),
            self.failed.len()
        )
    }
}

/// Trains every valid user and writes `bundles/<user>.json`, replacing any
/// bundles from an earlier run.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary, CliError> {
    let corpus = load_corpus(cfg)?;
    let table = load_embeddings(cfg)?;
    let (valid, skipped) = partition_users(&corpus, cfg.min_interactions);
    for u in &skipped {
        info!("skipping user {u}: fewer than {} interactions", cfg.min_interactions);
    }
    if valid.is_empty() {
        return Err(CliError::NoValidUsers(format!("no user has at least {} interactions", cfg.min_interactions)));
    }

    let ctx = FeatureContext::new(&corpus, &table);
    let sampler = NegativeSampler::new(&corpus);
    let pcfg = cfg.pipeline();
    let results: Vec<(&String, Result<UserModelBundle, PipelineError>)> = pool(cfg)?.install(|| {
        valid
            .par_iter()
            .map(|u| (u, prepare_user(&sampler, u, &pcfg).and_then(|split| train_user(&ctx, u, &split, &pcfg))))
            .collect()
    });

    let dir = cfg.bundle_dir();
    create_dir(&dir)?;
    for entry in fs::read_dir(&dir).map_err(CliError::io(format!("cannot list {}", dir.display())))? {
        let path = entry.map_err(CliError::io(format!("cannot list {}", dir.display())))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            fs::remove_file(&path).map_err(CliError::io(format!("cannot remove {}", path.display())))?;
        }
    }

    let mut summary = TrainSummary { trained: Vec::new(), skipped, failed: Vec::new() };
    let mut stems = BTreeSet::new();
    for (user, result) in results {
        match result {
            Ok(bundle) => {
                let stem = file_stem(user);
                if !stems.insert(stem.clone()) {
                    return Err(CliError::Other(format!("user ids collide on bundle file name {stem}.json")));
                }
                write_text(&dir.join(format!("{stem}.json")), bundle.to_json().as_bytes())?;
                summary.trained.push(user.clone());
            }
            Err(e) => {
                warn!("user {user}: {e}");
                summary.failed.push((user.clone(), e.to_string()));
            }
        }
    }
    if summary.trained.is_empty() {
        return Err(CliError::NoValidUsers("every eligible user failed to train".into()));
    }
    Ok(summary)
}

fn load_bundles(cfg: &RunConfig) -> Result<Vec<UserModelBundle>, CliError> {
    let dir = cfg.bundle_dir();
    let listing = fs::read_dir(&dir).map_err(CliError::io(format!("cannot list bundles in {} (run train first)", dir.display())))?;
    let mut paths = Vec::new();
    for entry in listing {
        let path = entry.map_err(CliError::io(format!("cannot list {}", dir.display())))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut bundles = paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(CliError::io(format!("cannot read {}", p.display())))?;
            UserModelBundle::from_json(&text).map_err(|e| CliError::Other(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if bundles.is_empty() {
        return Err(CliError::Other(format!("no bundles in {} (run train first)", dir.display())));
    }
    bundles.sort_by(|a, b| a.user_id.cmp(&b.user_id));
    Ok(bundles)
}

fn check_embedding_dim(bundle: &UserModelBundle, table: &EmbeddingTable) -> Result<(), String> {
    match bundle.scorers.iter().find_map(|s| s.embedding_dim()) {
        Some(d) if d != table.dim() => Err(format!("bundle expects {d}-dimensional word vectors, table has {}", table.dim())),
        _ => Ok(()),
    }
}

/// A `USER:TYPE` trace request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRequest {
    pub user: String,
    pub itype: InteractionType,
}

impl FromStr for TraceRequest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (user, t) = s.rsplit_once(':').ok_or_else(|| format!("trace {s:?} must look like USER:TYPE"))?;
        let itype: InteractionType = t.parse().map_err(|e| format!("{e}"))?;
        if user.is_empty() || !itype.is_positive() {
            return Err(format!("trace {s:?} needs a user and a positive interaction type"));
        }
        Ok(TraceRequest { user: user.to_string(), itype })
    }
}

struct UserEval {
    report: UserReport,
    test: Vec<LabeledInstance>,
    probs: Vec<Vec<f64>>,
    /// (precision, recall) of random scores per positive type.
    baseline: Vec<(f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    /// Sorted by user id.
    pub reports: Vec<UserReport>,
    pub aggregate: AggregateReport,
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "evaluated {} user(s)", self.reports.len())?;
        let line = |f: &mut fmt::Formatter<'_>, name: &str, m: Option<feedmodel::eval::MeanCi>| match m {
            Some(m) => writeln!(f, "  {name:<16}{:.4}  [{:.4}, {:.4}]  n={}", m.mean, m.ci_low, m.ci_high, m.n),
            None => writeln!(f, "  {name:<16}undefined"),
        };
        for (t, m) in &self.aggregate.per_type {
            line(f, t.as_str(), *m)?;
        }
        line(f, "mean_unweighted", self.aggregate.mean_unweighted)?;
        line(f, "mean_weighted", self.aggregate.mean_weighted)
    }
}

fn report_rows(reports: &[UserReport]) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|r| {
            r.cells.iter().map(|c| {
                vec![
                    r.user_id.clone(),
                    c.itype.to_string(),
                    num(c.auc),
                    num(Some(c.precision)),
                    num(c.recall),
                    c.n_test.to_string(),
                ]
            })
        })
        .collect()
}

/// Evaluates saved bundles on their users' test partitions. Writes
/// `report.csv`, `aggregate.csv`, `baseline.csv`, and one
/// `traces/<user>_<type>.csv` per request.
pub fn cmd_eval(cfg: &RunConfig, traces: &[TraceRequest]) -> Result<EvalSummary, CliError> {
    let corpus = load_corpus(cfg)?;
    let table = load_embeddings(cfg)?;
    let bundles = load_bundles(cfg)?;
    let users: BTreeSet<String> = corpus.users().into_iter().collect();

    let ctx = FeatureContext::new(&corpus, &table);
    let sampler = NegativeSampler::new(&corpus);
    let pcfg = cfg.pipeline();
    let results: Vec<(&UserModelBundle, Result<UserEval, String>)> = pool(cfg)?.install(|| {
        bundles
            .par_iter()
            .map(|b| {
                let r = (|| {
                    if !users.contains(&b.user_id) {
                        return Err("no events for this user in the corpus".to_string());
                    }
                    check_embedding_dim(b, &table)?;
                    let split = prepare_user(&sampler, &b.user_id, &pcfg).map_err(|e| e.to_string())?;
                    let (report, probs) = feedmodel::pipeline::evaluate_user(&ctx, b, &split.test).map_err(|e| e.to_string())?;
                    let baseline =
                        InteractionType::POSITIVE.iter().map(|&t| random_baseline(&split.test, t, BASELINE_TRIALS, cfg.seed)).collect();
                    Ok(UserEval { report, test: split.test, probs, baseline })
                })();
                (b, r)
            })
            .collect()
    });

    let mut evals: BTreeMap<String, UserEval> = BTreeMap::new();
    for (b, r) in results {
        match r {
            Ok(e) => {
                evals.insert(b.user_id.clone(), e);
            }
            Err(msg) => warn!("user {}: {msg}; skipped", b.user_id),
        }
    }
    if evals.is_empty() {
        return Err(CliError::NoValidUsers("no bundle matched an evaluable user".into()));
    }

    let reports: Vec<UserReport> = evals.values().map(|e| e.report.clone()).collect();
    let agg = aggregate(&reports);
    write_csv(&cfg.out.join("report.csv"), &["user_id", "type", "auc", "precision", "recall", "n_test"], report_rows(&reports))?;

    let agg_rows: Vec<Vec<String>> = agg
        .per_type
        .iter()
        .map(|(t, m)| (t.as_str(), *m))
        .chain([("mean_unweighted", agg.mean_unweighted), ("mean_weighted", agg.mean_weighted)])
        .map(|(name, m)| {
            vec![
                name.to_string(),
                num(m.map(|m| m.mean)),
                num(m.map(|m| m.ci_low)),
                num(m.map(|m| m.ci_high)),
                m.map_or(0, |m| m.n).to_string(),
            ]
        })
        .collect();
    write_csv(&cfg.out.join("aggregate.csv"), &["type", "mean_auc", "ci_low", "ci_high", "n_users"], agg_rows)?;

    let baseline_rows = evals.iter().flat_map(|(u, e)| {
        InteractionType::POSITIVE
            .iter()
            .zip(&e.baseline)
            .map(move |(t, (p, r))| vec![u.clone(), t.to_string(), num(Some(*p)), num(*r)])
    });
    write_csv(&cfg.out.join("baseline.csv"), &["user_id", "type", "precision", "recall"], baseline_rows)?;

    for req in traces {
        let Some(e) = evals.get(&req.user) else {
            warn!("no evaluation for user {}; trace skipped", req.user);
            continue;
        };
        let rows = trace_rows(&e.test, &e.probs, req.itype, DEFAULT_THRESHOLD).into_iter().map(|r| {
            vec![r.observed_at.to_string(), num(Some(r.prob)), u8::from(r.label).to_string(), r.outcome.as_str().to_string()]
        });
        let path = cfg.out.join("traces").join(format!("{}_{}.csv", file_stem(&req.user), req.itype));
        write_csv(&path, &["observed_at", "prob", "label", "outcome"], rows)?;
    }
    Ok(EvalSummary { reports, aggregate: agg })
}

/// Cross-user means for one mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskRow {
    pub mask: FeatureMask,
    /// Mean AUC per positive type over users where it is defined.
    pub per_type: [Option<f64>; 4],
    /// Mean of the users' unweighted mean AUCs.
    pub mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationSummary {
    /// Per user (sorted), 64 rows in mask order.
    pub users: Vec<(String, Vec<AblationRow>)>,
    /// 64 rows in mask order.
    pub rows: Vec<MaskRow>,
}

impl fmt::Display for AblationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ablation over {} user(s); best masks by mean AUC:", self.users.len())?;
        let mut ranked: Vec<&MaskRow> = self.rows.iter().filter(|r| r.mean.is_some()).collect();
        ranked.sort_by(|a, b| b.mean.partial_cmp(&a.mean).expect("finite means"));
        for r in ranked.iter().take(5) {
            writeln!(f, "  {}  {:.4}", r.mask, r.mean.unwrap_or(f64::NAN))?;
        }
        Ok(())
    }
}

fn user_ablation_row(user: &str, row: &AblationRow) -> Vec<String> {
    let mut out = vec![user.to_string(), row.mask.to_string()];
    out.extend(InteractionType::POSITIVE.iter().map(|&t| num(row.report.cell(t).and_then(|c| c.auc))));
    out.push(num(row.report.mean_unweighted()));
    out
}

/// Runs all 64 masks per valid user. Writes `ablation_users.csv` and the
/// cross-user `ablation.csv`.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<AblationSummary, CliError> {
    let corpus = load_corpus(cfg)?;
    let table = load_embeddings(cfg)?;
    let (valid, skipped) = partition_users(&corpus, cfg.min_interactions);
    for u in &skipped {
        info!("skipping user {u}: fewer than {} interactions", cfg.min_interactions);
    }
    if valid.is_empty() {
        return Err(CliError::NoValidUsers(format!("no user has at least {} interactions", cfg.min_interactions)));
    }

    let ctx = FeatureContext::new(&corpus, &table);
    let sampler = NegativeSampler::new(&corpus);
    let pcfg = cfg.pipeline();
    let results: Vec<(&String, Result<Vec<AblationRow>, PipelineError>)> = pool(cfg)?.install(|| {
        valid
            .par_iter()
            .map(|u| (u, prepare_user(&sampler, u, &pcfg).and_then(|split| run_full_ablation(&ctx, u, &split, &pcfg))))
            .collect()
    });
    let mut users = Vec::new();
    for (u, r) in results {
        match r {
            Ok(rows) => users.push((u.clone(), rows)),
            Err(e) => warn!("user {u}: {e}; skipped"),
        }
    }
    if users.is_empty() {
        return Err(CliError::NoValidUsers("every eligible user failed".into()));
    }

    let rows: Vec<MaskRow> = enumerate_masks()
        .into_iter()
        .enumerate()
        .map(|(i, mask)| {
            let mut per_type = [None; 4];
            for (slot, &t) in per_type.iter_mut().zip(&InteractionType::POSITIVE) {
                let v: Vec<f64> = users.iter().filter_map(|(_, r)| r[i].report.cell(t).and_then(|c| c.auc)).collect();
                *slot = mean_ci(&v).map(|m| m.mean);
            }
            let means: Vec<f64> = users.iter().filter_map(|(_, r)| r[i].report.mean_unweighted()).collect();
            MaskRow { mask, per_type, mean: mean_ci(&means).map(|m| m.mean) }
        })
        .collect();

    let mut header = vec!["user_id", "mask_bits"];
    header.extend(InteractionType::POSITIVE.iter().map(|t| t.as_str()));
    header.push("mean");
    let user_rows = users.iter().flat_map(|(u, rs)| rs.iter().map(move |r| user_ablation_row(u, r)));
    write_csv(&cfg.out.join("ablation_users.csv"), &header, user_rows)?;
    let agg_rows = rows.iter().map(|r| {
        let mut out = vec![r.mask.to_string()];
        out.extend(r.per_type.iter().map(|&a| num(a)));
        out.push(num(r.mean));
        out
    });
    write_csv(&cfg.out.join("ablation.csv"), &header[1..], agg_rows)?;
    Ok(AblationSummary { users, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsSummary {
    /// Dimension-major, front before subreddit.
    pub tables: Vec<DistributionTable>,
    /// In `InteractionType::POSITIVE` order.
    pub shares: [f64; 4],
    pub hidden_score_fraction: f64,
}

impl StatsSummary {
    pub fn table(&self, dimension: Dimension, group: ContextGroup) -> Option<&DistributionTable> {
        self.tables.iter().find(|t| t.dimension == dimension && t.group == group)
    }
}

impl fmt::Display for StatsSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "wrote {} tables", self.tables.len())?;
        for (t, s) in InteractionType::POSITIVE.iter().zip(self.shares) {
            writeln!(f, "  share {:<16}{:.4}", t.as_str(), s)?;
        }
        writeln!(f, "  hidden score fraction {:.4}", self.hidden_score_fraction)?;
        for g in ContextGroup::ALL {
            if let Some(m) = self.table(Dimension::AgeHours, g).and_then(DistributionTable::pooled_median_bin) {
                writeln!(f, "  {} age median bin {m} h", g.as_str())?;
            }
        }
        Ok(())
    }
}

fn table_rows(t: &DistributionTable) -> Vec<Vec<String>> {
    let (dim, ctx) = (t.dimension.as_str(), t.group.as_str());
    let mut rows = Vec::new();
    for itype in InteractionType::POSITIVE {
        let Some(p) = t.probabilities(itype) else { continue };
        for (bin, p) in t.bins.iter().zip(p) {
            rows.push(vec![dim.into(), ctx.into(), itype.to_string(), num(Some(bin.low)), num(Some(bin.high)), num(Some(p))]);
        }
    }
    if let Some(h) = t.hidden_score_fraction {
        rows.push(vec![dim.into(), ctx.into(), "hidden_score_fraction".into(), String::new(), String::new(), num(Some(h))]);
    }
    rows
}

/// Writes `stats/<dimension>_<context>.csv` for all eight tables plus
/// `stats/summary.csv`.
pub fn cmd_stats(cfg: &RunConfig) -> Result<StatsSummary, CliError> {
    let corpus = load_corpus(cfg)?;
    let cells: Vec<(Dimension, ContextGroup)> =
        Dimension::ALL.iter().flat_map(|&d| ContextGroup::ALL.iter().map(move |&g| (d, g))).collect();
    let tables: Vec<DistributionTable> =
        pool(cfg)?.install(|| cells.par_iter().map(|&(d, g)| distribution_by(&corpus, d, g)).collect());

    let dir = cfg.out.join("stats");
    let header = ["dimension", "context", "type", "bin_low", "bin_high", "probability"];
    for t in &tables {
        write_csv(&dir.join(format!("{}_{}.csv", t.dimension, t.group.as_str())), &header, table_rows(t))?;
    }
    let summary = StatsSummary { shares: type_shares(&corpus), hidden_score_fraction: hidden_score_fraction(&corpus), tables };

    let mut rows: Vec<[String; 2]> = InteractionType::POSITIVE
        .iter()
        .zip(summary.shares)
        .map(|(t, s)| [format!("share_{t}"), num(Some(s))])
        .collect();
    rows.push(["hidden_score_fraction".into(), num(Some(summary.hidden_score_fraction))]);
    for g in ContextGroup::ALL {
        let m = summary.table(Dimension::AgeHours, g).and_then(DistributionTable::pooled_median_bin);
        rows.push([format!("age_median_bin_{}", g.as_str()), num(m.filter(|&m| m < MAX_AGE_HOURS))]);
    }
    write_csv(&dir.join("summary.csv"), &["metric", "value"], rows)?;
    Ok(summary)
}

/// Scores every post in the post log with one bundle and writes
/// `predictions_<user>.csv`. Returns the path written.
pub fn cmd_predict(cfg: &RunConfig, bundle_path: &Path, observed_at: Option<i64>) -> Result<PathBuf, CliError> {
    let text = fs::read_to_string(bundle_path).map_err(CliError::io(format!("cannot read {}", bundle_path.display())))?;
    let bundle = UserModelBundle::from_json(&text).map_err(|e| CliError::Other(format!("{}: {e}", bundle_path.display())))?;
    let posts = load_posts(cfg)?;
    let table = load_embeddings(cfg)?;
    check_embedding_dim(&bundle, &table).map_err(CliError::Other)?;

    let rows = posts
        .iter()
        .map(|p| {
            let at = observed_at.unwrap_or(p.created_utc);
            let probs = bundle
                .predict_post(p, &average_title_embedding(&p.title, &table), at)
                .map_err(|e| CliError::Other(format!("post {}: {e}", p.post_id)))?;
            let mut row = vec![p.post_id.clone()];
            row.extend(probs.into_iter().map(|v| num(Some(v))));
            Ok(row)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut header = vec!["post_id"];
    header.extend(InteractionType::ALL.iter().map(|t| t.as_str()));
    let path = cfg.out.join(format!("predictions_{}.csv", file_stem(&bundle.user_id)));
    write_csv(&path, &header, rows)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_requests_parse() {
        let r: TraceRequest = "alice:upvote".parse().unwrap();
        assert_eq!((r.user.as_str(), r.itype), ("alice", InteractionType::Upvote));
        let r: TraceRequest = "a:b:browse_comments".parse().unwrap();
        assert_eq!(r.user, "a:b");
        assert!("alice".parse::<TraceRequest>().is_err());
        assert!("alice:do_nothing".parse::<TraceRequest>().is_err());
        assert!(":upvote".parse::<TraceRequest>().is_err());
    }

    #[test]
    fn file_stems_are_safe() {
        assert_eq!(file_stem("u_01-x"), "u_01-x");
        assert_eq!(file_stem("../a b"), "___a_b");
    }
}
