//! Run configuration: command-line flags over `FEEDMODEL_*` environment
//! variables over a TOML file over built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use feedmodel::pipeline::DEFAULT_MIN_INTERACTIONS;
use feedmodel::sampling::{DEFAULT_TRAIN_FRACTION, DEFAULT_WINDOW_HOURS};
use feedmodel::semantic::SemanticHyper;
use feedmodel::synthgen::GenConfig;
use feedmodel::{FeatureMask, LearnerKind, PipelineConfig};

use crate::CliError;

/// Options shared by every subcommand. Each one also reads the matching
/// `FEEDMODEL_*` variable.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalOpts {
    /// TOML config file.
    #[arg(long, global = true, env = "FEEDMODEL_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "FEEDMODEL_SEED", value_name = "N")]
    pub seed: Option<u64>,
    /// nb or adaboost.
    #[arg(long, global = true, env = "FEEDMODEL_LEARNER")]
    pub learner: Option<String>,
    /// Output directory; also the default location of the input files.
    #[arg(long, global = true, env = "FEEDMODEL_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "FEEDMODEL_JOBS", value_name = "N")]
    pub jobs: Option<usize>,
    /// Six 0/1 characters: Rank, Score, Readability, Subscribers, TitleLength, Semantic.
    #[arg(long, global = true, env = "FEEDMODEL_MASK", value_name = "BITS")]
    pub mask: Option<String>,
    #[arg(long, global = true, env = "FEEDMODEL_WINDOW_HOURS", value_name = "H")]
    pub window_hours: Option<f64>,
    #[arg(long, global = true, env = "FEEDMODEL_TRAIN_FRACTION", value_name = "F")]
    pub train_fraction: Option<f64>,
    #[arg(long, global = true, env = "FEEDMODEL_MIN_INTERACTIONS", value_name = "N")]
    pub min_interactions: Option<usize>,
    /// Append hours since submission as an extra feature column.
    #[arg(long, global = true, env = "FEEDMODEL_INCLUDE_AGE", num_args = 0..=1, default_missing_value = "true")]
    pub include_age: Option<bool>,
    /// Post log (default: OUT/posts.jsonl).
    #[arg(long, global = true, env = "FEEDMODEL_POSTS", value_name = "PATH")]
    pub posts: Option<PathBuf>,
    /// Event log (default: OUT/events.jsonl).
    #[arg(long, global = true, env = "FEEDMODEL_EVENTS", value_name = "PATH")]
    pub events: Option<PathBuf>,
    /// Word-vector table (default: OUT/embeddings.txt).
    #[arg(long, global = true, env = "FEEDMODEL_EMBEDDINGS", value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
}

/// The file layer. Relative paths resolve against the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    learner: Option<String>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    mask: Option<String>,
    window_hours: Option<f64>,
    train_fraction: Option<f64>,
    min_interactions: Option<usize>,
    include_age: Option<bool>,
    posts: Option<PathBuf>,
    events: Option<PathBuf>,
    embeddings: Option<PathBuf>,
    semantic: SemanticHyper,
    synth: GenConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub learner: LearnerKind,
    pub out: PathBuf,
    pub jobs: usize,
    pub mask: FeatureMask,
    pub window_hours: f64,
    pub train_fraction: f64,
    pub min_interactions: usize,
    pub include_age: bool,
    pub posts: PathBuf,
    pub events: PathBuf,
    pub embeddings: PathBuf,
    pub semantic: SemanticHyper,
    /// Generator settings; `synth.seed` always equals `seed`.
    pub synth: GenConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::resolve(&GlobalOpts::default()).expect("defaults are valid")
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn resolve(opts: &GlobalOpts) -> Result<Self, CliError> {
        let (file, base) = match &opts.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
                let file: FileConfig =
                    toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
                (file, path.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (FileConfig::default(), PathBuf::new()),
        };
        let from_file = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));

        let learner = match opts.learner.as_ref().or(file.learner.as_ref()) {
            Some(s) => s.parse::<LearnerKind>().map_err(config_error)?,
            None => LearnerKind::Adaboost,
        };
        let mask = match opts.mask.as_ref().or(file.mask.as_ref()) {
            Some(s) => s.parse::<FeatureMask>().map_err(config_error)?,
            None => FeatureMask::FULL,
        };
        let out = opts.out.clone().or_else(|| from_file(&file.out)).unwrap_or_else(|| PathBuf::from("feedmodel-out"));
        let seed = opts.seed.or(file.seed).unwrap_or(file.synth.seed);
        let mut synth = file.synth;
        synth.seed = seed;

        let cfg = RunConfig {
            seed,
            learner,
            jobs: opts.jobs.or(file.jobs).unwrap_or_else(default_jobs),
            mask,
            window_hours: opts.window_hours.or(file.window_hours).unwrap_or(DEFAULT_WINDOW_HOURS),
            train_fraction: opts.train_fraction.or(file.train_fraction).unwrap_or(DEFAULT_TRAIN_FRACTION),
            min_interactions: opts.min_interactions.or(file.min_interactions).unwrap_or(DEFAULT_MIN_INTERACTIONS),
            include_age: opts.include_age.or(file.include_age).unwrap_or(false),
            posts: opts.posts.clone().or_else(|| from_file(&file.posts)).unwrap_or_else(|| out.join("posts.jsonl")),
            events: opts.events.clone().or_else(|| from_file(&file.events)).unwrap_or_else(|| out.join("events.jsonl")),
            embeddings: opts
                .embeddings
                .clone()
                .or_else(|| from_file(&file.embeddings))
                .unwrap_or_else(|| out.join("embeddings.txt")),
            out,
            semantic: file.semantic,
            synth,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(config_error(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction)));
        }
        if !(self.window_hours.is_finite() && self.window_hours >= 0.0) {
            return Err(config_error(format!("window_hours must be finite and non-negative, got {}", self.window_hours)));
        }
        if self.jobs == 0 {
            return Err(config_error("jobs must be at least 1"));
        }
        let s = &self.semantic;
        if s.hidden == 0 || s.batch_size == 0 {
            return Err(config_error("semantic.hidden and semantic.batch_size must be positive"));
        }
        if !(s.adam.lr > 0.0 && s.adam.epsilon > 0.0 && (0.0..1.0).contains(&s.adam.beta1) && (0.0..1.0).contains(&s.adam.beta2)) {
            return Err(config_error("semantic.adam needs lr > 0, epsilon > 0, and betas in [0, 1)"));
        }
        self.synth.validate().map_err(|e| config_error(e.to_string()))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            learner: self.learner,
            window_hours: self.window_hours,
            train_fraction: self.train_fraction,
            mask: self.mask,
            include_age: self.include_age,
            semantic: self.semantic,
            seed: self.seed,
        }
    }

    pub fn bundle_dir(&self) -> PathBuf {
        self.out.join("bundles")
    }
}
