//! Domain types shared across the pipeline, and corpus validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds since the Unix epoch.
pub type Timestamp = i64;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// The five prediction classes. `DoNothing` never appears in raw logs; it is
/// synthesized by negative sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionType {
    Upvote,
    Downvote,
    BrowseContent,
    BrowseComments,
    DoNothing,
}

impl InteractionType {
    pub const ALL: [InteractionType; 5] = [
        InteractionType::Upvote,
        InteractionType::Downvote,
        InteractionType::BrowseContent,
        InteractionType::BrowseComments,
        InteractionType::DoNothing,
    ];

    /// The four types that can appear in an event log.
    pub const POSITIVE: [InteractionType; 4] = [
        InteractionType::Upvote,
        InteractionType::Downvote,
        InteractionType::BrowseContent,
        InteractionType::BrowseComments,
    ];

    /// Class index, stable across serialization.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn is_positive(self) -> bool {
        self != InteractionType::DoNothing
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionType::Upvote => "upvote",
            InteractionType::Downvote => "downvote",
            InteractionType::BrowseContent => "browse_content",
            InteractionType::BrowseComments => "browse_comments",
            InteractionType::DoNothing => "do_nothing",
        }
    }
}

impl fmt::Display for InteractionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown interaction type {0:?}")]
pub struct UnknownInteractionType(pub String);

impl FromStr for InteractionType {
    type Err = UnknownInteractionType;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| UnknownInteractionType(s.to_string()))
    }
}

/// Listing the interaction happened from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewContext {
    Frontpage,
    All,
    Subreddit,
}

/// Analysis grouping: frontpage and /r/all merge into one group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextGroup {
    Front,
    Subreddit,
}

impl ViewContext {
    pub const ALL: [ViewContext; 3] = [ViewContext::Frontpage, ViewContext::All, ViewContext::Subreddit];

    pub fn group(self) -> ContextGroup {
        match self {
            ViewContext::Frontpage | ViewContext::All => ContextGroup::Front,
            ViewContext::Subreddit => ContextGroup::Subreddit,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewContext::Frontpage => "frontpage",
            ViewContext::All => "all",
            ViewContext::Subreddit => "subreddit",
        }
    }
}

impl FromStr for ViewContext {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown context {s:?}"))
    }
}

impl ContextGroup {
    pub const ALL: [ContextGroup; 2] = [ContextGroup::Front, ContextGroup::Subreddit];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextGroup::Front => "front",
            ContextGroup::Subreddit => "subreddit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub subreddit: String,
    pub title: String,
    pub created_utc: Timestamp,
    pub subscribers: u64,
}

/// One user action on one post. `score: None` means the score was hidden.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub user_id: String,
    pub post_id: String,
    pub itype: InteractionType,
    pub timestamp: Timestamp,
    pub context: ViewContext,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<i64>,
}

/// Posts plus a time-ordered event log.
///
/// Events are stably sorted by timestamp on construction, so the position of
/// an event in [`Corpus::events`] is its stable event index.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    posts: Vec<Post>,
    post_index: HashMap<String, usize>,
    events: Vec<InteractionEvent>,
}

impl Corpus {
    pub fn new(posts: Vec<Post>, mut events: Vec<InteractionEvent>) -> Self {
        events.sort_by_key(|e| e.timestamp);
        let mut post_index = HashMap::with_capacity(posts.len());
        for (i, p) in posts.iter().enumerate() {
            post_index.entry(p.post_id.clone()).or_insert(i);
        }
        Corpus { posts, post_index, events }
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    /// First post with this id.
    pub fn post(&self, post_id: &str) -> Option<&Post> {
        self.post_index.get(post_id).map(|&i| &self.posts[i])
    }

    /// Lookup table from post id to post (first occurrence wins).
    pub fn post_map(&self) -> HashMap<&str, &Post> {
        self.post_index.iter().map(|(k, &i)| (k.as_str(), &self.posts[i])).collect()
    }

    /// Distinct users in sorted order.
    pub fn users(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.events.iter().map(|e| e.user_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn events_of<'a>(&'a self, user: &'a str) -> impl Iterator<Item = (usize, &'a InteractionEvent)> + 'a {
        self.events.iter().enumerate().filter(move |(_, e)| e.user_id == user)
    }
}

/// A (user, post, snapshot, class) row for training or testing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub user_id: String,
    pub post_id: String,
    pub label: InteractionType,
    pub observed_at: Timestamp,
    pub context: ViewContext,
    pub rank: Option<i64>,
    pub score: Option<i64>,
    pub age_hours: f64,
}

/// Hours between post creation and observation, clamped at zero.
pub fn age_hours(observed_at: Timestamp, created_utc: Timestamp) -> f64 {
    ((observed_at - created_utc) as f64 / SECONDS_PER_HOUR).max(0.0)
}

impl LabeledInstance {
    pub fn from_event(event: &InteractionEvent, post: &Post) -> Self {
        LabeledInstance {
            user_id: event.user_id.clone(),
            post_id: event.post_id.clone(),
            label: event.itype,
            observed_at: event.timestamp,
            context: event.context,
            rank: event.rank,
            score: event.score,
            age_hours: age_hours(event.timestamp, post.created_utc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    DuplicatePostId { post_id: String },
    EmptyTitle { post_id: String },
    DanglingPost { user_id: String, post_id: String, timestamp: Timestamp },
    NegativeAge { user_id: String, post_id: String, timestamp: Timestamp, created_utc: Timestamp },
    RankBelowOne { user_id: String, post_id: String, timestamp: Timestamp, rank: i64 },
    DoNothingInLog { user_id: String, post_id: String, timestamp: Timestamp },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicatePostId { post_id } => write!(f, "duplicate post_id {post_id}"),
            Violation::EmptyTitle { post_id } => write!(f, "post {post_id} has an empty title"),
            Violation::DanglingPost { user_id, post_id, timestamp } => {
                write!(f, "event by {user_id} at {timestamp} references unknown post {post_id}")
            }
            Violation::NegativeAge { user_id, post_id, timestamp, created_utc } => write!(
                f,
                "event by {user_id} at {timestamp} precedes creation of {post_id} ({created_utc})"
            ),
            Violation::RankBelowOne { user_id, post_id, timestamp, rank } => {
                write!(f, "event by {user_id} on {post_id} at {timestamp} has rank {rank}")
            }
            Violation::DoNothingInLog { user_id, post_id, timestamp } => {
                write!(f, "event by {user_id} on {post_id} at {timestamp} is labeled do_nothing")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid_users: BTreeSet<String>,
    /// Sorted, so the list is independent of event order.
    pub violations: Vec<Violation>,
}

/// Counts events per user and reports data problems.
///
/// Users with at least `min_interactions` events are valid. Violating events
/// are reported but still count toward their user's total.
pub fn validate_corpus(corpus: &Corpus, min_interactions: usize) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = BTreeMap::<&str, usize>::new();
    for post in corpus.posts() {
        *seen.entry(post.post_id.as_str()).or_default() += 1;
        if post.title.trim().is_empty() {
            violations.push(Violation::EmptyTitle { post_id: post.post_id.clone() });
        }
    }
    for (post_id, n) in seen {
        for _ in 1..n {
            violations.push(Violation::DuplicatePostId { post_id: post_id.to_string() });
        }
    }

    let mut counts = BTreeMap::<&str, usize>::new();
    for e in corpus.events() {
        *counts.entry(e.user_id.as_str()).or_default() += 1;
        match corpus.post(&e.post_id) {
            None => violations.push(Violation::DanglingPost {
                user_id: e.user_id.clone(),
                post_id: e.post_id.clone(),
                timestamp: e.timestamp,
            }),
            Some(p) if e.timestamp < p.created_utc => violations.push(Violation::NegativeAge {
                user_id: e.user_id.clone(),
                post_id: e.post_id.clone(),
                timestamp: e.timestamp,
                created_utc: p.created_utc,
            }),
            Some(_) => {}
        }
        if let Some(rank) = e.rank.filter(|&r| r < 1) {
            violations.push(Violation::RankBelowOne {
                user_id: e.user_id.clone(),
                post_id: e.post_id.clone(),
                timestamp: e.timestamp,
                rank,
            });
        }
        if e.itype == InteractionType::DoNothing {
            violations.push(Violation::DoNothingInLog {
                user_id: e.user_id.clone(),
                post_id: e.post_id.clone(),
                timestamp: e.timestamp,
            });
        }
    }
    violations.sort();

    let valid_users = counts
        .into_iter()
        .filter(|&(_, n)| n >= min_interactions)
        .map(|(u, _)| u.to_string())
        .collect();
    ValidationReport { valid_users, violations }
}
