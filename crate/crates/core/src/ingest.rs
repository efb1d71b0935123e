//! Line-oriented parsers for the post log, the event log, and the
//! pretrained word-vector table.
//!
//! Posts and events are JSON Lines, one object per line. Malformed records are
//! skipped and reported with their line number. The embedding table is the
//! plain `token v1 .. vd` text format and is parsed fail-fast.

use std::collections::{HashMap, HashSet};
use std::io::{self, BufRead, Write};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{InteractionEvent, InteractionType, Post, ViewContext};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub reason: String,
}

impl std::fmt::Display for LineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

fn records<R: BufRead>(reader: R) -> impl Iterator<Item = io::Result<(usize, Result<Map<String, Value>, String>)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e)),
        Ok(line) if line.trim().is_empty() => None,
        Ok(line) => Some(Ok((
            i + 1,
            match serde_json::from_str::<Value>(&line) {
                Ok(Value::Object(map)) => Ok(map),
                Ok(_) => Err("record is not an object".to_string()),
                Err(e) => Err(format!("invalid JSON: {e}")),
            },
        ))),
    })
}

fn string_field(map: &Map<String, Value>, name: &str) -> Result<String, String> {
    match map.get(name) {
        None | Some(Value::Null) => Err(format!("missing field {name}")),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(format!("field {name} must be a string")),
    }
}

fn opt_int_field(map: &Map<String, Value>, name: &str) -> Result<Option<i64>, String> {
    match map.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_i64().map(Some).ok_or_else(|| format!("non-integer {name}")),
    }
}

fn int_field(map: &Map<String, Value>, name: &str) -> Result<i64, String> {
    opt_int_field(map, name)?.ok_or_else(|| format!("missing field {name}"))
}

fn parse_post(map: &Map<String, Value>) -> Result<Post, String> {
    let post_id = string_field(map, "post_id")?;
    let subreddit = string_field(map, "subreddit")?;
    let title = string_field(map, "title")?;
    let created_utc = int_field(map, "created_utc")?;
    let subscribers = int_field(map, "subscribers")?;
    let subscribers = u64::try_from(subscribers).map_err(|_| "negative subscribers".to_string())?;
    Ok(Post { post_id, subreddit, title, created_utc, subscribers })
}

/// Parses a posts file. Duplicate ids keep the first occurrence.
pub fn parse_posts<R: BufRead>(reader: R) -> io::Result<(Vec<Post>, Vec<LineError>)> {
    let mut posts = Vec::new();
    let mut errors = Vec::new();
    let mut ids = HashSet::new();
    for record in records(reader) {
        let (line, record) = record?;
        match record.and_then(|map| parse_post(&map)) {
            Ok(post) if !ids.insert(post.post_id.clone()) => {
                errors.push(LineError { line, reason: "duplicate post_id".into() })
            }
            Ok(post) => posts.push(post),
            Err(reason) => errors.push(LineError { line, reason }),
        }
    }
    Ok((posts, errors))
}

fn parse_event(map: &Map<String, Value>, known: &HashSet<&str>) -> Result<InteractionEvent, String> {
    let user_id = string_field(map, "user_id")?;
    let post_id = string_field(map, "post_id")?;
    let itype = match string_field(map, "itype")?.parse::<InteractionType>() {
        Ok(t) if t.is_positive() => t,
        _ => return Err("unsupported interaction type".into()),
    };
    let timestamp = int_field(map, "timestamp")?;
    let context = string_field(map, "context")?.parse::<ViewContext>()?;
    let rank = opt_int_field(map, "rank")?;
    let score = opt_int_field(map, "score")?;
    if !known.contains(post_id.as_str()) {
        return Err("unknown post_id".into());
    }
    Ok(InteractionEvent { user_id, post_id, itype, timestamp, context, rank, score })
}

/// Parses an events file, resolving post ids against `posts`.
pub fn parse_events<R: BufRead>(reader: R, posts: &[Post]) -> io::Result<(Vec<InteractionEvent>, Vec<LineError>)> {
    let known: HashSet<&str> = posts.iter().map(|p| p.post_id.as_str()).collect();
    let mut events = Vec::new();
    let mut errors = Vec::new();
    for record in records(reader) {
        let (line, record) = record?;
        match record.and_then(|map| parse_event(&map, &known)) {
            Ok(e) => events.push(e),
            Err(reason) => errors.push(LineError { line, reason }),
        }
    }
    Ok((events, errors))
}

pub fn write_posts<W: Write>(mut out: W, posts: &[Post]) -> io::Result<()> {
    for p in posts {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_events<W: Write>(mut out: W, events: &[InteractionEvent]) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Token to vector map with a fixed dimension. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("embedding table is empty")]
    Empty,
    #[error("line {line}: token has no vector components")]
    NoComponents { line: usize },
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: duplicate token {token:?}")]
    DuplicateToken { line: usize, token: String },
    #[error("line {line}: cannot parse {value:?} as a real")]
    BadValue { line: usize, value: String },
}

impl EmbeddingTable {
    /// Builds a table from in-memory vectors. All vectors must have length `dim`.
    pub fn from_vectors(dim: usize, vectors: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self, EmbeddingError> {
        let mut map = HashMap::new();
        for (i, (token, v)) in vectors.into_iter().enumerate() {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch { line: i + 1, expected: dim, found: v.len() });
            }
            if map.insert(token.clone(), v).is_some() {
                return Err(EmbeddingError::DuplicateToken { line: i + 1, token });
            }
        }
        if map.is_empty() || dim == 0 {
            return Err(EmbeddingError::Empty);
        }
        Ok(EmbeddingTable { dim, vectors: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Writes the table in text format, tokens sorted.
    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut tokens: Vec<&String> = self.vectors.keys().collect();
        tokens.sort();
        for token in tokens {
            write!(out, "{token}")?;
            for v in &self.vectors[token] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Parses `token v1 v2 .. vd` lines. The dimension comes from the first line.
pub fn parse_embedding_table<R: BufRead>(reader: R) -> Result<EmbeddingTable, EmbeddingError> {
    let mut dim = None;
    let mut vectors = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(token) = parts.next() else { continue };
        let values = parts
            .map(|s| s.parse::<f64>().map_err(|_| EmbeddingError::BadValue { line: line_no, value: s.to_string() }))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err(EmbeddingError::NoComponents { line: line_no });
        }
        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected {
            return Err(EmbeddingError::DimensionMismatch { line: line_no, expected, found: values.len() });
        }
        if vectors.insert(token.to_string(), values).is_some() {
            return Err(EmbeddingError::DuplicateToken { line: line_no, token: token.to_string() });
        }
    }
    match dim {
        None => Err(EmbeddingError::Empty),
        Some(dim) => Ok(EmbeddingTable { dim, vectors }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const POST: &str = r#"{"post_id":"p1","subreddit":"pics","title":"A cat","created_utc":100,"subscribers":5}"#;

    #[test]
    fn parses_well_formed_post() {
        let (posts, errors) = parse_posts(POST.as_bytes()).unwrap();
        assert!(errors.is_empty());
        assert_eq!(posts[0].title, "A cat");
        assert_eq!(posts[0].subscribers, 5);
    }

    #[test]
    fn missing_title_is_a_line_error() {
        let input = r#"{"post_id":"p1","subreddit":"pics","created_utc":100,"subscribers":5}"#;
        let (posts, errors) = parse_posts(input.as_bytes()).unwrap();
        assert!(posts.is_empty());
        assert_eq!(errors, vec![LineError { line: 1, reason: "missing field title".into() }]);
    }

    #[test]
    fn duplicate_post_keeps_first() {
        let second = POST.replace("A cat", "A dog");
        let input = format!("{POST}\n{second}\n");
        let (posts, errors) = parse_posts(input.as_bytes()).unwrap();
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].title, "A cat");
        assert_eq!(errors, vec![LineError { line: 2, reason: "duplicate post_id".into() }]);
    }

    fn posts() -> Vec<Post> {
        parse_posts(POST.as_bytes()).unwrap().0
    }

    #[test]
    fn event_types_and_hidden_score() {
        let input = r#"{"user_id":"u","post_id":"p1","itype":"upvote","timestamp":200,"context":"all","rank":3}"#;
        let (events, errors) = parse_events(input.as_bytes(), &posts()).unwrap();
        assert!(errors.is_empty());
        assert_eq!(events[0].itype, InteractionType::Upvote);
        assert_eq!(events[0].rank, Some(3));
        assert_eq!(events[0].score, None);
    }

    #[test]
    fn event_line_errors() {
        let input = [
            r#"{"user_id":"u","post_id":"p1","itype":"save","timestamp":200,"context":"all"}"#,
            r#"{"user_id":"u","post_id":"p1","itype":"do_nothing","timestamp":200,"context":"all"}"#,
            r#"{"user_id":"u","post_id":"zz","itype":"upvote","timestamp":200,"context":"all"}"#,
            r#"{"user_id":"u","post_id":"p1","itype":"upvote","timestamp":200,"context":"all","rank":1.5}"#,
            r#"{"user_id":"u","post_id":"p1","itype":"upvote","timestamp":200,"context":"home"}"#,
            "not json",
            r#"{"user_id":"u","post_id":"p1","itype":"downvote","timestamp":200,"context":"subreddit","score":-2}"#,
        ]
        .join("\n");
        let (events, errors) = parse_events(input.as_bytes(), &posts()).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].score, Some(-2));
        let reasons: Vec<_> = errors.iter().map(|e| (e.line, e.reason.as_str())).collect();
        assert_eq!(reasons[0], (1, "unsupported interaction type"));
        assert_eq!(reasons[1], (2, "unsupported interaction type"));
        assert_eq!(reasons[2], (3, "unknown post_id"));
        assert_eq!(reasons[3], (4, "non-integer rank"));
        assert_eq!(reasons[4], (5, "unknown context \"home\""));
        assert!(reasons[5].1.starts_with("invalid JSON"));
    }

    #[test]
    fn minimal_embedding_table() {
        let table = parse_embedding_table("a 1.0 2.0\nb 0.0 0.5\n".as_bytes()).unwrap();
        assert_eq!(table.dim(), 2);
        assert_eq!(table.get("b"), Some(&[0.0, 0.5][..]));
        assert_eq!(table.get("c"), None);
    }

    #[test]
    fn embedding_dimension_mismatch_names_line() {
        let err = parse_embedding_table("a 1.0 2.0\nb 0.0 0.5\nc 1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EmbeddingError::DimensionMismatch { line: 3, expected: 2, found: 1 }));
    }

    #[test]
    fn embedding_empty_and_duplicate_are_fatal() {
        assert!(matches!(parse_embedding_table("".as_bytes()), Err(EmbeddingError::Empty)));
        assert!(matches!(
            parse_embedding_table("a 1\na 2\n".as_bytes()),
            Err(EmbeddingError::DuplicateToken { line: 2, .. })
        ));
        assert!(matches!(parse_embedding_table("a 1 x\n".as_bytes()), Err(EmbeddingError::BadValue { line: 1, .. })));
    }

    #[test]
    fn three_hundred_dimensional_line() {
        let line: String = std::iter::once("the".to_string())
            .chain((0..300).map(|i| format!("{}", i as f64 * 0.001)))
            .collect::<Vec<_>>()
            .join(" ");
        let table = parse_embedding_table(line.as_bytes()).unwrap();
        assert_eq!(table.dim(), 300);
    }

    proptest! {
        #[test]
        fn embedding_values_are_bit_exact(values in prop::collection::vec(-1e6f64..1e6, 1..8)) {
            let table = EmbeddingTable::from_vectors(values.len(), [("tok".to_string(), values.clone())]).unwrap();
            let mut buf = Vec::new();
            table.write(&mut buf).unwrap();
            let parsed = parse_embedding_table(buf.as_slice()).unwrap();
            let got = parsed.get("tok").unwrap();
            for (a, b) in got.iter().zip(&values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn logs_round_trip(
            rows in prop::collection::vec(("[a-z]{1,4}", "[ -~]{0,12}", 0i64..1_000_000, 0u64..10_000_000,
                                           0usize..4, 0usize..3, prop::option::of(1i64..100), prop::option::of(-50i64..5000)), 1..20)
        ) {
            let mut posts = Vec::new();
            let mut events = Vec::new();
            for (i, (sub, title, created, subs, t, c, rank, score)) in rows.into_iter().enumerate() {
                let post_id = format!("p{i}");
                posts.push(Post { post_id: post_id.clone(), subreddit: sub, title, created_utc: created, subscribers: subs });
                events.push(InteractionEvent {
                    user_id: format!("u{}", i % 3),
                    post_id,
                    itype: InteractionType::POSITIVE[t],
                    timestamp: created + 60,
                    context: ViewContext::ALL[c],
                    rank,
                    score,
                });
            }
            let mut buf = Vec::new();
            write_posts(&mut buf, &posts).unwrap();
            let (parsed_posts, errs) = parse_posts(buf.as_slice()).unwrap();
            prop_assert!(errs.is_empty());
            prop_assert_eq!(&parsed_posts, &posts);
            let mut buf = Vec::new();
            write_events(&mut buf, &events).unwrap();
            let (parsed_events, errs) = parse_events(buf.as_slice(), &parsed_posts).unwrap();
            prop_assert!(errs.is_empty());
            prop_assert_eq!(parsed_events, events);
        }
    }
}
