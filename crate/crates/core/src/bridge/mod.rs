//! The scorer boundary.
//!
//! An alignment is turned into text-pair records (one per text combination in
//! multi-text mode, one per correspondence in single-text mode), scored by a
//! [`PairScorer`], and the scores are written back as confidences, taking the
//! maximum over a correspondence's records. Records cross process boundaries
//! as CSV; see [`csv_io`].

pub mod csv_io;
mod remote;
#[cfg(feature = "stub-server")]
pub mod stub;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::alignment::{Alignment, CellKey};
use crate::graph::{Iri, Ontology};
use crate::matcher::{jaccard, tokenize};
use crate::text::{ExtractorKind, TextSet};

pub use csv_io::CsvError;
pub use remote::{FinetuneParams, FinetuneResponse, RemoteScorer, ScorerEndpoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SerializationMode {
    /// Every combination of the two resources' texts, max-aggregated.
    #[default]
    MultiText,
    /// One record per correspondence, texts joined by a space.
    SingleText,
}

impl FromStr for SerializationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multi" | "multi-text" => Ok(SerializationMode::MultiText),
            "single" | "single-text" => Ok(SerializationMode::SingleText),
            other => Err(format!("unknown mode {other:?} (expected multi or single)")),
        }
    }
}

impl fmt::Display for SerializationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SerializationMode::MultiText => "multi",
            SerializationMode::SingleText => "single",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextPairRecord {
    pub pair_id: String,
    pub key: CellKey,
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub pair_id: String,
    score: f64,
}

impl ScoreRecord {
    pub fn new(pair_id: impl Into<String>, score: f64) -> Result<Self, InvalidScore> {
        if !(0.0..=1.0).contains(&score) {
            return Err(InvalidScore(score));
        }
        Ok(ScoreRecord {
            pair_id: pair_id.into(),
            score,
        })
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("score {0} outside [0, 1]")]
pub struct InvalidScore(pub f64);

/// Records for an alignment plus the correspondences that had no text on some side.
#[derive(Debug, Clone, Default)]
pub struct PairBatch {
    pub records: Vec<TextPairRecord>,
    pub skipped: Vec<CellKey>,
}

/// Caches extracted texts per resource for one ontology.
struct TextCache<'a> {
    ontology: &'a Ontology,
    extractor: ExtractorKind,
    texts: HashMap<Iri, TextSet>,
}

impl<'a> TextCache<'a> {
    fn new(ontology: &'a Ontology, extractor: ExtractorKind) -> Self {
        TextCache {
            ontology,
            extractor,
            texts: HashMap::new(),
        }
    }

    fn get(&mut self, r: &Iri) -> &TextSet {
        self.texts
            .entry(r.clone())
            .or_insert_with(|| self.extractor.extract(self.ontology, r))
    }
}

/// Serializes every correspondence of `a` into text-pair records.
///
/// Records follow the alignment order, then text order; pair ids are `p0`, `p1`, ...
pub fn build_pairs(
    a: &Alignment,
    o1: &Ontology,
    o2: &Ontology,
    extractor: ExtractorKind,
    mode: SerializationMode,
) -> PairBatch {
    let mut left_cache = TextCache::new(o1, extractor);
    let mut right_cache = TextCache::new(o2, extractor);
    let mut batch = PairBatch::default();
    for key in a.keys() {
        let left = left_cache.get(&key.source).clone();
        let right = right_cache.get(&key.target);
        if left.is_empty() || right.is_empty() {
            batch.skipped.push(key.clone());
            continue;
        }
        let mut push = |l: String, r: String| {
            let pair_id = format!("p{}", batch.records.len());
            batch.records.push(TextPairRecord {
                pair_id,
                key: key.clone(),
                left: l,
                right: r,
            });
        };
        match mode {
            SerializationMode::MultiText => {
                for l in left.iter() {
                    for r in right.iter() {
                        push(l.to_string(), r.to_string());
                    }
                }
            }
            SerializationMode::SingleText => push(left.joined(), right.joined()),
        }
    }
    batch
}

/// Result of writing scores back into an alignment.
#[derive(Debug, Clone, Default)]
pub struct ScoredAlignment {
    pub alignment: Alignment,
    /// Correspondences that kept their prior confidence because no record of theirs was scored.
    pub unscored: Vec<CellKey>,
    /// Score pair ids that match no record.
    pub unknown_pair_ids: Vec<String>,
}

/// Sets each correspondence's confidence to the maximum score over its records.
pub fn apply_scores(
    a: &Alignment,
    records: &[TextPairRecord],
    scores: &[ScoreRecord],
) -> ScoredAlignment {
    let by_id: HashMap<&str, &CellKey> = records
        .iter()
        .map(|r| (r.pair_id.as_str(), &r.key))
        .collect();
    let mut best: HashMap<&CellKey, f64> = HashMap::new();
    let mut unknown_pair_ids = Vec::new();
    for s in scores {
        match by_id.get(s.pair_id.as_str()) {
            Some(key) => {
                let slot = best.entry(*key).or_insert(f64::NEG_INFINITY);
                *slot = slot.max(s.score);
            }
            None => unknown_pair_ids.push(s.pair_id.clone()),
        }
    }
    let mut alignment = a.clone();
    let mut unscored = Vec::new();
    for key in a.keys() {
        match best.get(key) {
            Some(&score) => {
                alignment
                    .set_confidence(key, score)
                    .expect("scores are validated on construction");
            }
            None => unscored.push(key.clone()),
        }
    }
    ScoredAlignment {
        alignment,
        unscored,
        unknown_pair_ids,
    }
}

/// Jaccard similarity of the two sides' token sets; a side without tokens scores 0.
pub fn lexical_score(records: &[TextPairRecord]) -> Vec<ScoreRecord> {
    records
        .iter()
        .map(|r| {
            let (l, rt) = (tokenize(&r.left), tokenize(&r.right));
            let score = if l.is_empty() || rt.is_empty() {
                0.0
            } else {
                jaccard(&l, &rt)
            };
            ScoreRecord {
                pair_id: r.pair_id.clone(),
                score,
            }
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("cannot reach scorer at {url}: {message}")]
    Connection { url: String, message: String },
    #[error("scorer at {url} timed out")]
    Timeout { url: String },
    #[error("scorer health check failed: {0}")]
    Unhealthy(String),
    #[error("scorer returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed scorer response: {0}")]
    Malformed(String),
    #[error("scorer left {} pair ids unanswered: {}", .0.len(), .0.join(", "))]
    MissingPairIds(Vec<String>),
    #[error("scorer answered pair id {0:?} more than once")]
    DuplicatePairId(String),
}

/// Anything that can score text pairs.
pub trait PairScorer: Send + Sync {
    fn score(&self, records: &[TextPairRecord]) -> Result<Vec<ScoreRecord>, ScoreError>;

    fn name(&self) -> &str;
}

/// In-process token-overlap scorer.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl PairScorer for LexicalScorer {
    fn score(&self, records: &[TextPairRecord]) -> Result<Vec<ScoreRecord>, ScoreError> {
        Ok(lexical_score(records))
    }

    fn name(&self) -> &str {
        "lexical"
    }
}

/// Checks that every request id is answered exactly once. Unknown ids are left
/// for [`apply_scores`] to report.
pub(crate) fn check_coverage(
    records: &[TextPairRecord],
    scores: &[ScoreRecord],
) -> Result<(), ScoreError> {
    let mut answered: HashMap<&str, bool> = records
        .iter()
        .map(|r| (r.pair_id.as_str(), false))
        .collect();
    for s in scores {
        match answered.get_mut(s.pair_id.as_str()) {
            None => {}
            Some(seen @ false) => *seen = true,
            Some(true) => return Err(ScoreError::DuplicatePairId(s.pair_id.clone())),
        }
    }
    let missing: Vec<String> = records
        .iter()
        .filter(|r| !answered[r.pair_id.as_str()])
        .map(|r| r.pair_id.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(ScoreError::MissingPairIds(missing))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::Correspondence;
    use crate::graph::parse_turtle;

    fn onto(prefix: &str, body: &str) -> Ontology {
        parse_turtle(
            format!("@prefix o: <http://{prefix}#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n{body}")
                .as_bytes(),
        )
        .unwrap()
    }

    fn iri(s: &str) -> Iri {
        Iri::new(s).unwrap()
    }

    fn key(s: &str, t: &str) -> CellKey {
        CellKey::new(iri(s), iri(t))
    }

    fn record(id: &str, k: &CellKey, l: &str, r: &str) -> TextPairRecord {
        TextPairRecord {
            pair_id: id.into(),
            key: k.clone(),
            left: l.into(),
            right: r.into(),
        }
    }

    #[test]
    fn multi_and_single_text() {
        let o1 = onto("a", r#"o:_1 rdfs:label "cat" , "feline" ."#);
        let o2 = onto("b", r#"o:_1 rdfs:label "Katze" ."#);
        let mut a = Alignment::new();
        a.add(iri("http://a#_1"), iri("http://b#_1"), 0.5).unwrap();

        let multi = build_pairs(
            &a,
            &o1,
            &o2,
            ExtractorKind::Set,
            SerializationMode::MultiText,
        );
        assert_eq!(multi.records.len(), 2);
        assert_eq!(multi.records[0].left, "cat");
        assert_eq!(multi.records[1].left, "feline");
        assert!(multi.records.iter().all(|r| r.right == "Katze"));

        let single = build_pairs(
            &a,
            &o1,
            &o2,
            ExtractorKind::Set,
            SerializationMode::SingleText,
        );
        assert_eq!(single.records.len(), 1);
        assert_eq!(single.records[0].left, "cat feline");
    }

    #[test]
    fn multi_text_record_count_is_product() {
        let mut body1 = String::new();
        let mut body2 = String::new();
        let mut a = Alignment::new();
        for i in 0..3 {
            body1.push_str(&format!("o:_{i} rdfs:label \"alpha{i}\" , \"beta{i}\" .\n"));
            body2.push_str(&format!(
                "o:_{i} rdfs:label \"gamma{i}\" , \"delta{i}\" .\n"
            ));
            a.add(
                iri(&format!("http://a#_{i}")),
                iri(&format!("http://b#_{i}")),
                1.0,
            )
            .unwrap();
        }
        let batch = build_pairs(
            &a,
            &onto("a", &body1),
            &onto("b", &body2),
            ExtractorKind::Set,
            SerializationMode::MultiText,
        );
        assert_eq!(batch.records.len(), 12);
        let ids: std::collections::HashSet<_> = batch.records.iter().map(|r| &r.pair_id).collect();
        assert_eq!(ids.len(), 12);
    }

    #[test]
    fn textless_correspondences_are_skipped() {
        let o1 = onto("a", r#"o:_1 rdfs:label "cat" ."#);
        let o2 = onto("b", "o:_2 a o:_3 .");
        let mut a = Alignment::new();
        a.add(iri("http://a#_1"), iri("http://b#_2"), 0.4).unwrap();
        let batch = build_pairs(
            &a,
            &o1,
            &o2,
            ExtractorKind::Set,
            SerializationMode::MultiText,
        );
        assert!(batch.records.is_empty());
        assert_eq!(batch.skipped, vec![key("http://a#_1", "http://b#_2")]);
    }

    #[test]
    fn apply_takes_maximum() {
        let k = key("http://a#x", "http://b#y");
        let a: Alignment = [Correspondence::with_key(k.clone(), 0.5).unwrap()]
            .into_iter()
            .collect();
        let records = vec![record("p0", &k, "a", "b"), record("p1", &k, "c", "d")];
        let scores = vec![
            ScoreRecord::new("p0", 0.2).unwrap(),
            ScoreRecord::new("p1", 0.9).unwrap(),
        ];
        let out = apply_scores(&a, &records, &scores);
        assert_eq!(out.alignment.confidence(&k), Some(0.9));
        assert!(out.unscored.is_empty());

        let out = apply_scores(&a, &records[..1], &[ScoreRecord::new("p0", 0.4).unwrap()]);
        assert_eq!(out.alignment.confidence(&k), Some(0.4));
    }

    #[test]
    fn apply_keeps_unscored_and_reports_unknown() {
        let k = key("http://a#x", "http://b#y");
        let a: Alignment = [Correspondence::with_key(k.clone(), 0.5).unwrap()]
            .into_iter()
            .collect();
        let out = apply_scores(&a, &[], &[ScoreRecord::new("ghost", 1.0).unwrap()]);
        assert_eq!(out.alignment, a);
        assert_eq!(out.unscored, vec![k]);
        assert_eq!(out.unknown_pair_ids, vec!["ghost".to_string()]);
    }

    #[test]
    fn lexical_scores() {
        let k = key("http://a#x", "http://b#y");
        let records = vec![
            record("p0", &k, "married couple", "married couple"),
            record("p1", &k, "cat", "dog"),
            record("p2", &k, "MarriedCouple", "married person"),
            record("p3", &k, "the", "the"),
        ];
        let s: Vec<f64> = lexical_score(&records)
            .iter()
            .map(ScoreRecord::score)
            .collect();
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 0.0);
        assert!((s[2] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s[3], 0.0);
    }

    #[test]
    fn score_record_range() {
        assert!(ScoreRecord::new("p", 1.2).is_err());
        assert!(ScoreRecord::new("p", f64::NAN).is_err());
        assert!(ScoreRecord::new("p", 0.0).is_ok());
    }

    #[test]
    fn coverage_check() {
        let k = key("http://a#x", "http://b#y");
        let records = vec![record("p0", &k, "a", "b"), record("p1", &k, "c", "d")];
        let s = |id: &str| ScoreRecord::new(id, 0.5).unwrap();
        assert!(check_coverage(&records, &[s("p1"), s("p0")]).is_ok());
        assert!(
            matches!(check_coverage(&records, &[s("p0")]), Err(ScoreError::MissingPairIds(m)) if m == ["p1"])
        );
        assert!(matches!(
            check_coverage(&records, &[s("p0"), s("p0"), s("p1")]),
            Err(ScoreError::DuplicatePairId(_))
        ));
        assert!(check_coverage(&records, &[s("p0"), s("p1"), s("p9")]).is_ok());
    }
}
