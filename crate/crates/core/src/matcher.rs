//! High-recall candidate generation.
//!
//! Every cross-ontology pair of resources that shares at least one
//! non-trivial token becomes a candidate, with the Jaccard similarity of the
//! two token sets as its confidence. Pairs are found through an inverted
//! token index, so the cost is proportional to the number of shared tokens
//! rather than `|O1| x |O2|`.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;

use crate::alignment::{Alignment, CellKey, Correspondence};
use crate::graph::{Iri, Ontology};
use crate::text::{normalize, ExtractorKind};

/// The 25 most frequent English function words.
pub const STOPWORDS: [&str; 25] = [
    "the", "of", "and", "a", "to", "in", "is", "you", "that", "it", "he", "was", "for", "on",
    "are", "as", "with", "his", "they", "i", "at", "be", "this", "have", "from",
];

pub type TokenSet = BTreeSet<String>;

/// Normalized words minus stopwords and single-character tokens.
pub fn tokenize(s: &str) -> TokenSet {
    normalize(s)
        .split(' ')
        .filter(|t| t.chars().count() > 1 && !STOPWORDS.contains(t))
        .map(str::to_string)
        .collect()
}

/// Union of the tokens of every text the extractor returns for `r`.
pub fn resource_tokens(o: &Ontology, r: &Iri, extractor: ExtractorKind) -> TokenSet {
    extractor.extract(o, r).iter().flat_map(tokenize).collect()
}

pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Inverted index from token to the resources carrying it.
#[derive(Debug, Default)]
pub struct TokenIndex {
    postings: HashMap<String, Vec<usize>>,
    resources: Vec<(Iri, TokenSet)>,
}

impl TokenIndex {
    pub fn build(o: &Ontology, extractor: ExtractorKind) -> Self {
        let mut index = TokenIndex::default();
        for r in o.resources() {
            let tokens = resource_tokens(o, &r, extractor);
            index.insert(r, tokens);
        }
        index
    }

    pub fn insert(&mut self, resource: Iri, tokens: TokenSet) {
        let id = self.resources.len();
        for t in &tokens {
            debug_assert!(!t.is_empty() && !STOPWORDS.contains(&t.as_str()));
            self.postings.entry(t.clone()).or_default().push(id);
        }
        self.resources.push((resource, tokens));
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    pub fn resources(&self) -> impl Iterator<Item = (&Iri, &TokenSet)> {
        self.resources.iter().map(|(r, t)| (r, t))
    }

    /// Resources sharing a token with `tokens`, as sorted ids.
    fn probe(&self, tokens: &TokenSet) -> Vec<usize> {
        let mut hits: Vec<usize> = tokens
            .iter()
            .filter_map(|t| self.postings.get(t))
            .flatten()
            .copied()
            .collect();
        hits.sort_unstable();
        hits.dedup();
        hits
    }

    /// Resources whose token set intersects `tokens`.
    pub fn lookup(&self, tokens: &TokenSet) -> Vec<(&Iri, &TokenSet)> {
        self.probe(tokens)
            .into_iter()
            .map(|id| {
                let (r, t) = &self.resources[id];
                (r, t)
            })
            .collect()
    }
}

/// Candidate alignment of all token-sharing pairs, scored by Jaccard similarity.
pub fn high_recall_match(o1: &Ontology, o2: &Ontology, extractor: ExtractorKind) -> Alignment {
    let left = TokenIndex::build(o1, extractor);
    let right = TokenIndex::build(o2, extractor);
    match_indexes(&left, &right)
}

/// Probes `right` with every resource of `left`.
pub fn match_indexes(left: &TokenIndex, right: &TokenIndex) -> Alignment {
    let cells: Vec<Correspondence> = left
        .resources
        .par_iter()
        .flat_map_iter(|(source, tokens)| {
            right
                .lookup(tokens)
                .into_iter()
                .map(move |(target, other)| {
                    Correspondence::with_key(
                        CellKey::new(source.clone(), target.clone()),
                        jaccard(tokens, other),
                    )
                    .expect("jaccard lies in [0, 1]")
                })
        })
        .collect();
    cells.into_iter().collect()
}
