//! Training data: reference sampling and negative generation.
//!
//! Four negative strategies are provided. The random ones draw pairs from
//! the matchable resources of both ontologies; [`add_negatives_via_matcher`]
//! labels a candidate alignment against a (possibly partial) reference using
//! the one-to-one assumption. All draws use a seeded ChaCha8 generator.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::{Alignment, CellKey, Correspondence};
use crate::graph::{Iri, Ontology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    /// `1` for positives, `0` for negatives.
    pub fn as_int(self) -> u8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorrespondence {
    pub correspondence: Correspondence,
    pub label: Label,
}

impl LabeledCorrespondence {
    fn new(correspondence: Correspondence, label: Label) -> Self {
        LabeledCorrespondence {
            correspondence,
            label,
        }
    }

    pub fn key(&self) -> &CellKey {
        self.correspondence.key()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    pub fraction: f64,
    pub seed: u64,
    /// Overrides `fraction` when set.
    pub absolute_count: Option<usize>,
}

impl SamplingConfig {
    pub fn new(fraction: f64, seed: u64) -> Result<Self, SamplingError> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(SamplingError::InvalidFraction(fraction));
        }
        Ok(SamplingConfig {
            fraction,
            seed,
            absolute_count: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("cannot sample from an empty reference")]
    EmptyReference,
    #[error("sampling fraction {0} outside (0, 1]")]
    InvalidFraction(f64),
    #[error("requested {requested} cells but the reference has {available}")]
    TooManyCells { requested: usize, available: usize },
    #[error(
        "requested {requested} negatives but only {available} distinct non-positive pairs exist"
    )]
    NotEnoughPairs { requested: usize, available: usize },
    #[error("negative share {0} must be a finite non-negative number")]
    InvalidShare(f64),
    #[error("no partner for {0} distinct from its positive correspondences")]
    OntologyTooSmall(String),
}

/// `x` rounded half up, tolerating representation error just below the half.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random subset of `round(fraction * |reference|)` cells (at least one).
pub fn sample_reference(
    reference: &Alignment,
    cfg: &SamplingConfig,
) -> Result<Alignment, SamplingError> {
    if reference.is_empty() {
        return Err(SamplingError::EmptyReference);
    }
    if !(cfg.fraction > 0.0 && cfg.fraction <= 1.0) {
        return Err(SamplingError::InvalidFraction(cfg.fraction));
    }
    let n = match cfg.absolute_count {
        Some(k) if k > reference.len() => {
            return Err(SamplingError::TooManyCells {
                requested: k,
                available: reference.len(),
            })
        }
        Some(k) => k,
        None => round_half_up(cfg.fraction * reference.len() as f64).clamp(1, reference.len()),
    };
    let cells: Vec<Correspondence> = reference.iter().collect();
    let mut rng = rng(cfg.seed);
    let mut picked = index::sample(&mut rng, cells.len(), n).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| cells[i].clone()).collect())
}

fn positives(alignment: &Alignment) -> Vec<LabeledCorrespondence> {
    alignment
        .iter()
        .map(|c| LabeledCorrespondence::new(c, Label::Positive))
        .collect()
}

fn negative(source: Iri, target: Iri) -> LabeledCorrespondence {
    let c = Correspondence::with_key(CellKey::new(source, target), 0.0)
        .expect("0 is a valid confidence");
    LabeledCorrespondence::new(c, Label::Negative)
}

/// Positives plus exactly `count` random negatives from `O1 x O2`, none of them positive.
pub fn add_negatives_random_absolute(
    positives_in: &Alignment,
    o1: &Ontology,
    o2: &Ontology,
    count: usize,
    seed: u64,
) -> Result<Vec<LabeledCorrespondence>, SamplingError> {
    let left = o1.resources();
    let right = o2.resources();
    random_negatives(positives_in, &left, &right, count, seed)
}

fn random_negatives(
    positives_in: &Alignment,
    left: &[Iri],
    right: &[Iri],
    count: usize,
    seed: u64,
) -> Result<Vec<LabeledCorrespondence>, SamplingError> {
    let mut out = positives(positives_in);
    if count == 0 {
        return Ok(out);
    }
    let total = left.len() * right.len();
    let blocked = positives_in
        .keys()
        .filter(|k| left.binary_search(&k.source).is_ok() && right.binary_search(&k.target).is_ok())
        .count();
    let available = total - blocked;
    if count > available {
        return Err(SamplingError::NotEnoughPairs {
            requested: count,
            available,
        });
    }
    let mut rng = rng(seed);
    let is_positive = |i: usize, j: usize| positives_in.contains_pair(&left[i], &right[j]);
    if count * 2 <= available {
        // Sparse request: rejection sampling over the grid.
        let mut chosen = HashSet::with_capacity(count);
        while chosen.len() < count {
            let i = rng.random_range(0..left.len());
            let j = rng.random_range(0..right.len());
            if !is_positive(i, j) && chosen.insert((i, j)) {
                out.push(negative(left[i].clone(), right[j].clone()));
            }
        }
    } else {
        let free: Vec<(usize, usize)> = (0..left.len())
            .flat_map(|i| (0..right.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| !is_positive(i, j))
            .collect();
        for k in index::sample(&mut rng, free.len(), count) {
            let (i, j) = free[k];
            out.push(negative(left[i].clone(), right[j].clone()));
        }
    }
    Ok(out)
}

/// Positives plus `round(share * |positives|)` random negatives.
pub fn add_negatives_random_share(
    positives_in: &Alignment,
    o1: &Ontology,
    o2: &Ontology,
    share: f64,
    seed: u64,
) -> Result<Vec<LabeledCorrespondence>, SamplingError> {
    if !(share.is_finite() && share >= 0.0) {
        return Err(SamplingError::InvalidShare(share));
    }
    let count = round_half_up(share * positives_in.len() as f64);
    add_negatives_random_absolute(positives_in, o1, o2, count, seed)
}

/// For each positive `(e1, e2)`: one negative `(e1, e2')` and one `(e1', e2)`
/// with random replacements that collide with no positive and no earlier negative.
pub fn add_negatives_one_one(
    positives_in: &Alignment,
    o1: &Ontology,
    o2: &Ontology,
    seed: u64,
) -> Result<Vec<LabeledCorrespondence>, SamplingError> {
    let left = o1.resources();
    let right = o2.resources();
    let mut out = positives(positives_in);
    let mut emitted: HashSet<CellKey> = HashSet::new();
    let mut rng = rng(seed);
    for key in positives_in.keys() {
        let usable = |k: &CellKey, emitted: &HashSet<CellKey>| {
            !positives_in.contains(k) && !emitted.contains(k)
        };

        let targets: Vec<&Iri> = right
            .iter()
            .filter(|t| {
                **t != key.target
                    && usable(&CellKey::new(key.source.clone(), (*t).clone()), &emitted)
            })
            .collect();
        if targets.is_empty() {
            return Err(SamplingError::OntologyTooSmall(key.source.to_string()));
        }
        let t = targets[rng.random_range(0..targets.len())].clone();
        emitted.insert(CellKey::new(key.source.clone(), t.clone()));
        out.push(negative(key.source.clone(), t));

        let sources: Vec<&Iri> = left
            .iter()
            .filter(|s| {
                **s != key.source
                    && usable(&CellKey::new((*s).clone(), key.target.clone()), &emitted)
            })
            .collect();
        if sources.is_empty() {
            return Err(SamplingError::OntologyTooSmall(key.target.to_string()));
        }
        let s = sources[rng.random_range(0..sources.len())].clone();
        emitted.insert(CellKey::new(s.clone(), key.target.clone()));
        out.push(negative(s, key.target.clone()));
    }
    Ok(out)
}

/// How a candidate is judged against a partial reference under the one-to-one assumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgement {
    /// The candidate is a reference cell.
    Correct,
    /// Exactly one endpoint occurs in the reference.
    Wrong,
    /// The reference says nothing about the candidate.
    Undecidable,
}

/// Judges candidates against a possibly incomplete reference.
pub struct PartialReference<'a> {
    reference: &'a Alignment,
    endpoints: HashSet<&'a Iri>,
}

impl<'a> PartialReference<'a> {
    pub fn new(reference: &'a Alignment) -> Self {
        PartialReference {
            reference,
            endpoints: reference.endpoints(),
        }
    }

    pub fn judge(&self, key: &CellKey) -> Judgement {
        if self.reference.contains(key) {
            return Judgement::Correct;
        }
        match (
            self.endpoints.contains(&key.source),
            self.endpoints.contains(&key.target),
        ) {
            (true, false) | (false, true) => Judgement::Wrong,
            _ => Judgement::Undecidable,
        }
    }
}

/// Labels candidates: reference cells are positive, candidates sharing exactly
/// one endpoint with the reference are negative, all others are left out.
pub fn add_negatives_via_matcher(
    candidates: &Alignment,
    sampled_reference: &Alignment,
) -> Vec<LabeledCorrespondence> {
    let judge = PartialReference::new(sampled_reference);
    candidates
        .iter()
        .filter_map(|c| match judge.judge(c.key()) {
            Judgement::Correct => Some(LabeledCorrespondence::new(c, Label::Positive)),
            Judgement::Wrong => Some(LabeledCorrespondence::new(c, Label::Negative)),
            Judgement::Undecidable => None,
        })
        .collect()
}
