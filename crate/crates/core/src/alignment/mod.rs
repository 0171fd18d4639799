//! Correspondences and alignments.
//!
//! A correspondence is identified by `(source, target, relation)`; its
//! confidence is an attribute. Inserting an existing key overwrites the
//! confidence, which is how filters rescore candidates in place.

mod xml;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::graph::{InvalidIri, Iri};

pub use xml::{parse_alignment_xml, serialize_alignment_xml};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Relation {
    #[default]
    Equivalence,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Equivalence => "=",
        }
    }

    pub fn parse(s: &str) -> Result<Self, AlignmentError> {
        match s.trim() {
            "=" => Ok(Relation::Equivalence),
            other => Err(AlignmentError::UnsupportedRelation(other.to_string())),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Identity of a correspondence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub source: Iri,
    pub target: Iri,
    pub relation: Relation,
}

impl CellKey {
    pub fn new(source: Iri, target: Iri) -> Self {
        CellKey {
            source,
            target,
            relation: Relation::Equivalence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correspondence {
    key: CellKey,
    confidence: f64,
}

impl Correspondence {
    pub fn new(source: Iri, target: Iri, confidence: f64) -> Result<Self, AlignmentError> {
        Self::with_key(CellKey::new(source, target), confidence)
    }

    pub fn with_key(key: CellKey, confidence: f64) -> Result<Self, AlignmentError> {
        check_confidence(confidence)?;
        Ok(Correspondence { key, confidence })
    }

    pub fn key(&self) -> &CellKey {
        &self.key
    }

    pub fn source(&self) -> &Iri {
        &self.key.source
    }

    pub fn target(&self) -> &Iri {
        &self.key.target
    }

    pub fn relation(&self) -> Relation {
        self.key.relation
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }
}

fn check_confidence(confidence: f64) -> Result<(), AlignmentError> {
    if (0.0..=1.0).contains(&confidence) {
        Ok(())
    } else {
        Err(AlignmentError::ConfidenceOutOfRange(confidence))
    }
}

/// A set of correspondences, iterated in `(source, target)` order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Alignment {
    cells: BTreeMap<CellKey, f64>,
}

impl Alignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Inserts or replaces (last write wins).
    pub fn insert(&mut self, c: Correspondence) {
        self.cells.insert(c.key, c.confidence);
    }

    /// Convenience insert for equivalence cells.
    pub fn add(&mut self, source: Iri, target: Iri, confidence: f64) -> Result<(), AlignmentError> {
        self.insert(Correspondence::new(source, target, confidence)?);
        Ok(())
    }

    /// Overwrites the confidence of an existing cell. Returns false if the key is absent.
    pub fn set_confidence(
        &mut self,
        key: &CellKey,
        confidence: f64,
    ) -> Result<bool, AlignmentError> {
        check_confidence(confidence)?;
        Ok(match self.cells.get_mut(key) {
            Some(slot) => {
                *slot = confidence;
                true
            }
            None => false,
        })
    }

    pub fn confidence(&self, key: &CellKey) -> Option<f64> {
        self.cells.get(key).copied()
    }

    pub fn contains(&self, key: &CellKey) -> bool {
        self.cells.contains_key(key)
    }

    pub fn contains_pair(&self, source: &Iri, target: &Iri) -> bool {
        // Keys own their IRIs, so probing needs an owned key.
        self.cells
            .contains_key(&CellKey::new(source.clone(), target.clone()))
    }

    pub fn remove(&mut self, key: &CellKey) -> Option<f64> {
        self.cells.remove(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &CellKey> {
        self.cells.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = Correspondence> + '_ {
        self.cells.iter().map(|(k, &confidence)| Correspondence {
            key: k.clone(),
            confidence,
        })
    }

    /// Borrowing iteration over `(key, confidence)`.
    pub fn entries(&self) -> impl Iterator<Item = (&CellKey, f64)> {
        self.cells.iter().map(|(k, &c)| (k, c))
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&CellKey, f64) -> bool) {
        self.cells.retain(|k, c| keep(k, *c));
    }

    /// Cells whose key satisfies `keep`, as a new alignment.
    pub fn filtered(&self, mut keep: impl FnMut(&CellKey, f64) -> bool) -> Alignment {
        Alignment {
            cells: self
                .cells
                .iter()
                .filter(|(k, c)| keep(k, **c))
                .map(|(k, c)| (k.clone(), *c))
                .collect(),
        }
    }

    /// Union by key; on collision the confidence from `other` wins.
    pub fn merge(&self, other: &Alignment) -> Alignment {
        let mut out = self.clone();
        for (k, c) in &other.cells {
            out.cells.insert(k.clone(), *c);
        }
        out
    }

    /// True iff no source and no target appears in two cells.
    pub fn is_one_to_one(&self) -> bool {
        let mut sources = HashSet::new();
        let mut targets = HashSet::new();
        self.cells
            .keys()
            .all(|k| sources.insert(&k.source) && targets.insert(&k.target))
    }

    /// Every IRI appearing on either side of some cell.
    pub fn endpoints(&self) -> HashSet<&Iri> {
        self.cells
            .keys()
            .flat_map(|k| [&k.source, &k.target])
            .collect()
    }

    pub fn load(path: &Path) -> Result<Alignment, AlignmentError> {
        let bytes = std::fs::read(path)
            .map_err(|e| AlignmentError::Io(format!("{}: {e}", path.display())))?;
        parse_alignment_xml(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<(), AlignmentError> {
        std::fs::write(path, serialize_alignment_xml(self))
            .map_err(|e| AlignmentError::Io(format!("{}: {e}", path.display())))
    }
}

impl FromIterator<Correspondence> for Alignment {
    fn from_iter<T: IntoIterator<Item = Correspondence>>(iter: T) -> Self {
        let mut a = Alignment::new();
        for c in iter {
            a.insert(c);
        }
        a
    }
}

impl Extend<Correspondence> for Alignment {
    fn extend<T: IntoIterator<Item = Correspondence>>(&mut self, iter: T) {
        for c in iter {
            self.insert(c);
        }
    }
}

/// Union of two alignments; `b` wins on key collisions.
pub fn merge(a: &Alignment, b: &Alignment) -> Alignment {
    a.merge(b)
}

pub fn is_one_to_one(a: &Alignment) -> bool {
    a.is_one_to_one()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignmentError {
    #[error("malformed alignment XML: {0}")]
    Xml(String),
    #[error("measure {0:?} is not a number in [0, 1]")]
    InvalidMeasure(String),
    #[error("confidence {0} outside [0, 1]")]
    ConfidenceOutOfRange(f64),
    #[error("unsupported relation {0:?} (only \"=\" is modeled)")]
    UnsupportedRelation(String),
    #[error("cell is missing {0}")]
    MissingEntity(&'static str),
    #[error(transparent)]
    Iri(#[from] InvalidIri),
    #[error("io error: {0}")]
    Io(String),
}
