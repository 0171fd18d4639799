//! RDF graph model: terms, triples and an indexed, immutable ontology.
//!
//! Ontologies are loaded from N-Triples or a Turtle subset. Blank nodes get
//! document-scoped ids (`b0`, `b1`, ...) in order of first appearance, so the
//! same bytes always produce the same graph.

mod ntriples;
mod turtle;
pub mod vocab;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

pub use ntriples::{parse_ntriples, write_ntriples};
pub use turtle::{parse_turtle, write_turtle};

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, InvalidIri> {
        let value = value.into();
        if value.is_empty() || !value.contains(':') {
            return Err(InvalidIri(value));
        }
        Ok(Iri(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Local name: text after the last `#`, else after the last `/`, else the whole IRI.
    pub fn fragment(&self) -> &str {
        fragment(&self.0)
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid IRI {0:?}: must be non-empty and contain a scheme separator")]
pub struct InvalidIri(pub String);

/// Substring after the last `#`, else after the last `/`, else the input.
///
/// The scheme colon is never a separator, so `urn:x` maps to itself.
pub fn fragment(iri: &str) -> &str {
    if let Some(pos) = iri.rfind('#') {
        &iri[pos + 1..]
    } else if let Some(pos) = iri.rfind('/') {
        &iri[pos + 1..]
    } else {
        iri
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlankNode(String);

impl BlankNode {
    pub(crate) fn new(id: impl Into<String>) -> Self {
        BlankNode(id.into())
    }

    pub fn id(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlankNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "_:{}", self.0)
    }
}

/// A literal; language tag and datatype are mutually exclusive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    lang: Option<String>,
    datatype: Option<Iri>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            lang: None,
            datatype: None,
        }
    }

    pub fn lang_tagged(lexical: impl Into<String>, lang: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            lang: Some(lang.into()),
            datatype: None,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        Literal {
            lexical: lexical.into(),
            lang: None,
            datatype: Some(datatype),
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn lang(&self) -> Option<&str> {
        self.lang.as_deref()
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Iri(Iri),
    Blank(BlankNode),
}

impl Subject {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Subject::Iri(iri) => Some(iri),
            Subject::Blank(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Blank(BlankNode),
    Literal(Literal),
}

impl Term {
    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            _ => None,
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            _ => None,
        }
    }

    /// The term as a subject, if it is a resource (IRI or blank node).
    pub fn as_subject(&self) -> Option<Subject> {
        match self {
            Term::Iri(iri) => Some(Subject::Iri(iri.clone())),
            Term::Blank(b) => Some(Subject::Blank(b.clone())),
            Term::Literal(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Subject,
    pub predicate: Iri,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Subject, predicate: Iri, object: Term) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }
}

/// Immutable triple store with subject and predicate indexes.
///
/// Triples keep their first-seen document order; duplicates are dropped.
#[derive(Debug, Clone, Default)]
pub struct Ontology {
    triples: Vec<Triple>,
    by_subject: HashMap<Subject, Vec<usize>>,
    by_predicate: HashMap<Iri, Vec<usize>>,
    annotation_properties: BTreeSet<Iri>,
}

impl Ontology {
    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let mut seen = HashSet::new();
        let mut store = Vec::new();
        for t in triples {
            if seen.insert(t.clone()) {
                store.push(t);
            }
        }
        let mut by_subject: HashMap<Subject, Vec<usize>> = HashMap::new();
        let mut by_predicate: HashMap<Iri, Vec<usize>> = HashMap::new();
        let mut annotation_properties = BTreeSet::new();
        for (i, t) in store.iter().enumerate() {
            by_subject.entry(t.subject.clone()).or_default().push(i);
            by_predicate.entry(t.predicate.clone()).or_default().push(i);
            if t.predicate.as_str() == vocab::RDF_TYPE
                && t.object.as_iri().map(Iri::as_str) == Some(vocab::OWL_ANNOTATION_PROPERTY)
            {
                if let Subject::Iri(p) = &t.subject {
                    annotation_properties.insert(p.clone());
                }
            }
        }
        Ontology {
            triples: store,
            by_subject,
            by_predicate,
            annotation_properties,
        }
    }

    /// Parses a file, choosing the syntax by extension (`.nt` is N-Triples, anything else Turtle).
    pub fn load(path: &Path) -> Result<Self, LoadError> {
        let bytes = std::fs::read(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let parsed = match path.extension().and_then(|e| e.to_str()) {
            Some("nt") => parse_ntriples(&bytes),
            _ => parse_turtle(&bytes),
        };
        parsed.map_err(|source| LoadError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Triples with the given subject, in document order.
    pub fn with_subject<'a>(&'a self, subject: &Subject) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_subject
            .get(subject)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn with_iri_subject<'a>(&'a self, iri: &Iri) -> impl Iterator<Item = &'a Triple> + 'a {
        // Cloning into a Subject key is cheap relative to the lookups it serves.
        let key = Subject::Iri(iri.clone());
        self.by_subject
            .get(&key)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn with_predicate<'a>(&'a self, predicate: &Iri) -> impl Iterator<Item = &'a Triple> + 'a {
        self.by_predicate
            .get(predicate)
            .into_iter()
            .flatten()
            .map(move |&i| &self.triples[i])
    }

    pub fn predicates(&self) -> impl Iterator<Item = &Iri> {
        self.by_predicate.keys()
    }

    /// Subjects of `(p, rdf:type, owl:AnnotationProperty)` declarations.
    pub fn annotation_properties(&self) -> &BTreeSet<Iri> {
        &self.annotation_properties
    }

    pub fn is_annotation_property(&self, p: &Iri) -> bool {
        self.annotation_properties.contains(p)
    }

    /// Every IRI that is the subject of a triple and not in a vocabulary namespace, sorted.
    pub fn resources(&self) -> Vec<Iri> {
        let mut out: Vec<Iri> = self
            .by_subject
            .keys()
            .filter_map(Subject::as_iri)
            .filter(|iri| !vocab::is_vocabulary(iri.as_str()))
            .cloned()
            .collect();
        out.sort();
        out
    }
}

/// Declared annotation properties of an ontology.
pub fn annotation_properties(o: &Ontology) -> BTreeSet<Iri> {
    o.annotation_properties().clone()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unknown prefix {prefix:?}")]
    UnknownPrefix { line: usize, prefix: String },
    #[error("invalid UTF-8 at line {line}")]
    InvalidUtf8 { line: usize },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::UnknownPrefix { line, .. }
            | ParseError::InvalidUtf8 { line } => *line,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

pub(crate) fn decode_utf8(input: &[u8]) -> Result<&str, ParseError> {
    std::str::from_utf8(input).map_err(|e| {
        let line = input[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
            + 1;
        ParseError::InvalidUtf8 { line }
    })
}

/// Assigns `b0`, `b1`, ... to blank node labels in order of first appearance.
#[derive(Default)]
pub(crate) struct BlankNodeScope {
    labels: HashMap<String, BlankNode>,
    next: usize,
}

impl BlankNodeScope {
    pub(crate) fn labelled(&mut self, label: &str) -> BlankNode {
        if let Some(b) = self.labels.get(label) {
            return b.clone();
        }
        let b = self.fresh();
        self.labels.insert(label.to_string(), b.clone());
        b
    }

    pub(crate) fn fresh(&mut self) -> BlankNode {
        let b = BlankNode::new(format!("b{}", self.next));
        self.next += 1;
        b
    }
}
