//! Textual descriptions of resources.
//!
//! Three extractors return progressively fewer strings for the same resource:
//!
//! * [`ExtractorKind::Set`]: fragment, label-like literals, the longest literal,
//!   and label-like literals of resources reached through annotation properties,
//!   deduplicated by normalized form.
//! * [`ExtractorKind::ShortAndLong`]: the same pool split into short texts
//!   (fragment, label, name, pref/alt/hidden label) and long texts (everything
//!   else); within each group a text contained in another member is dropped.
//! * [`ExtractorKind::ForTransformers`]: the same containment filter applied
//!   across the whole pool.
//!
//! Returned strings are the original literals, not their normalized forms.

use std::fmt;
use std::str::FromStr;

use crate::graph::{Iri, Ontology, Subject, Term};

/// Insertion-ordered strings, unique by normalized form, none normalizing to "".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextSet {
    texts: Vec<String>,
    normalized: Vec<String>,
}

impl TextSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `text` unless it normalizes to "" or duplicates an existing member.
    pub fn insert(&mut self, text: impl Into<String>) -> bool {
        let text = text.into();
        let norm = normalize(&text);
        if norm.is_empty() || self.normalized.contains(&norm) {
            return false;
        }
        self.texts.push(text);
        self.normalized.push(norm);
        true
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.texts.iter().map(String::as_str)
    }

    pub fn normalized(&self) -> impl Iterator<Item = &str> {
        self.normalized.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.texts
    }

    /// Members joined by a single space.
    pub fn joined(&self) -> String {
        self.texts.join(" ")
    }
}

impl<S: Into<String>> FromIterator<S> for TextSet {
    fn from_iter<T: IntoIterator<Item = S>>(iter: T) -> Self {
        let mut set = TextSet::new();
        for s in iter {
            set.insert(s);
        }
        set
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExtractorKind {
    Set,
    ShortAndLong,
    #[default]
    ForTransformers,
}

impl ExtractorKind {
    pub fn extract(self, o: &Ontology, r: &Iri) -> TextSet {
        match self {
            ExtractorKind::Set => extract_set(o, r),
            ExtractorKind::ShortAndLong => extract_short_and_long(o, r),
            ExtractorKind::ForTransformers => extract_for_transformers(o, r),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExtractorKind::Set => "set",
            ExtractorKind::ShortAndLong => "short-long",
            ExtractorKind::ForTransformers => "transformers",
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExtractorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "set" => Ok(ExtractorKind::Set),
            "short-long" | "short-and-long" => Ok(ExtractorKind::ShortAndLong),
            "transformers" | "for-transformers" => Ok(ExtractorKind::ForTransformers),
            other => Err(format!(
                "unknown extractor {other:?} (expected set, short-long or transformers)"
            )),
        }
    }
}

fn is_upper(c: char) -> bool {
    // Characters whose lowercase is themselves carry no case boundary.
    c.is_uppercase() && c.to_lowercase().next() != Some(c)
}

fn is_lower(c: char) -> bool {
    c.is_lowercase()
}

/// Splits camelCase and letter/digit boundaries, lowercases, maps every
/// non-alphanumeric character to a space, collapses whitespace and trims.
pub fn normalize(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut split = String::with_capacity(s.len() + 8);
    for (i, &c) in chars.iter().enumerate() {
        if i > 0 {
            let prev = chars[i - 1];
            let next = chars.get(i + 1).copied();
            let camel =
                is_upper(c) && (is_lower(prev) || (is_upper(prev) && next.is_some_and(is_lower)));
            let digit_letter = (prev.is_numeric() && c.is_alphabetic())
                || (prev.is_alphabetic() && c.is_numeric());
            if camel || digit_letter {
                split.push(' ');
            }
        }
        split.push(c);
    }
    let lowered = split.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let mut pending_space = false;
    for c in lowered.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

const LABEL_FRAGMENTS: [&str; 8] = [
    "label",
    "name",
    "comment",
    "description",
    "abstract",
    "preflabel",
    "altlabel",
    "hiddenlabel",
];

const SHORT_FRAGMENTS: [&str; 5] = ["label", "name", "preflabel", "altlabel", "hiddenlabel"];

fn fragment_lower(predicate: &Iri) -> String {
    predicate.fragment().to_lowercase()
}

/// True if the predicate's fragment names a label-like property, or the
/// predicate is a declared annotation property.
pub fn label_like(predicate: &Iri, o: &Ontology) -> bool {
    LABEL_FRAGMENTS.contains(&fragment_lower(predicate).as_str())
        || o.is_annotation_property(predicate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Group {
    Short,
    Long,
}

/// Candidate pool shared by all extractors: deduplicated texts with their group.
fn pool(o: &Ontology, r: &Iri) -> Vec<(String, Group)> {
    let mut seen = TextSet::new();
    let mut out = Vec::new();
    let mut push = |text: &str, group: Group| {
        if seen.insert(text) {
            out.push((text.to_string(), group));
        }
    };

    let frag = r.fragment();
    let norm_frag = normalize(frag);
    if !norm_frag.is_empty() && !norm_frag.chars().all(|c| c.is_numeric() || c == ' ') {
        push(frag, Group::Short);
    }

    let mut longest: Option<&str> = None;
    for t in o.with_iri_subject(r) {
        let Term::Literal(lit) = &t.object else {
            continue;
        };
        if label_like(&t.predicate, o) {
            let group = if SHORT_FRAGMENTS.contains(&fragment_lower(&t.predicate).as_str()) {
                Group::Short
            } else {
                Group::Long
            };
            push(lit.lexical(), group);
        }
        if longest.is_none_or(|l| lit.lexical().chars().count() > l.chars().count()) {
            longest = Some(lit.lexical());
        }
    }
    if let Some(l) = longest {
        push(l, Group::Long);
    }

    for t in o.with_iri_subject(r) {
        if !o.is_annotation_property(&t.predicate) {
            continue;
        }
        let Some(node) = t.object.as_subject() else {
            continue;
        };
        if node == Subject::Iri(r.clone()) {
            continue;
        }
        for inner in o.with_subject(&node) {
            if let Term::Literal(lit) = &inner.object {
                if label_like(&inner.predicate, o) {
                    push(lit.lexical(), Group::Long);
                }
            }
        }
    }
    out
}

/// The largest text set: every candidate text, deduplicated by normalized form.
pub fn extract_set(o: &Ontology, r: &Iri) -> TextSet {
    pool(o, r).into_iter().map(|(t, _)| t).collect()
}

/// Drops, within each of the short and long groups, texts contained in another member.
pub fn extract_short_and_long(o: &Ontology, r: &Iri) -> TextSet {
    let pool = pool(o, r);
    let norms: Vec<String> = pool.iter().map(|(t, _)| normalize(t)).collect();
    pool.iter()
        .enumerate()
        .filter(|&(i, (_, group))| {
            !pool
                .iter()
                .enumerate()
                .any(|(j, (_, g))| i != j && g == group && contains_words(&norms[j], &norms[i]))
        })
        .map(|(_, (t, _))| t.clone())
        .collect()
}

/// Drops texts contained in any other member of the pool.
pub fn extract_for_transformers(o: &Ontology, r: &Iri) -> TextSet {
    let pool = pool(o, r);
    let norms: Vec<String> = pool.iter().map(|(t, _)| normalize(t)).collect();
    pool.iter()
        .enumerate()
        .filter(|&(i, _)| !(0..norms.len()).any(|j| i != j && contains_words(&norms[j], &norms[i])))
        .map(|(_, (t, _))| t.clone())
        .collect()
}

/// Whether normalized `needle` occurs in normalized `haystack` on token boundaries.
pub fn contains_words(haystack: &str, needle: &str) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    format!(" {haystack} ").contains(&format!(" {needle} "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_turtle;
    use proptest::prelude::*;

    const PREFIXES: &str = r#"@prefix ex: <http://a/onto#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix skos: <http://www.w3.org/2004/02/skos/core#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
"#;

    fn onto(body: &str) -> Ontology {
        parse_turtle(format!("{PREFIXES}{body}").as_bytes()).unwrap()
    }

    fn ex(local: &str) -> Iri {
        Iri::new(format!("http://a/onto#{local}")).unwrap()
    }

    fn texts(set: &TextSet) -> Vec<&str> {
        set.iter().collect()
    }

    #[test]
    fn normalize_rules() {
        assert_eq!(normalize("MarriedCouple"), "married couple");
        assert_eq!(normalize("has_Part-01"), "has part 01");
        assert_eq!(normalize("  cat "), "cat");
        assert_eq!(normalize("HTMLParser"), "html parser");
        assert_eq!(normalize("part2of3"), "part 2 of 3");
        assert_eq!(normalize("Ünïcödé—Wörd"), "ünïcödé wörd");
        assert_eq!(normalize("..."), "");
    }

    #[test]
    fn label_like_predicates() {
        let o = onto("ex:syn a owl:AnnotationProperty .");
        let iri = |s: &str| Iri::new(s).unwrap();
        assert!(label_like(
            &iri("http://www.w3.org/2000/01/rdf-schema#label"),
            &o
        ));
        assert!(label_like(
            &iri("http://www.w3.org/2000/01/rdf-schema#comment"),
            &o
        ));
        assert!(label_like(
            &iri("http://www.w3.org/2004/02/skos/core#prefLabel"),
            &o
        ));
        assert!(label_like(
            &iri("http://www.w3.org/2004/02/skos/core#hiddenLabel"),
            &o
        ));
        assert!(label_like(&iri("http://dbpedia.org/ontology/abstract"), &o));
        assert!(!label_like(
            &iri("http://www.w3.org/1999/02/22-rdf-syntax-ns#type"),
            &o
        ));
        assert!(label_like(&ex("syn"), &o));
    }

    #[test]
    fn set_dedups_label_against_fragment() {
        let o = onto(r#"ex:Cat rdfs:label "cat" ."#);
        assert_eq!(texts(&extract_set(&o, &ex("Cat"))), ["Cat"]);
    }

    #[test]
    fn set_keeps_distinct_label_and_comment() {
        let o = onto(r#"ex:_1 rdfs:label "dog" ; rdfs:comment "A domestic animal" ."#);
        assert_eq!(
            texts(&extract_set(&o, &ex("_1"))),
            ["dog", "A domestic animal"]
        );
    }

    #[test]
    fn set_follows_annotation_properties_one_level() {
        let o = onto(
            r#"ex:related a owl:AnnotationProperty .
               ex:Dog rdfs:label "dog" ; ex:related ex:Hound .
               ex:Hound skos:prefLabel "hound" ; ex:related ex:Wolf .
               ex:Wolf rdfs:label "wolf" .
               ex:Cat ex:related [ skos:altLabel "feline" ] ."#,
        );
        let dog = extract_set(&o, &ex("Dog"));
        assert!(dog.iter().any(|t| t == "hound"));
        assert!(!dog.iter().any(|t| t == "wolf"));
        assert!(extract_set(&o, &ex("Cat")).iter().any(|t| t == "feline"));
    }

    #[test]
    fn set_adds_longest_literal_of_any_predicate() {
        let o = onto(
            r#"ex:X ex:note "a very long free text note" ; ex:code "x1" ; ex:other "same length note text ab" ."#,
        );
        let s = extract_set(&o, &ex("X"));
        assert_eq!(texts(&s), ["X", "a very long free text note"]);
    }

    #[test]
    fn numeric_fragments_are_skipped() {
        let o = parse_turtle(br#"<http://kg/resource/12345> <http://www.w3.org/2000/01/rdf-schema#label> "Berlin" ."#).unwrap();
        let s = extract_set(&o, &Iri::new("http://kg/resource/12345").unwrap());
        assert_eq!(texts(&s), ["Berlin"]);
    }

    #[test]
    fn short_and_long_containment_within_groups() {
        let o = onto(r#"ex:_1 rdfs:label "cat", "domestic cat" ."#);
        assert_eq!(
            texts(&extract_short_and_long(&o, &ex("_1"))),
            ["domestic cat"]
        );

        let o = onto(r#"ex:_1 rdfs:label "cat" ; rdfs:comment "the cat is an animal" ."#);
        assert_eq!(
            texts(&extract_short_and_long(&o, &ex("_1"))),
            ["cat", "the cat is an animal"]
        );

        let o = onto(r#"ex:_1 rdfs:label "cat" ; rdfs:comment "a dog" ."#);
        assert_eq!(
            texts(&extract_short_and_long(&o, &ex("_1"))),
            ["cat", "a dog"]
        );
    }

    #[test]
    fn for_transformers_containment_across_groups() {
        let o = onto(r#"ex:_1 rdfs:label "cat" ; rdfs:comment "the cat is an animal" ."#);
        assert_eq!(
            texts(&extract_for_transformers(&o, &ex("_1"))),
            ["the cat is an animal"]
        );
        let o = onto(r#"ex:_1 rdfs:label "cat" ."#);
        assert_eq!(texts(&extract_for_transformers(&o, &ex("_1"))), ["cat"]);
        let o = onto(r#"ex:_1 rdfs:label "cat" , "dog" ."#);
        assert_eq!(
            texts(&extract_for_transformers(&o, &ex("_1"))),
            ["cat", "dog"]
        );
    }

    #[test]
    fn containment_respects_word_boundaries() {
        let o = onto(r#"ex:_1 rdfs:label "cat" ; rdfs:comment "a category" ."#);
        assert_eq!(
            texts(&extract_for_transformers(&o, &ex("_1"))),
            ["cat", "a category"]
        );
        assert!(contains_words("the cat is", "cat"));
        assert!(!contains_words("category", "cat"));
        assert!(!contains_words("cat", "cat is"));
    }

    #[test]
    fn extractor_kind_parsing() {
        assert_eq!("set".parse::<ExtractorKind>().unwrap(), ExtractorKind::Set);
        assert_eq!(
            "short-long".parse::<ExtractorKind>().unwrap(),
            ExtractorKind::ShortAndLong
        );
        assert_eq!(
            "transformers".parse::<ExtractorKind>().unwrap(),
            ExtractorKind::ForTransformers
        );
        assert!("bogus".parse::<ExtractorKind>().is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in any::<String>()) {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once.clone());
        }

        #[test]
        fn normalize_is_idempotent_on_identifier_like_text(s in "[A-Za-z0-9_ .-]{0,30}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn extractor_ordering_and_provenance(
            labels in prop::collection::vec("[a-c]{1,3}( [a-c]{1,3}){0,3}", 0..5),
            comments in prop::collection::vec("[a-c]{1,3}( [a-c]{1,3}){0,4}", 0..3),
            local in "[A-Z][a-z]{0,4}",
        ) {
            let mut body = String::new();
            for l in &labels {
                body.push_str(&format!("ex:{local} rdfs:label \"{l}\" .\n"));
            }
            for c in &comments {
                body.push_str(&format!("ex:{local} rdfs:comment \"{c}\" .\n"));
            }
            let o = onto(&body);
            let r = ex(&local);
            let set: Vec<String> = extract_set(&o, &r).normalized().map(str::to_string).collect();
            let sl: Vec<String> = extract_short_and_long(&o, &r).normalized().map(str::to_string).collect();
            let ft: Vec<String> = extract_for_transformers(&o, &r).normalized().map(str::to_string).collect();
            prop_assert!(ft.iter().all(|t| sl.contains(t)));
            prop_assert!(sl.iter().all(|t| set.contains(t)));
            let originals: Vec<&str> = labels.iter().chain(&comments).map(String::as_str).chain([local.as_str()]).collect();
            for t in extract_set(&o, &r).iter() {
                prop_assert!(originals.contains(&t));
                prop_assert!(!normalize(t).is_empty());
            }
        }
    }
}
