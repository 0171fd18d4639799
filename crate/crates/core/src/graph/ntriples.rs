//! N-Triples: one `<s> <p> <o> .` statement per line.

use std::fmt::Write as _;

use super::turtle::Cursor;
use super::{
    decode_utf8, BlankNodeScope, Iri, Literal, Ontology, ParseError, Subject, Term, Triple,
};

pub fn parse_ntriples(input: &[u8]) -> Result<Ontology, ParseError> {
    let text = decode_utf8(input)?;
    let mut blanks = BlankNodeScope::default();
    let mut triples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let mut cur = Cursor::at_line(line, idx + 1);
        cur.skip_ws();
        if cur.peek().is_none() {
            continue;
        }
        let subject = match cur.peek() {
            Some('<') => Subject::Iri(iri(&mut cur)?),
            Some('_') => Subject::Blank(blanks.labelled(&cur.blank_label()?)),
            _ => return Err(cur.error("expected subject IRI or blank node")),
        };
        cur.skip_ws();
        let predicate = iri(&mut cur)?;
        cur.skip_ws();
        let object = match cur.peek() {
            Some('<') => Term::Iri(iri(&mut cur)?),
            Some('_') => Term::Blank(blanks.labelled(&cur.blank_label()?)),
            Some('"') => {
                let lexical = cur.string(true)?;
                match cur.peek() {
                    Some('@') => {
                        cur.bump();
                        Term::Literal(Literal::lang_tagged(lexical, cur.lang_tag()?))
                    }
                    Some('^') => {
                        cur.bump();
                        cur.expect('^')?;
                        Term::Literal(Literal::typed(lexical, iri(&mut cur)?))
                    }
                    _ => Term::Literal(Literal::plain(lexical)),
                }
            }
            _ => return Err(cur.error("expected object")),
        };
        if !cur.take_dot() {
            cur.skip_ws();
            cur.expect('.')?;
        }
        cur.skip_ws();
        if let Some(c) = cur.peek() {
            return Err(cur.error(format!("unexpected {c:?} after statement")));
        }
        triples.push(Triple::new(subject, predicate, object));
    }
    Ok(Ontology::from_triples(triples))
}

fn iri(cur: &mut Cursor<'_>) -> Result<Iri, ParseError> {
    let raw = cur.iri_ref()?;
    Iri::new(raw).map_err(|e| cur.error(e.to_string()))
}

pub fn write_ntriples(o: &Ontology) -> String {
    let mut out = String::new();
    for t in o.triples() {
        let _ = writeln!(
            out,
            "{} <{}> {} .",
            subject_token(&t.subject),
            t.predicate,
            term_token(&t.object)
        );
    }
    out
}

pub(crate) fn subject_token(s: &Subject) -> String {
    match s {
        Subject::Iri(iri) => format!("<{iri}>"),
        Subject::Blank(b) => b.to_string(),
    }
}

pub(crate) fn term_token(t: &Term) -> String {
    match t {
        Term::Iri(iri) => format!("<{iri}>"),
        Term::Blank(b) => b.to_string(),
        Term::Literal(lit) => {
            let mut s = String::with_capacity(lit.lexical().len() + 2);
            s.push('"');
            for c in lit.lexical().chars() {
                match c {
                    '"' => s.push_str("\\\""),
                    '\\' => s.push_str("\\\\"),
                    '\n' => s.push_str("\\n"),
                    '\r' => s.push_str("\\r"),
                    c => s.push(c),
                }
            }
            s.push('"');
            if let Some(lang) = lit.lang() {
                s.push('@');
                s.push_str(lang);
            } else if let Some(dt) = lit.datatype() {
                let _ = write!(s, "^^<{dt}>");
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn single_statement() {
        let o =
            parse_ntriples(b"<http://a#x> <http://www.w3.org/2000/01/rdf-schema#label> \"cat\" .")
                .unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(o.triples()[0].object, Term::Literal(Literal::plain("cat")));
    }

    #[test]
    fn empty_input() {
        assert!(parse_ntriples(b"").unwrap().is_empty());
        assert!(parse_ntriples(b"\n# only a comment\n\n")
            .unwrap()
            .is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        let line = "<http://a#x> <http://a#p> <http://a#y> .\n";
        let o = parse_ntriples(format!("{line}{line}").as_bytes()).unwrap();
        assert_eq!(o.len(), 1);
    }

    #[test]
    fn syntax_error_line_number() {
        let err = parse_ntriples(
            b"<http://a#x> <http://a#p> <http://a#y> .\n<http://a#x> <http://a#p> .\n",
        )
        .unwrap_err();
        assert_eq!(err.line(), 2);
        assert!(parse_ntriples(b"<http://a#x> <http://a#p> <http://a#y>\n").is_err());
        assert!(parse_ntriples(b"<x> <http://a#p> <http://a#y> .\n").is_err());
    }

    #[test]
    fn blank_nodes_are_document_scoped() {
        let o =
            parse_ntriples(b"_:foo <http://a#p> _:bar .\n_:bar <http://a#p> _:foo .\n").unwrap();
        let ids: Vec<String> = o
            .triples()
            .iter()
            .map(|t| subject_token(&t.subject))
            .collect();
        assert_eq!(ids, ["_:b0", "_:b1"]);
    }

    fn arb_triple() -> impl Strategy<Value = Triple> {
        let iri = "[a-c]{1,3}".prop_map(|s| Iri::new(format!("http://ex.org/{s}")).unwrap());
        let lit =
            (any::<String>(), prop::option::of("[a-z]{2}")).prop_map(|(lex, lang)| match lang {
                Some(l) => Literal::lang_tagged(lex, l),
                None => Literal::plain(lex),
            });
        let obj = prop_oneof![iri.clone().prop_map(Term::Iri), lit.prop_map(Term::Literal)];
        (iri.clone(), iri, obj).prop_map(|(s, p, o)| Triple::new(Subject::Iri(s), p, o))
    }

    proptest! {
        #[test]
        fn write_then_parse_is_identity(triples in prop::collection::vec(arb_triple(), 0..30)) {
            let o = Ontology::from_triples(triples);
            let nt = parse_ntriples(write_ntriples(&o).as_bytes()).unwrap();
            let ttl = crate::graph::parse_turtle(crate::graph::write_turtle(&o).as_bytes()).unwrap();
            let want: BTreeSet<_> = o.triples().iter().cloned().collect();
            prop_assert_eq!(&want, &nt.triples().iter().cloned().collect::<BTreeSet<_>>());
            prop_assert_eq!(&want, &ttl.triples().iter().cloned().collect::<BTreeSet<_>>());
        }
    }
}
