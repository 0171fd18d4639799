//! OAEI Alignment-API XML (RDF/XML flavoured) subset.

use std::fmt::Write as _;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{Alignment, AlignmentError, CellKey, Correspondence, Relation};
use crate::graph::Iri;

const HEADER: &str = r#"<?xml version="1.0" encoding="utf-8"?>
<rdf:RDF xmlns="http://knowledgeweb.semanticweb.org/heterogeneity/alignment"
  xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#"
  xmlns:xsd="http://www.w3.org/2001/XMLSchema#">
<Alignment>
  <xml>yes</xml>
  <level>0</level>
  <type>??</type>
"#;

const FOOTER: &str = "</Alignment>\n</rdf:RDF>\n";

/// Writes cells sorted by `(source, target)`; measures use the shortest
/// decimal form that parses back to the same `f64`.
pub fn serialize_alignment_xml(a: &Alignment) -> String {
    let mut out = String::from(HEADER);
    for (key, confidence) in a.entries() {
        let _ = write!(
            out,
            "  <map>\n    <Cell>\n      <entity1 rdf:resource=\"{}\"/>\n      <entity2 rdf:resource=\"{}\"/>\n      <relation>{}</relation>\n      <measure rdf:datatype=\"xsd:float\">{}</measure>\n    </Cell>\n  </map>\n",
            escape_attr(key.source.as_str()),
            escape_attr(key.target.as_str()),
            escape_text(key.relation.symbol()),
            confidence
        );
    }
    out.push_str(FOOTER);
    out
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            // Attribute-value normalization would turn these into spaces.
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_text(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

#[derive(Default)]
struct CellBuilder {
    entity1: Option<String>,
    entity2: Option<String>,
    relation: Option<String>,
    measure: Option<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Entity1,
    Entity2,
    Relation,
    Measure,
}

/// Parses `<Cell>` elements anywhere in the document. A missing measure means 1.0.
pub fn parse_alignment_xml(input: &[u8]) -> Result<Alignment, AlignmentError> {
    let text = std::str::from_utf8(input).map_err(|e| AlignmentError::Xml(e.to_string()))?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let mut alignment = Alignment::new();
    let mut cell: Option<CellBuilder> = None;
    let mut field: Option<Field> = None;
    let xml_err = |e: quick_xml::Error| AlignmentError::Xml(e.to_string());

    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event()
            .map_err(|e| AlignmentError::Xml(format!("at byte {pos}: {e}")))?;
        match event {
            Event::Start(e) if cell.is_none() => {
                if e.local_name().as_ref() == "Cell" {
                    cell = Some(CellBuilder::default());
                }
            }
            Event::Empty(e) if cell.is_none() => {
                if e.local_name().as_ref() == "Cell" {
                    return Err(AlignmentError::MissingEntity("entity1"));
                }
            }
            Event::Start(ref e) | Event::Empty(ref e) => {
                let builder = cell.as_mut().expect("inside cell");
                let f = match e.local_name().as_ref() {
                    "entity1" => Field::Entity1,
                    "entity2" => Field::Entity2,
                    "relation" => Field::Relation,
                    "measure" => Field::Measure,
                    _ => continue,
                };
                if matches!(f, Field::Entity1 | Field::Entity2) {
                    for attr in e.attributes() {
                        let attr = attr.map_err(|e| AlignmentError::Xml(e.to_string()))?;
                        if attr.key.local_name().as_ref() == "resource" {
                            let value = attr
                                .normalized_value(quick_xml::XmlVersion::Implicit1_0)
                                .map_err(xml_err)?
                                .into_owned();
                            if f == Field::Entity1 {
                                builder.entity1 = Some(value);
                            } else {
                                builder.entity2 = Some(value);
                            }
                        }
                    }
                }
                field = matches!(event, Event::Start(_)).then_some(f);
            }
            Event::Text(t) => {
                if let (Some(builder), Some(f)) = (cell.as_mut(), field) {
                    append(builder, f, &t.xml10_content());
                }
            }
            Event::CData(t) => {
                if let (Some(builder), Some(f)) = (cell.as_mut(), field) {
                    append(builder, f, &t.xml10_content());
                }
            }
            Event::GeneralRef(r) => {
                if let (Some(builder), Some(f)) = (cell.as_mut(), field) {
                    let reference = format!("&{};", r.xml10_content());
                    let resolved = quick_xml::escape::unescape(&reference)
                        .map_err(|e| AlignmentError::Xml(e.to_string()))?;
                    append(builder, f, &resolved);
                }
            }
            Event::End(e) => {
                if e.local_name().as_ref() == "Cell" {
                    let builder = cell
                        .take()
                        .ok_or_else(|| AlignmentError::Xml("stray </Cell>".into()))?;
                    alignment.insert(finish(builder)?);
                }
                field = None;
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if cell.is_some() {
        return Err(AlignmentError::Xml("unterminated <Cell>".into()));
    }
    Ok(alignment)
}

fn append(builder: &mut CellBuilder, field: Field, s: &str) {
    let slot = match field {
        Field::Relation => &mut builder.relation,
        Field::Measure => &mut builder.measure,
        // Entities come from rdf:resource; inline text is ignored.
        Field::Entity1 | Field::Entity2 => return,
    };
    slot.get_or_insert_with(String::new).push_str(s);
}

fn finish(builder: CellBuilder) -> Result<Correspondence, AlignmentError> {
    let source = Iri::new(
        builder
            .entity1
            .ok_or(AlignmentError::MissingEntity("entity1"))?,
    )?;
    let target = Iri::new(
        builder
            .entity2
            .ok_or(AlignmentError::MissingEntity("entity2"))?,
    )?;
    let relation = match builder.relation {
        Some(r) => Relation::parse(&r)?,
        None => Relation::Equivalence,
    };
    let confidence = match builder.measure {
        None => 1.0,
        Some(m) => {
            let trimmed = m.trim();
            let value: f64 = trimmed
                .parse()
                .map_err(|_| AlignmentError::InvalidMeasure(trimmed.to_string()))?;
            if !(0.0..=1.0).contains(&value) {
                return Err(AlignmentError::InvalidMeasure(trimmed.to_string()));
            }
            value
        }
    };
    Correspondence::with_key(
        CellKey {
            source,
            target,
            relation,
        },
        confidence,
    )
}
