//! Turtle subset: `@prefix`/`PREFIX`, `@base`/`BASE`, `a`, predicate lists,
//! object lists, language tags, typed and numeric literals, booleans, and
//! blank-node property lists. Collections are not supported.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::vocab;
use super::{
    decode_utf8, BlankNodeScope, Iri, Literal, Ontology, ParseError, Subject, Term, Triple,
};

/// Character cursor tracking line and column, shared with the N-Triples parser.
pub(crate) struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
    pub(crate) pending_dot: bool,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Cursor::at_line(text, 1)
    }

    pub(crate) fn at_line(text: &'a str, line: usize) -> Self {
        Cursor {
            chars: text.chars().peekable(),
            line,
            column: 1,
            pending_dot: false,
        }
    }

    pub(crate) fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    pub(crate) fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    pub(crate) fn expect(&mut self, want: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected {want:?}, found {c:?}"))),
            None => Err(self.error(format!("expected {want:?}, found end of input"))),
        }
    }

    /// Skips whitespace and `#` comments.
    pub(crate) fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// `<...>` with `\u` escapes; returns the raw (possibly relative) reference.
    pub(crate) fn iri_ref(&mut self) -> Result<String, ParseError> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('u') => out.push(self.hex_escape(4)?),
                    Some('U') => out.push(self.hex_escape(8)?),
                    _ => return Err(self.error("invalid escape in IRI")),
                },
                Some(c)
                    if c.is_whitespace()
                        || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') =>
                {
                    return Err(self.error(format!("illegal character {c:?} in IRI")))
                }
                Some(c) => out.push(c),
                None => return Err(self.error("unterminated IRI")),
            }
        }
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char, ParseError> {
        let mut value = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| self.error("invalid hex escape"))?;
            value = value * 16 + d;
        }
        char::from_u32(value).ok_or_else(|| self.error("escape is not a valid code point"))
    }

    /// A quoted string. Supports single/double quotes and their long (triple) forms
    /// unless `short_only` is set (N-Triples).
    pub(crate) fn string(&mut self, short_only: bool) -> Result<String, ParseError> {
        let quote = match self.peek() {
            Some(q @ ('"' | '\'')) if !short_only || q == '"' => q,
            _ => return Err(self.error("expected string")),
        };
        self.bump();
        let mut long = false;
        if !short_only && self.peek() == Some(quote) {
            self.bump();
            if self.peek() == Some(quote) {
                self.bump();
                long = true;
            } else {
                return Ok(String::new());
            }
        }
        let mut out = String::new();
        loop {
            let c = self
                .bump()
                .ok_or_else(|| self.error("unterminated string"))?;
            match c {
                '\\' => {
                    let e = self
                        .bump()
                        .ok_or_else(|| self.error("unterminated escape"))?;
                    match e {
                        't' => out.push('\t'),
                        'b' => out.push('\u{8}'),
                        'n' => out.push('\n'),
                        'r' => out.push('\r'),
                        'f' => out.push('\u{c}'),
                        '"' => out.push('"'),
                        '\'' => out.push('\''),
                        '\\' => out.push('\\'),
                        'u' => out.push(self.hex_escape(4)?),
                        'U' => out.push(self.hex_escape(8)?),
                        other => return Err(self.error(format!("invalid escape \\{other}"))),
                    }
                }
                c if c == quote && !long => return Ok(out),
                c if c == quote => {
                    if self.peek() == Some(quote) {
                        self.bump();
                        if self.peek() == Some(quote) {
                            self.bump();
                            return Ok(out);
                        }
                        out.push(quote);
                    }
                    out.push(quote);
                }
                '\n' | '\r' if !long => return Err(self.error("newline in short string")),
                c => out.push(c),
            }
        }
    }

    /// Language tag after `@`.
    pub(crate) fn lang_tag(&mut self) -> Result<String, ParseError> {
        let mut tag = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || (c == '-' && !tag.is_empty()) {
                tag.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if tag.is_empty() || !tag.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return Err(self.error("invalid language tag"));
        }
        Ok(tag)
    }

    /// Blank node label after `_:`.
    pub(crate) fn blank_label(&mut self) -> Result<String, ParseError> {
        self.expect('_')?;
        self.expect(':')?;
        let mut label = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-') || (c == '.' && !label.is_empty()) {
                label.push(c);
                self.bump();
            } else {
                break;
            }
        }
        // A trailing '.' terminates the statement rather than the label.
        if label.ends_with('.') {
            label.pop();
            self.pending_dot = true;
        }
        if label.is_empty() {
            return Err(self.error("empty blank node label"));
        }
        Ok(label)
    }
}

// Peekable cannot un-read, so labels and local names that swallow a final '.'
// record it here and `take_dot` reports it to the grammar.
impl Cursor<'_> {
    pub(crate) fn take_dot(&mut self) -> bool {
        std::mem::take(&mut self.pending_dot)
    }
}

/// Parses a Turtle document.
pub fn parse_turtle(input: &[u8]) -> Result<Ontology, ParseError> {
    let text = decode_utf8(input)?;
    let mut parser = TurtleParser {
        cur: Cursor::new(text),
        prefixes: HashMap::new(),
        base: None,
        blanks: BlankNodeScope::default(),
        out: Vec::new(),
    };
    parser.document()?;
    Ok(Ontology::from_triples(parser.out))
}

struct TurtleParser<'a> {
    cur: Cursor<'a>,
    prefixes: HashMap<String, String>,
    base: Option<String>,
    blanks: BlankNodeScope,
    out: Vec<Triple>,
}

impl TurtleParser<'_> {
    fn document(&mut self) -> Result<(), ParseError> {
        loop {
            self.cur.skip_ws();
            match self.cur.peek() {
                None => return Ok(()),
                Some('@') => self.at_directive()?,
                Some('P' | 'p' | 'B' | 'b') if self.sparql_directive()? => {}
                Some(_) => {
                    self.triples()?;
                    self.statement_end()?;
                }
            }
        }
    }

    fn statement_end(&mut self) -> Result<(), ParseError> {
        if self.cur.take_dot() {
            return Ok(());
        }
        self.cur.skip_ws();
        self.cur.expect('.')
    }

    fn word(&mut self) -> String {
        let mut w = String::new();
        while let Some(c) = self.cur.peek() {
            if c.is_ascii_alphabetic() {
                w.push(c);
                self.cur.bump();
            } else {
                break;
            }
        }
        w
    }

    fn at_directive(&mut self) -> Result<(), ParseError> {
        self.cur.expect('@')?;
        let kw = self.word();
        match kw.as_str() {
            "prefix" => self.prefix_body()?,
            "base" => self.base_body()?,
            _ => return Err(self.cur.error(format!("unknown directive @{kw}"))),
        }
        self.statement_end()
    }

    /// `PREFIX`/`BASE` without a trailing dot. Returns false (consuming nothing)
    /// when the upcoming token is not one of those keywords.
    fn sparql_directive(&mut self) -> Result<bool, ParseError> {
        let ahead: String = self.cur.chars.clone().take(7).collect();
        let upper = ahead.to_ascii_uppercase();
        for kw in ["PREFIX", "BASE"] {
            if upper.starts_with(kw) && ahead[kw.len()..].starts_with(char::is_whitespace) {
                self.word();
                if kw == "PREFIX" {
                    self.prefix_body()?;
                } else {
                    self.base_body()?;
                }
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn prefix_body(&mut self) -> Result<(), ParseError> {
        self.cur.skip_ws();
        let mut name = String::new();
        loop {
            match self.cur.peek() {
                Some(':') => {
                    self.cur.bump();
                    break;
                }
                Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') => {
                    name.push(c);
                    self.cur.bump();
                }
                _ => return Err(self.cur.error("expected prefix name ending in ':'")),
            }
        }
        self.cur.skip_ws();
        let iri = self.cur.iri_ref()?;
        let iri = self.resolve(iri)?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn base_body(&mut self) -> Result<(), ParseError> {
        self.cur.skip_ws();
        let iri = self.cur.iri_ref()?;
        let iri = self.resolve(iri)?;
        self.base = Some(iri);
        Ok(())
    }

    fn resolve(&self, reference: String) -> Result<String, ParseError> {
        if reference.contains(':') {
            return Ok(reference);
        }
        let Some(base) = &self.base else {
            return Err(self
                .cur
                .error(format!("relative IRI <{reference}> without @base")));
        };
        if reference.is_empty() {
            return Ok(base.clone());
        }
        if reference.starts_with('#') {
            let stem = base.split('#').next().unwrap_or(base);
            return Ok(format!("{stem}{reference}"));
        }
        let stem = match base.rfind('/') {
            Some(pos) => &base[..=pos],
            None => base.as_str(),
        };
        Ok(format!("{stem}{reference}"))
    }

    fn make_iri(&self, value: String) -> Result<Iri, ParseError> {
        Iri::new(value).map_err(|e| self.cur.error(e.to_string()))
    }

    fn iri(&mut self) -> Result<Iri, ParseError> {
        match self.cur.peek() {
            Some('<') => {
                let raw = self.cur.iri_ref()?;
                let resolved = self.resolve(raw)?;
                self.make_iri(resolved)
            }
            _ => self.prefixed_name(),
        }
    }

    fn prefixed_name(&mut self) -> Result<Iri, ParseError> {
        let line = self.cur.line;
        let mut prefix = String::new();
        loop {
            match self.cur.peek() {
                Some(':') => {
                    self.cur.bump();
                    break;
                }
                Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.') => {
                    prefix.push(c);
                    self.cur.bump();
                }
                Some(c) => return Err(self.cur.error(format!("unexpected character {c:?}"))),
                None => return Err(self.cur.error("unexpected end of input")),
            }
        }
        let mut local = String::new();
        while let Some(c) = self.cur.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | ':' | '.') {
                local.push(c);
                self.cur.bump();
            } else if c == '\\' {
                self.cur.bump();
                match self.cur.bump() {
                    Some(e) if "_~.-!$&'()*+,;=/?#@%".contains(e) => local.push(e),
                    _ => return Err(self.cur.error("invalid escape in local name")),
                }
            } else if c == '%' {
                self.cur.bump();
                local.push('%');
                for _ in 0..2 {
                    match self.cur.bump() {
                        Some(h) if h.is_ascii_hexdigit() => local.push(h),
                        _ => return Err(self.cur.error("invalid percent escape")),
                    }
                }
            } else {
                break;
            }
        }
        if local.ends_with('.') {
            local.pop();
            self.cur.pending_dot = true;
        }
        let ns = self
            .prefixes
            .get(&prefix)
            .ok_or(ParseError::UnknownPrefix { line, prefix })?;
        self.make_iri(format!("{ns}{local}"))
    }

    fn triples(&mut self) -> Result<(), ParseError> {
        self.cur.skip_ws();
        if self.cur.peek() == Some('[') {
            let subject = self.blank_property_list()?;
            self.cur.skip_ws();
            if self.cur.peek() != Some('.') {
                self.predicate_object_list(&subject)?;
            }
            return Ok(());
        }
        let subject = self.subject()?;
        self.predicate_object_list(&subject)
    }

    fn subject(&mut self) -> Result<Subject, ParseError> {
        match self.cur.peek() {
            Some('_') => {
                let label = self.cur.blank_label()?;
                Ok(Subject::Blank(self.blanks.labelled(&label)))
            }
            Some('"' | '\'') => Err(self.cur.error("literal in subject position")),
            _ => Ok(Subject::Iri(self.iri()?)),
        }
    }

    fn verb(&mut self) -> Result<Iri, ParseError> {
        if self.cur.peek() == Some('a') {
            let mut ahead = self.cur.chars.clone();
            ahead.next();
            if ahead
                .next()
                .is_some_and(|c| c.is_whitespace() || matches!(c, '<' | '"' | '[' | '_'))
            {
                self.cur.bump();
                return self.make_iri(vocab::RDF_TYPE.to_string());
            }
        }
        if self.cur.peek() == Some('_') || self.cur.peek() == Some('[') {
            return Err(self.cur.error("predicate must be an IRI"));
        }
        self.iri()
    }

    fn predicate_object_list(&mut self, subject: &Subject) -> Result<(), ParseError> {
        loop {
            self.cur.skip_ws();
            let predicate = self.verb()?;
            loop {
                self.cur.skip_ws();
                let object = self.object()?;
                self.out
                    .push(Triple::new(subject.clone(), predicate.clone(), object));
                if self.cur.pending_dot {
                    return Ok(());
                }
                self.cur.skip_ws();
                if self.cur.peek() == Some(',') {
                    self.cur.bump();
                } else {
                    break;
                }
            }
            if self.cur.peek() != Some(';') {
                return Ok(());
            }
            // One or more ';', possibly followed by the end of the list.
            while self.cur.peek() == Some(';') {
                self.cur.bump();
                self.cur.skip_ws();
            }
            if matches!(self.cur.peek(), Some('.' | ']') | None) {
                return Ok(());
            }
        }
    }

    fn blank_property_list(&mut self) -> Result<Subject, ParseError> {
        self.cur.expect('[')?;
        let node = Subject::Blank(self.blanks.fresh());
        self.cur.skip_ws();
        if self.cur.peek() != Some(']') {
            self.predicate_object_list(&node)?;
            if self.cur.take_dot() {
                return Err(self.cur.error("'.' inside blank node property list"));
            }
            self.cur.skip_ws();
        }
        self.cur.expect(']')?;
        Ok(node)
    }

    fn object(&mut self) -> Result<Term, ParseError> {
        match self.cur.peek() {
            Some('[') => Ok(match self.blank_property_list()? {
                Subject::Blank(b) => Term::Blank(b),
                Subject::Iri(i) => Term::Iri(i),
            }),
            Some('_') => {
                let label = self.cur.blank_label()?;
                Ok(Term::Blank(self.blanks.labelled(&label)))
            }
            Some('"' | '\'') => self.literal(),
            Some(c) if c.is_ascii_digit() || matches!(c, '+' | '-' | '.') => self.numeric(),
            Some('(') => Err(self.cur.error("collections are not supported")),
            Some(_) => {
                if let Some(b) = self.boolean() {
                    return Ok(b);
                }
                Ok(Term::Iri(self.iri()?))
            }
            None => Err(self.cur.error("expected object, found end of input")),
        }
    }

    fn boolean(&mut self) -> Option<Term> {
        for word in ["true", "false"] {
            let mut ahead = self.cur.chars.clone();
            if word.chars().all(|w| ahead.next() == Some(w))
                && ahead
                    .next()
                    .is_none_or(|c| !(c.is_alphanumeric() || matches!(c, ':' | '_' | '-')))
            {
                for _ in 0..word.len() {
                    self.cur.bump();
                }
                let dt = Iri::new(vocab::XSD_BOOLEAN).expect("static IRI");
                return Some(Term::Literal(Literal::typed(word, dt)));
            }
        }
        None
    }

    fn literal(&mut self) -> Result<Term, ParseError> {
        let lexical = self.cur.string(false)?;
        match self.cur.peek() {
            Some('@') => {
                self.cur.bump();
                let tag = self.cur.lang_tag()?;
                Ok(Term::Literal(Literal::lang_tagged(lexical, tag)))
            }
            Some('^') => {
                self.cur.bump();
                self.cur.expect('^')?;
                let dt = self.iri()?;
                Ok(Term::Literal(Literal::typed(lexical, dt)))
            }
            _ => Ok(Term::Literal(Literal::plain(lexical))),
        }
    }

    fn numeric(&mut self) -> Result<Term, ParseError> {
        let mut text = String::new();
        if let Some(sign @ ('+' | '-')) = self.cur.peek() {
            text.push(sign);
            self.cur.bump();
        }
        let mut int_digits = 0;
        while let Some(c) = self.cur.peek().filter(char::is_ascii_digit) {
            text.push(c);
            self.cur.bump();
            int_digits += 1;
        }
        let mut datatype = vocab::XSD_INTEGER;
        if self.cur.peek() == Some('.') {
            let mut ahead = self.cur.chars.clone();
            ahead.next();
            if ahead.next().is_some_and(|c| c.is_ascii_digit()) {
                self.cur.bump();
                text.push('.');
                while let Some(c) = self.cur.peek().filter(char::is_ascii_digit) {
                    text.push(c);
                    self.cur.bump();
                }
                datatype = vocab::XSD_DECIMAL;
            } else if int_digits == 0 {
                return Err(self.cur.error("invalid numeric literal"));
            }
        }
        if int_digits == 0 && datatype == vocab::XSD_INTEGER {
            return Err(self.cur.error("invalid numeric literal"));
        }
        if let Some(e @ ('e' | 'E')) = self.cur.peek() {
            text.push(e);
            self.cur.bump();
            if let Some(sign @ ('+' | '-')) = self.cur.peek() {
                text.push(sign);
                self.cur.bump();
            }
            let mut exp_digits = 0;
            while let Some(c) = self.cur.peek().filter(char::is_ascii_digit) {
                text.push(c);
                self.cur.bump();
                exp_digits += 1;
            }
            if exp_digits == 0 {
                return Err(self.cur.error("invalid exponent"));
            }
            datatype = vocab::XSD_DOUBLE;
        }
        let dt = Iri::new(datatype).expect("static IRI");
        Ok(Term::Literal(Literal::typed(text, dt)))
    }
}

/// Writes an ontology as Turtle using absolute IRIs, grouping triples by subject.
pub fn write_turtle(o: &Ontology) -> String {
    let mut out = String::new();
    let mut subjects: Vec<&Subject> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for t in o.triples() {
        if seen.insert(&t.subject) {
            subjects.push(&t.subject);
        }
    }
    for s in subjects {
        out.push_str(&super::ntriples::subject_token(s));
        let triples: Vec<&Triple> = o.with_subject(s).collect();
        for (i, t) in triples.iter().enumerate() {
            let sep = if i == 0 { " " } else { " ;\n    " };
            let _ = write!(
                out,
                "{sep}<{}> {}",
                t.predicate,
                super::ntriples::term_token(&t.object)
            );
        }
        out.push_str(" .\n");
    }
    out
}
