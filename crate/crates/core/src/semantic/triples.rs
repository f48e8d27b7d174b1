use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

use thiserror::Error;

use super::context::is_absolute_iri;

pub const XSD_DOUBLE: &str = "http://www.w3.org/2001/XMLSchema#double";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
const XSD_NUMERIC: [&str; 6] = [
    XSD_DOUBLE,
    "http://www.w3.org/2001/XMLSchema#decimal",
    "http://www.w3.org/2001/XMLSchema#float",
    "http://www.w3.org/2001/XMLSchema#integer",
    "http://www.w3.org/2001/XMLSchema#int",
    "http://www.w3.org/2001/XMLSchema#long",
];

/// Object position of a triple.
///
/// Numbers are always finite. A numeric literal's `unit` is a unit IRI and
/// doubles as its datatype when written as N-Triples.
#[derive(Debug, Clone)]
pub enum Term {
    Iri(String),
    Number { value: f64, unit: Option<String> },
    Text(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn text(s: impl Into<String>) -> Self {
        Term::Text(s.into())
    }

    pub fn number(value: f64, unit: Option<&str>) -> Self {
        Term::Number {
            value,
            unit: unit.map(str::to_string),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Number { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Term::Text(s) => Some(s),
            _ => None,
        }
    }

    /// N-Triples form of this term.
    pub fn to_ntriples(&self) -> String {
        let mut s = String::new();
        write_term(&mut s, self);
        s
    }

    fn rank(&self) -> u8 {
        match self {
            Term::Iri(_) => 0,
            Term::Number { .. } => 1,
            Term::Text(_) => 2,
        }
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Iri(a), Term::Iri(b)) | (Term::Text(a), Term::Text(b)) => a == b,
            (Term::Number { value: a, unit: ua }, Term::Number { value: b, unit: ub }) => a == b && ua == ub,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Term::Iri(s) | Term::Text(s) => s.hash(state),
            Term::Number { value, unit } => {
                // +0.0 folds -0.0 onto 0.0 so equal numbers hash equally.
                (value + 0.0).to_bits().hash(state);
                unit.hash(state);
            }
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Term::Iri(a), Term::Iri(b)) | (Term::Text(a), Term::Text(b)) => a.cmp(b),
            (Term::Number { value: a, unit: ua }, Term::Number { value: b, unit: ub }) => {
                a.total_cmp(b).then_with(|| ua.cmp(ub))
            }
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ntriples())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object,
        }
    }

    pub fn to_ntriples(&self) -> String {
        let mut s = String::new();
        write_triple(&mut s, self);
        s
    }
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

fn write_term(out: &mut String, t: &Term) {
    match t {
        Term::Iri(iri) => {
            out.push('<');
            out.push_str(iri);
            out.push('>');
        }
        Term::Text(s) => {
            out.push('"');
            escape_into(out, s);
            out.push('"');
        }
        Term::Number { value, unit } => {
            // Display for f64 is the shortest string that parses back exactly.
            let _ = write!(out, "\"{value}\"^^<{}>", unit.as_deref().unwrap_or(XSD_DOUBLE));
        }
    }
}

fn write_triple(out: &mut String, t: &Triple) {
    out.push('<');
    out.push_str(&t.subject);
    out.push_str("> <");
    out.push_str(&t.predicate);
    out.push_str("> ");
    write_term(out, &t.object);
    out.push_str(" .");
}

/// One triple per line, LF endings.
pub fn write_ntriples(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        write_triple(&mut out, t);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("N-Triples line {line}: {message}")]
pub struct NTriplesError {
    pub line: usize,
    pub message: String,
}

/// Parses the N-Triples subset this crate writes: IRIs, plain, typed and
/// language-tagged literals. Blank nodes are rejected.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>, NTriplesError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| NTriplesError { line: i + 1, message };
        let mut cur = Cursor { s: line, pos: 0 };
        let subject = cur.iri().map_err(err)?;
        let predicate = cur.iri().map_err(err)?;
        let object = cur.object().map_err(err)?;
        cur.skip_ws();
        if !cur.eat('.') {
            return Err(err("expected '.' after object".into()));
        }
        cur.skip_ws();
        if !(cur.rest().is_empty() || cur.rest().starts_with('#')) {
            return Err(err(format!("trailing content {:?}", cur.rest())));
        }
        out.push(Triple {
            subject,
            predicate,
            object,
        });
    }
    Ok(out)
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.s.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn iri(&mut self) -> Result<String, String> {
        self.skip_ws();
        if self.rest().starts_with("_:") {
            return Err("blank nodes are not supported".into());
        }
        if !self.eat('<') {
            return Err(format!("expected IRI at {:?}", self.rest()));
        }
        let end = self.rest().find('>').ok_or("unterminated IRI")?;
        let iri = unescape(&self.rest()[..end])?;
        self.pos += end + 1;
        if !is_absolute_iri(&iri) {
            return Err(format!("{iri:?} is not an absolute IRI"));
        }
        Ok(iri)
    }

    fn object(&mut self) -> Result<Term, String> {
        self.skip_ws();
        if self.rest().starts_with('<') || self.rest().starts_with("_:") {
            return self.iri().map(Term::Iri);
        }
        if !self.eat('"') {
            return Err(format!("expected IRI or literal at {:?}", self.rest()));
        }
        let body = self.rest();
        let mut end = None;
        let mut escaped = false;
        for (i, c) in body.char_indices() {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => {
                    end = Some(i);
                    break;
                }
                _ => {}
            }
        }
        let end = end.ok_or("unterminated literal")?;
        let lexical = unescape(&body[..end])?;
        self.pos += end + 1;

        if self.rest().starts_with("^^") {
            self.pos += 2;
            let datatype = self.iri()?;
            if datatype == XSD_STRING {
                return Ok(Term::Text(lexical));
            }
            let value: f64 = lexical
                .trim()
                .parse()
                .map_err(|_| format!("{lexical:?} is not numeric (datatype {datatype})"))?;
            if !value.is_finite() {
                return Err(format!("{lexical:?} is not a finite number"));
            }
            let unit = (!XSD_NUMERIC.contains(&datatype.as_str())).then_some(datatype);
            return Ok(Term::Number { value, unit });
        }
        if self.eat('@') {
            let tag_len = self
                .rest()
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(self.rest().len());
            self.pos += tag_len;
        }
        Ok(Term::Text(lexical))
    }
}

fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('"') => out.push('"'),
            Some('\\') => out.push('\\'),
            Some('\'') => out.push('\''),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('t') => out.push('\t'),
            Some('b') => out.push('\u{8}'),
            Some('f') => out.push('\u{c}'),
            Some(k @ ('u' | 'U')) => {
                let n = if k == 'u' { 4 } else { 8 };
                let hex: String = chars.by_ref().take(n).collect();
                let code = u32::from_str_radix(&hex, 16).map_err(|_| format!("bad escape \\{k}{hex}"))?;
                out.push(char::from_u32(code).ok_or_else(|| format!("invalid code point {code:#x}"))?);
            }
            other => return Err(format!("bad escape \\{}", other.map(String::from).unwrap_or_default())),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn writes_typed_literals() {
        let t = Triple::new(
            "https://www.wikidata.org/wiki/Q120766894",
            "https://example.org/cap",
            Term::number(3.4, Some("http://qudt.org/vocab/unit/A-HR")),
        );
        assert_eq!(
            t.to_ntriples(),
            "<https://www.wikidata.org/wiki/Q120766894> <https://example.org/cap> \"3.4\"^^<http://qudt.org/vocab/unit/A-HR> ."
        );
    }

    #[test]
    fn parses_common_forms() {
        let text = "# comment\n\
            <http://a/s> <http://a/p> <http://a/o> .\n\
            <http://a/s> <http://a/p> \"hi \\\"there\\\"\" .\n\
            <http://a/s> <http://a/p> \"2\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n\
            <http://a/s> <http://a/p> \"chat\"@fr .\n\
            \n";
        let triples = parse_ntriples(text).unwrap();
        assert_eq!(triples.len(), 4);
        assert_eq!(triples[1].object, Term::text("hi \"there\""));
        assert_eq!(triples[2].object, Term::number(2.0, None));
        assert_eq!(triples[3].object, Term::text("chat"));
    }

    #[test]
    fn rejects_bad_lines() {
        assert_eq!(
            parse_ntriples("<http://a/s> <http://a/p> <http://a/o>\n")
                .unwrap_err()
                .line,
            1
        );
        assert!(parse_ntriples("_:b <http://a/p> <http://a/o> .").is_err());
        assert!(parse_ntriples("<rel> <http://a/p> <http://a/o> .").is_err());
        assert!(parse_ntriples("<http://a/s> <http://a/p> \"x\"^^<http://u/V> .").is_err());
    }

    #[test]
    fn negative_zero_hashes_like_zero() {
        use std::collections::HashSet;
        let set: HashSet<Term> = [Term::number(0.0, None), Term::number(-0.0, None)]
            .into_iter()
            .collect();
        assert_eq!(set.len(), 1);
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            "https?://[a-z]{1,6}\\.org/[a-zA-Z0-9_#]{0,8}".prop_map(Term::Iri),
            (
                any::<f64>().prop_filter("finite", |v| v.is_finite()),
                proptest::option::of("http://u\\.org/[A-Z]{1,3}")
            )
                .prop_map(|(value, unit)| Term::Number { value, unit }),
            any::<String>().prop_map(Term::Text),
        ]
    }

    proptest! {
        #[test]
        fn ntriples_round_trip(objects in prop::collection::vec(arb_term(), 0..20)) {
            let triples: Vec<Triple> = objects
                .into_iter()
                .enumerate()
                .map(|(i, o)| Triple::new(format!("http://s.org/{i}"), "http://p.org/p", o))
                .collect();
            let text = write_ntriples(&triples);
            prop_assert_eq!(parse_ntriples(&text).unwrap(), triples);
        }
    }
}
