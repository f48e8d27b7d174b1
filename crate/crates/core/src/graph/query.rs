//! Parser for the supported SPARQL subset:
//!
//! ```text
//! query    := prefix* SELECT DISTINCT? var+ WHERE? '{' item* '}' (LIMIT int)?
//! prefix   := PREFIX name? ':' '<' iri '>'
//! item     := triple '.'? | FILTER '(' cond ('&&' cond)* ')' '.'?
//! triple   := term term term
//! term     := var | '<' iri '>' | prefix:local | 'a' | "string" | number
//! cond     := var op number | number op var          op := < <= = >= > !=
//! ```
//!
//! Keywords are case-insensitive. `a` abbreviates `rdf:type`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic::{is_absolute_iri, Term};

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueryError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: unknown prefix {prefix:?}")]
    UnknownPrefix { line: usize, column: usize, prefix: String },
    #[error("FILTER uses ?{0}, which no pattern binds")]
    UnboundFilter(String),
    #[error("SELECT uses ?{0}, which no pattern binds")]
    UnboundVariable(String),
}

impl QueryError {
    pub fn code(&self) -> &'static str {
        match self {
            QueryError::Syntax { .. } => "SYNTAX",
            QueryError::UnknownPrefix { .. } => "UNKNOWN_PREFIX",
            QueryError::UnboundFilter(_) => "UNBOUND_FILTER",
            QueryError::UnboundVariable(_) => "UNBOUND_VARIABLE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternTerm {
    Var(String),
    Iri(String),
    /// A plain string or a number. Numbers match numeric objects of equal
    /// value whatever their unit.
    Literal(LiteralValue),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LiteralValue {
    Text(String),
    Number(f64),
}

impl Eq for LiteralValue {}

impl std::hash::Hash for LiteralValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            LiteralValue::Text(s) => (0u8, s).hash(state),
            LiteralValue::Number(v) => (1u8, (v + 0.0).to_bits()).hash(state),
        }
    }
}

impl PatternTerm {
    pub fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Whether a concrete term matches this constant. Variables match anything.
    pub fn matches(&self, t: &Term) -> bool {
        match (self, t) {
            (PatternTerm::Var(_), _) => true,
            (PatternTerm::Iri(a), Term::Iri(b)) => a == b,
            (PatternTerm::Literal(LiteralValue::Text(a)), Term::Text(b)) => a == b,
            (PatternTerm::Literal(LiteralValue::Number(a)), Term::Number { value, .. }) => a == value,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn terms(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    fn flipped(self) -> Self {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
            other => other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// `?var op value`, true only for numeric bindings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub var: String,
    pub op: CmpOp,
    pub value: f64,
}

impl Filter {
    pub fn accepts(&self, t: &Term) -> bool {
        t.as_number().is_some_and(|x| self.op.holds(x, self.value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub prefixes: BTreeMap<String, String>,
    pub select_vars: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<Filter>,
    pub limit: Option<usize>,
}

impl Query {
    /// Variables in order of first appearance in the patterns.
    pub fn pattern_vars(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for p in &self.patterns {
            for v in p.terms().into_iter().filter_map(PatternTerm::var) {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term = |t: &PatternTerm| match t {
            PatternTerm::Var(v) => format!("?{v}"),
            PatternTerm::Iri(i) => format!("<{i}>"),
            PatternTerm::Literal(LiteralValue::Number(n)) => format!("{n}"),
            PatternTerm::Literal(LiteralValue::Text(s)) => format!("{s:?}"),
        };
        write!(f, "SELECT")?;
        for v in &self.select_vars {
            write!(f, " ?{v}")?;
        }
        writeln!(f, " WHERE {{")?;
        for p in &self.patterns {
            writeln!(f, "  {} {} {} .", term(&p.subject), term(&p.predicate), term(&p.object))?;
        }
        for flt in &self.filters {
            writeln!(f, "  FILTER(?{} {} {})", flt.var, flt.op.as_str(), flt.value)?;
        }
        write!(f, "}}")?;
        if let Some(n) = self.limit {
            write!(f, " LIMIT {n}")?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    prefixes: BTreeMap<String, String>,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-')
}

impl<'a> Parser<'a> {
    fn location(&self, pos: usize) -> (usize, usize) {
        let before = &self.src[..pos];
        let line = before.matches('\n').count() + 1;
        let column = before
            .rfind('\n')
            .map_or(before.chars().count(), |i| before[i + 1..].chars().count())
            + 1;
        (line, column)
    }

    fn error_at(&self, pos: usize, message: impl Into<String>) -> QueryError {
        let (line, column) = self.location(pos);
        QueryError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> QueryError {
        self.error_at(self.pos, message)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        loop {
            let r = self.rest();
            let trimmed = r.trim_start();
            self.pos += r.len() - trimmed.len();
            if trimmed.starts_with('#') {
                self.pos += trimmed.find('\n').unwrap_or(trimmed.len());
            } else {
                break;
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), QueryError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected {s:?}")))
        }
    }

    /// Consumes a keyword when the next word matches it case-insensitively.
    fn keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let r = self.rest();
        let word_len = r.find(|c: char| !c.is_ascii_alphabetic()).unwrap_or(r.len());
        if word_len == kw.len() && r[..word_len].eq_ignore_ascii_case(kw) {
            self.pos += word_len;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> &'a str {
        let r = self.rest();
        let len = r.find(|c: char| !is_name_char(c)).unwrap_or(r.len());
        self.pos += len;
        &r[..len]
    }

    fn var(&mut self) -> Result<String, QueryError> {
        self.skip_ws();
        let start = self.pos;
        if !(self.eat("?") || self.eat("$")) {
            return Err(self.error("expected a variable"));
        }
        let n = self.name();
        if n.is_empty() {
            return Err(self.error_at(start, "empty variable name"));
        }
        Ok(n.to_string())
    }

    fn iri_ref(&mut self) -> Result<String, QueryError> {
        let start = self.pos;
        self.expect("<")?;
        let r = self.rest();
        let end = r.find('>').ok_or_else(|| self.error_at(start, "unterminated IRI"))?;
        let iri = &r[..end];
        if !is_absolute_iri(iri) {
            return Err(self.error_at(start, format!("<{iri}> is not an absolute IRI")));
        }
        self.pos += end + 1;
        Ok(iri.to_string())
    }

    fn number(&mut self) -> Option<f64> {
        self.skip_ws();
        let r = self.rest();
        let len = r
            .char_indices()
            .take_while(|&(i, c)| {
                c.is_ascii_digit()
                    || c == '.'
                    || ((c == '-' || c == '+') && (i == 0 || matches!(r.as_bytes()[i - 1], b'e' | b'E')))
                    || c == 'e'
                    || c == 'E'
            })
            .map(|(i, c)| i + c.len_utf8())
            .last()?;
        let mut text = &r[..len];
        // A trailing '.' ends the triple, it is not part of the number.
        while text.ends_with('.') {
            text = &text[..text.len() - 1];
        }
        let v: f64 = text.parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        self.pos += text.len();
        Some(v)
    }

    fn string(&mut self) -> Result<String, QueryError> {
        let start = self.pos;
        self.expect("\"")?;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, c @ ('"' | '\\'))) => out.push(c),
                    _ => return Err(self.error_at(start + 1 + i, "bad escape in string")),
                },
                '\n' => break,
                c => out.push(c),
            }
        }
        Err(self.error_at(start, "unterminated string"))
    }

    fn prefixed(&mut self) -> Result<String, QueryError> {
        let start = self.pos;
        let prefix = self.name();
        if !self.rest().starts_with(':') {
            return Err(self.error_at(start, "expected a term"));
        }
        self.pos += 1;
        let r = self.rest();
        let len = r.find(|c: char| !(is_name_char(c) || c == '.')).unwrap_or(r.len());
        let mut local = &r[..len];
        while local.ends_with('.') {
            local = &local[..local.len() - 1];
        }
        self.pos += local.len();
        let Some(ns) = self.prefixes.get(prefix) else {
            let (line, column) = self.location(start);
            return Err(QueryError::UnknownPrefix {
                line,
                column,
                prefix: prefix.to_string(),
            });
        };
        Ok(format!("{ns}{local}"))
    }

    fn term(&mut self) -> Result<PatternTerm, QueryError> {
        self.skip_ws();
        match self.peek() {
            Some('?' | '$') => Ok(PatternTerm::Var(self.var()?)),
            Some('<') => Ok(PatternTerm::Iri(self.iri_ref()?)),
            Some('"') => Ok(PatternTerm::Literal(LiteralValue::Text(self.string()?))),
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => self
                .number()
                .map(|v| PatternTerm::Literal(LiteralValue::Number(v)))
                .ok_or_else(|| self.error("malformed number")),
            Some(c) if is_name_char(c) || c == ':' => {
                let save = self.pos;
                if self.name() == "a" && self.peek().is_none_or(|c| c.is_whitespace()) {
                    return Ok(PatternTerm::Iri(RDF_TYPE.to_string()));
                }
                self.pos = save;
                Ok(PatternTerm::Iri(self.prefixed()?))
            }
            _ => Err(self.error("expected a term")),
        }
    }

    fn op(&mut self) -> Result<CmpOp, QueryError> {
        self.skip_ws();
        for (s, op) in [
            ("<=", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("!=", CmpOp::Ne),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
            ("=", CmpOp::Eq),
        ] {
            if self.eat(s) {
                return Ok(op);
            }
        }
        Err(self.error("expected a comparison operator"))
    }

    fn condition(&mut self) -> Result<Filter, QueryError> {
        self.skip_ws();
        if matches!(self.peek(), Some('?' | '$')) {
            let var = self.var()?;
            let op = self.op()?;
            let value = self
                .number()
                .ok_or_else(|| self.error("FILTER compares against a number"))?;
            Ok(Filter { var, op, value })
        } else {
            let value = self
                .number()
                .ok_or_else(|| self.error("expected a variable or number"))?;
            let op = self.op()?.flipped();
            let var = self.var()?;
            Ok(Filter { var, op, value })
        }
    }

    fn parse(mut self) -> Result<Query, QueryError> {
        while self.keyword("PREFIX") {
            self.skip_ws();
            let name = self.name().to_string();
            self.expect(":")?;
            self.skip_ws();
            let iri = self.iri_ref()?;
            self.prefixes.insert(name, iri);
        }
        if !self.keyword("SELECT") {
            return Err(self.error("expected SELECT"));
        }
        self.keyword("DISTINCT");
        let mut select_vars = Vec::new();
        loop {
            self.skip_ws();
            if !matches!(self.peek(), Some('?' | '$')) {
                break;
            }
            let v = self.var()?;
            if !select_vars.contains(&v) {
                select_vars.push(v);
            }
        }
        if select_vars.is_empty() {
            return Err(self.error("SELECT needs at least one variable"));
        }
        self.keyword("WHERE");
        self.expect("{")?;
        let body_start = self.pos;
        let mut patterns = Vec::new();
        let mut filters = Vec::new();
        let mut filter_pos = Vec::new();
        loop {
            self.skip_ws();
            if self.eat("}") {
                break;
            }
            if self.peek().is_none() {
                return Err(self.error("expected '}'"));
            }
            let at = self.pos;
            if self.keyword("FILTER") {
                self.expect("(")?;
                loop {
                    filter_pos.push(at);
                    filters.push(self.condition()?);
                    if !self.eat("&&") {
                        break;
                    }
                }
                self.expect(")")?;
            } else {
                let subject = self.term()?;
                let predicate = self.term()?;
                let object = self.term()?;
                patterns.push(TriplePattern {
                    subject,
                    predicate,
                    object,
                });
            }
            self.eat(".");
        }
        if patterns.is_empty() {
            return Err(self.error_at(body_start, "query body has no triple pattern"));
        }
        let limit = if self.keyword("LIMIT") {
            self.skip_ws();
            let start = self.pos;
            let digits = self
                .rest()
                .find(|c: char| !c.is_ascii_digit())
                .unwrap_or(self.rest().len());
            self.pos += digits;
            match self.src[start..self.pos].parse::<usize>() {
                Ok(n) if n > 0 => Some(n),
                _ => return Err(self.error_at(start, "LIMIT needs a positive integer")),
            }
        } else {
            None
        };
        self.skip_ws();
        if self.peek().is_some() {
            return Err(self.error("unexpected trailing input"));
        }

        let q = Query {
            prefixes: self.prefixes,
            select_vars,
            patterns,
            filters,
            limit,
        };
        let bound = q.pattern_vars();
        if let Some(f) = q.filters.iter().find(|f| !bound.contains(&f.var.as_str())) {
            return Err(QueryError::UnboundFilter(f.var.clone()));
        }
        if let Some(v) = q.select_vars.iter().find(|v| !bound.contains(&v.as_str())) {
            return Err(QueryError::UnboundVariable(v.clone()));
        }
        Ok(q)
    }
}

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    Parser {
        src: text,
        pos: 0,
        prefixes: BTreeMap::new(),
    }
    .parse()
}
