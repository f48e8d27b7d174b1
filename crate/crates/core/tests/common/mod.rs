//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use battlink::graph::{CmpOp, Filter, LiteralValue, PatternTerm, Query, TriplePattern};
use battlink::semantic::{Term, Triple};
use rand::rngs::StdRng;
use rand::Rng;

/// Nested-loop evaluation: try every triple for every pattern.
pub fn brute_force(triples: &[Triple], q: &Query) -> Vec<Vec<Term>> {
    let unique: BTreeSet<&Triple> = triples.iter().collect();
    let all: Vec<&Triple> = unique.into_iter().collect();
    let mut solutions: Vec<Vec<(String, Term)>> = vec![Vec::new()];
    for p in &q.patterns {
        let mut next = Vec::new();
        for sol in &solutions {
            for t in &all {
                let mut s = sol.clone();
                let positions = [
                    (&p.subject, Term::Iri(t.subject.clone())),
                    (&p.predicate, Term::Iri(t.predicate.clone())),
                    (&p.object, t.object.clone()),
                ];
                if positions.into_iter().all(|(pt, value)| unify(pt, value, &mut s)) {
                    next.push(s);
                }
            }
        }
        solutions = next;
    }
    let lookup = |s: &Vec<(String, Term)>, v: &str| s.iter().find(|(k, _)| k == v).map(|(_, t)| t.clone());
    let mut rows: Vec<(String, Vec<Term>)> = solutions
        .iter()
        .filter(|s| {
            q.filters.iter().all(|f| match lookup(s, &f.var) {
                Some(Term::Number { value, .. }) => compare(value, f.op, f.value),
                _ => false,
            })
        })
        .map(|s| {
            let row: Vec<Term> = q.select_vars.iter().map(|v| lookup(s, v).unwrap()).collect();
            (row.iter().map(|t| t.to_ntriples()).collect::<Vec<_>>().join("\t"), row)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.dedup_by(|a, b| a.0 == b.0);
    if let Some(n) = q.limit {
        rows.truncate(n);
    }
    rows.into_iter().map(|(_, r)| r).collect()
}

fn compare(a: f64, op: CmpOp, b: f64) -> bool {
    match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Ge => a >= b,
        CmpOp::Gt => a > b,
    }
}

fn unify(pt: &PatternTerm, value: Term, s: &mut Vec<(String, Term)>) -> bool {
    match pt {
        PatternTerm::Var(v) => match s.iter().find(|(k, _)| k == v) {
            Some((_, existing)) => *existing == value,
            None => {
                s.push((v.clone(), value));
                true
            }
        },
        PatternTerm::Iri(i) => value == Term::Iri(i.clone()),
        PatternTerm::Literal(LiteralValue::Text(x)) => value == Term::Text(x.clone()),
        PatternTerm::Literal(LiteralValue::Number(x)) => {
            matches!(value, Term::Number { value, .. } if value == *x)
        }
    }
}

const NS: &str = "https://example.org/";

fn subject(rng: &mut StdRng) -> String {
    format!("{NS}s{}", rng.random_range(0..10))
}

fn predicate(rng: &mut StdRng) -> String {
    format!("{NS}p{}", rng.random_range(0..5))
}

fn object(rng: &mut StdRng) -> Term {
    match rng.random_range(0..3) {
        0 => Term::Iri(subject(rng)),
        1 => Term::Text(format!("t{}", rng.random_range(0..4))),
        _ => {
            let unit = match rng.random_range(0..3) {
                0 => None,
                1 => Some(format!("{NS}unitA")),
                _ => Some(format!("{NS}unitB")),
            };
            Term::Number {
                value: f64::from(rng.random_range(0..6)) * 0.5,
                unit,
            }
        }
    }
}

pub fn random_store(rng: &mut StdRng, max: usize) -> Vec<Triple> {
    let n = rng.random_range(0..=max);
    (0..n)
        .map(|_| Triple::new(subject(rng), predicate(rng), object(rng)))
        .collect()
}

const VARS: [&str; 4] = ["a", "b", "c", "d"];

fn var(rng: &mut StdRng) -> PatternTerm {
    PatternTerm::Var(VARS[rng.random_range(0..VARS.len())].to_string())
}

pub fn random_query(rng: &mut StdRng) -> Query {
    let n = rng.random_range(1..=3);
    let mut patterns = Vec::new();
    for i in 0..n {
        let s = if i == 0 || rng.random_bool(0.6) {
            var(rng)
        } else {
            PatternTerm::Iri(subject(rng))
        };
        let p = if rng.random_bool(0.3) {
            var(rng)
        } else {
            PatternTerm::Iri(predicate(rng))
        };
        let o = if rng.random_bool(0.6) {
            var(rng)
        } else {
            match object(rng) {
                Term::Iri(i) => PatternTerm::Iri(i),
                Term::Text(t) => PatternTerm::Literal(LiteralValue::Text(t)),
                Term::Number { value, .. } => PatternTerm::Literal(LiteralValue::Number(value)),
            }
        };
        patterns.push(TriplePattern {
            subject: s,
            predicate: p,
            object: o,
        });
    }
    let mut bound: Vec<String> = Vec::new();
    for p in &patterns {
        for t in [&p.subject, &p.predicate, &p.object] {
            if let PatternTerm::Var(v) = t {
                if !bound.contains(v) {
                    bound.push(v.clone());
                }
            }
        }
    }
    let mut select_vars: Vec<String> = bound.iter().filter(|_| rng.random_bool(0.6)).cloned().collect();
    if select_vars.is_empty() {
        select_vars.push(bound[0].clone());
    }
    let ops = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt];
    let filters = (0..rng.random_range(0..=2))
        .map(|_| Filter {
            var: bound[rng.random_range(0..bound.len())].clone(),
            op: ops[rng.random_range(0..ops.len())],
            value: f64::from(rng.random_range(0..6)) * 0.5,
        })
        .collect();
    let limit = rng.random_bool(0.3).then(|| rng.random_range(1..10));
    Query {
        prefixes: Default::default(),
        select_vars,
        patterns,
        filters,
        limit,
    }
}

/// Tokens of `text` by the documented rules, for texts that contain no
/// DOI: lower-case, separators to spaces, everything else non-alphanumeric
/// removed.
pub fn naive_tokens(text: &str) -> Vec<String> {
    let mapped: String = text
        .to_lowercase()
        .chars()
        .filter_map(|c| match c {
            '-' | '_' => Some(' '),
            c if c.is_whitespace() => Some(' '),
            c if c.is_alphanumeric() => Some(c),
            _ => None,
        })
        .collect();
    mapped.split_whitespace().map(str::to_string).collect()
}

/// Start positions where `needle` occurs as a contiguous run in `hay`.
pub fn naive_find(hay: &[String], needle: &[String]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return Vec::new();
    }
    (0..=hay.len() - needle.len())
        .filter(|&i| hay[i..i + needle.len()] == *needle)
        .collect()
}

/// A generated corpus and the mentions planted into it.
pub struct PlantedCorpus {
    pub docs: Vec<battlink::corpus::Document>,
    /// cell → (normalized DOIs, doc ids without DOI) that were planted.
    pub truth: std::collections::BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)>,
}

const FILLER: [&str; 24] = [
    "the",
    "capacity",
    "was",
    "measured",
    "after",
    "cycling",
    "at",
    "room",
    "temperature",
    "and",
    "impedance",
    "grew",
    "cathode",
    "anode",
    "electrolyte",
    "we",
    "observe",
    "fade",
    "under",
    "fast",
    "charging",
    "of",
    "commercial",
    "cells",
];

fn vary(rng: &mut StdRng, alias: &str) -> String {
    let words: Vec<&str> = alias.split([' ', '-', '_']).collect();
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            out.push_str(["-", "_", " ", "  ", " - ", "\t"][rng.random_range(0..6)]);
        }
        let cased = match rng.random_range(0..3) {
            0 => w.to_uppercase(),
            1 => w.to_lowercase(),
            _ => w.to_string(),
        };
        out.push_str(&cased);
    }
    match rng.random_range(0..4) {
        0 => format!("({out})"),
        1 => format!("{out},"),
        2 => format!("{out}."),
        _ => out,
    }
}

/// `n` documents of filler text; each mentions zero to two cells through
/// case and separator variants of their aliases.
pub fn planted_corpus(rng: &mut StdRng, n: usize, aliases: &[(String, Vec<String>)]) -> PlantedCorpus {
    let mut docs = Vec::with_capacity(n);
    let mut truth: std::collections::BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)> = Default::default();
    for i in 0..n {
        let doc_id = format!("doc{i:05}");
        let doi = (!rng.random_bool(0.1)).then(|| {
            let core = format!("10.5555/Synth.{i:05}");
            if rng.random_bool(0.3) {
                format!("https://doi.org/{core}")
            } else {
                core
            }
        });
        let mut words: Vec<String> = (0..rng.random_range(5..60))
            .map(|_| FILLER[rng.random_range(0..FILLER.len())].to_string())
            .collect();
        for _ in 0..rng.random_range(0..=2) {
            let (cell, list) = &aliases[rng.random_range(0..aliases.len())];
            let alias = &list[rng.random_range(0..list.len())];
            let at = rng.random_range(0..=words.len());
            words.insert(at, vary(rng, alias));
            let entry = truth.entry(cell.clone()).or_default();
            match &doi {
                Some(d) => entry.0.insert(battlink::semantic::normalize_doi(d)),
                None => entry.1.insert(doc_id.clone()),
            };
        }
        docs.push(battlink::corpus::Document {
            doc_id,
            doi,
            text: words.join(" "),
        });
    }
    PlantedCorpus { docs, truth }
}

fn word(rng: &mut StdRng, alphabet: &[u8], len: std::ops::Range<usize>) -> String {
    let n = rng.random_range(len);
    (0..n)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())] as char)
        .collect()
}

const ALNUM: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 -";

/// A valid, normalized cell record with every optional part exercised.
pub fn random_record(rng: &mut StdRng, n: usize) -> battlink::semantic::CellRecord {
    use battlink::semantic::{CellRecord, Extension};
    let lo = rng.random_range(0.0..4.0);
    let mut r = CellRecord::new(
        format!("https://example.org/cell/{n}"),
        format!("M{}", word(rng, ALNUM, 0..12)),
        format!("P{}", word(rng, ALNUM, 0..12)),
        rng.random_range(1e-3..500.0),
        lo,
        lo + rng.random_range(1e-3..3.0),
    );
    r.temp_min_c = rng.random_bool(0.5).then(|| rng.random_range(-60.0..0.0));
    r.temp_max_c = rng.random_bool(0.5).then(|| rng.random_range(0.0..90.0));
    r.positive_material = rng.random_bool(0.5).then(|| word(rng, ALNUM, 1..10));
    r.negative_material = rng.random_bool(0.5).then(|| word(rng, ALNUM, 1..10));
    r.citation = rng.random_bool(0.5).then(|| format!("{}.pdf", word(rng, ALNUM, 1..10)));
    for _ in 0..rng.random_range(0..5) {
        let doi = format!(
            "10.{}/{}",
            rng.random_range(1000..99999),
            word(rng, b"abcXYZ019.", 1..8)
        );
        r.paper_dois.push(if rng.random_bool(0.3) {
            format!("https://doi.org/{doi}")
        } else {
            doi
        });
    }
    for _ in 0..rng.random_range(0..3) {
        let predicate = format!("https://example.org/ext/{}", word(rng, b"abcdefgh", 1..6));
        let object = match rng.random_range(0..3) {
            0 => Term::Text(word(rng, ALNUM, 0..10)),
            1 => Term::Iri(format!("https://example.org/thing/{}", word(rng, b"xyz", 1..4))),
            _ => Term::Number {
                value: rng.random_range(-1e3..1e3),
                unit: None,
            },
        };
        r.extensions.push(Extension { predicate, object });
    }
    r.normalize();
    r
}
