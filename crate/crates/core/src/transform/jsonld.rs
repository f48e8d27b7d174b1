//! JSON-LD export of protocols.
//!
//! The body is written with short term names; the emitted `@context` maps
//! exactly the terms the body uses, so the document expands without any
//! external context. Unit names are expanded as vocabulary terms.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::protocol::{Protocol, Step, Termination, ValueRef, CAPACITY};
use crate::semantic::ContextMap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JsonLdError {
    #[error("term {0:?} has no IRI in the context map")]
    MissingContextTerm(String),
}

/// Key under which the rated capacity parameter is published.
const RATED_CAPACITY: &str = "RatedCapacity";

fn number(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn value_ref(v: &ValueRef) -> Value {
    match v {
        ValueRef::Literal(x) => number(*x),
        ValueRef::Parameter(name) => Value::from(name.as_str()),
    }
}

fn termination(t: &Termination) -> Value {
    let mut m = Map::new();
    m.insert("@type".into(), Value::from(t.kind.as_str()));
    m.insert("value".into(), value_ref(&t.value));
    m.insert("unit".into(), Value::from(t.unit.as_str()));
    Value::Object(m)
}

fn step(s: &Step) -> Value {
    let mut m = Map::new();
    m.insert("@type".into(), Value::from(s.kind.as_str()));
    m.insert("value".into(), value_ref(&s.value));
    m.insert("unit".into(), Value::from(s.unit.as_str()));
    if !s.terminations.is_empty() {
        m.insert(
            "termination".into(),
            Value::Array(s.terminations.iter().map(termination).collect()),
        );
    }
    Value::Object(m)
}

/// Fallback `@id` for protocols without one.
fn generated_id(name: &str) -> String {
    let mut out = String::from("urn:battlink:protocol:");
    for b in name.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

fn body(p: &Protocol) -> Map<String, Value> {
    let mut root = Map::new();
    root.insert(
        "@id".into(),
        Value::from(p.id.clone().unwrap_or_else(|| generated_id(&p.name))),
    );
    root.insert("@type".into(), Value::from("CyclingProcedure"));
    root.insert("name".into(), Value::from(p.name.as_str()));
    if let Some(s) = &p.subject_of {
        root.insert("subjectOf".into(), Value::from(s.as_str()));
    }
    if let Some(c) = &p.citation {
        root.insert("citation".into(), Value::from(c.as_str()));
    }

    let mut params = Map::new();
    for (name, param) in &p.parameters {
        let mut q = Map::new();
        q.insert("value".into(), number(param.value));
        let (key, unit) = match name.as_str() {
            CAPACITY => (RATED_CAPACITY, Some("AmpereHour")),
            crate::protocol::LOWER_CUTOFF_VOLTAGE | crate::protocol::UPPER_CUTOFF_VOLTAGE => {
                (name.as_str(), Some("Volt"))
            }
            _ => (name.as_str(), param.unit.map(|u| u.as_str())),
        };
        if let Some(u) = unit {
            q.insert("unit".into(), Value::from(u));
        }
        params.insert(key.to_string(), Value::Object(q));
    }
    root.insert("parameters".into(), Value::Object(params));

    let blocks = p
        .instructions
        .iter()
        .map(|b| {
            let mut m = Map::new();
            m.insert("@type".into(), Value::from("InstructionBlock"));
            if let Some(n) = &b.name {
                m.insert("name".into(), Value::from(n.as_str()));
            }
            m.insert("repeat".into(), Value::from(b.repeat));
            m.insert("sequence".into(), Value::Array(b.sequence.iter().map(step).collect()));
            Value::Object(m)
        })
        .collect();
    root.insert("instructions".into(), Value::Array(blocks));

    for (k, v) in &p.extra {
        if !k.starts_with('@') {
            root.insert(k.clone(), v.clone());
        }
    }
    root
}

/// Collects every term the body relies on: non-`@` keys, `@type` values
/// and the values of `unit` keys.
fn used_terms(v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, child) in m {
                if !k.starts_with('@') {
                    out.push(k.clone());
                }
                if k == "@type" || k == "unit" {
                    if let Some(s) = child.as_str() {
                        out.push(s.to_string());
                    }
                }
                used_terms(child, out);
            }
        }
        Value::Array(items) => items.iter().for_each(|i| used_terms(i, out)),
        _ => {}
    }
}

/// Builds a self-contained JSON-LD document for `p`.
pub fn emit_protocol_jsonld(p: &Protocol, ctx: &ContextMap) -> Result<String, JsonLdError> {
    let body = body(p);
    let mut terms = Vec::new();
    used_terms(&Value::Object(body.clone()), &mut terms);
    terms.sort();
    terms.dedup();

    let mut context = Map::new();
    for term in terms {
        let iri = ctx
            .expand_key(&term)
            .ok_or_else(|| JsonLdError::MissingContextTerm(term.clone()))?;
        let entry = if term == "unit" {
            serde_json::json!({"@id": iri, "@type": "@vocab"})
        } else {
            Value::from(iri)
        };
        context.insert(term, entry);
    }

    let mut root = Map::new();
    root.insert("@context".into(), Value::Object(context));
    root.extend(body);
    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values always serialize");
    out.push('\n');
    Ok(out)
}
