use serde_json::{Map, Value};

use super::{InstructionBlock, Parameter, Protocol, Step, Termination, ValueRef};

/// Renders a protocol as canonical BCL JSON.
///
/// Key order is fixed (name, subjectOf, id, citation, parameters,
/// instructions, then any preserved extra keys), indentation is two spaces,
/// `repeat` is omitted when it equals 1 and numbers use the shortest
/// representation that parses back to the same value.
pub fn serialize_protocol(p: &Protocol) -> String {
    let mut root = Map::new();
    root.insert("name".into(), Value::from(p.name.as_str()));
    if let Some(s) = &p.subject_of {
        root.insert("subjectOf".into(), Value::from(s.as_str()));
    }
    if let Some(s) = &p.id {
        root.insert("id".into(), Value::from(s.as_str()));
    }
    if let Some(s) = &p.citation {
        root.insert("citation".into(), Value::from(s.as_str()));
    }
    let params: Map<String, Value> = p
        .parameters
        .iter()
        .map(|(k, v)| (k.clone(), parameter_value(v)))
        .collect();
    root.insert("parameters".into(), Value::Object(params));
    root.insert(
        "instructions".into(),
        Value::Array(p.instructions.iter().map(block_value).collect()),
    );
    for (k, v) in &p.extra {
        root.insert(k.clone(), v.clone());
    }
    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values always serialize");
    out.push('\n');
    out
}

fn number(v: f64) -> Value {
    // Non-finite values never survive parsing, so this only guards hand-built protocols.
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn parameter_value(p: &Parameter) -> Value {
    match p.unit {
        None => number(p.value),
        Some(u) => {
            let mut m = Map::new();
            m.insert("value".into(), number(p.value));
            m.insert("unit".into(), Value::from(u.as_str()));
            Value::Object(m)
        }
    }
}

fn value_ref(v: &ValueRef) -> Value {
    match v {
        ValueRef::Literal(x) => number(*x),
        ValueRef::Parameter(name) => Value::from(name.as_str()),
    }
}

fn block_value(b: &InstructionBlock) -> Value {
    let mut m = Map::new();
    m.insert(
        "sequence".into(),
        Value::Array(b.sequence.iter().map(step_value).collect()),
    );
    if let Some(name) = &b.name {
        m.insert("name".into(), Value::from(name.as_str()));
    }
    if b.repeat != 1 {
        m.insert("repeat".into(), Value::from(b.repeat));
    }
    Value::Object(m)
}

fn step_value(s: &Step) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), Value::from(s.kind.as_str()));
    m.insert("value".into(), value_ref(&s.value));
    m.insert("unit".into(), Value::from(s.unit.as_str()));
    if !s.terminations.is_empty() {
        m.insert(
            "termination".into(),
            Value::Array(s.terminations.iter().map(termination_value).collect()),
        );
    }
    Value::Object(m)
}

fn termination_value(t: &Termination) -> Value {
    let mut m = Map::new();
    m.insert("type".into(), Value::from(t.kind.as_str()));
    m.insert("value".into(), value_ref(&t.value));
    m.insert("unit".into(), Value::from(t.unit.as_str()));
    Value::Object(m)
}
