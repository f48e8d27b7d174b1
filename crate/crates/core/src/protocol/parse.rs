use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use serde::de::{self, Deserializer, IgnoredAny, MapAccess, Visitor};
use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{InstructionBlock, Parameter, Protocol, Step, StepKind, Termination, TerminationKind, Unit, ValueRef};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: unknown type {found:?}")]
    UnknownKind { path: String, found: String },
    #[error("{path}: unknown unit {found:?}")]
    UnknownUnit { path: String, found: String },
    #[error("{path}: expected {expected}")]
    TypeMismatch { path: String, expected: &'static str },
    #[error("{path}: repeat must be a positive integer, got {found}")]
    InvalidRepeat { path: String, found: String },
    #[error("{path}: missing required field {field:?}")]
    MissingField { path: String, field: &'static str },
    #[error("{path}: unexpected field {field:?}")]
    UnknownField { path: String, field: String },
    #[error("parameter {0:?} is defined more than once")]
    DuplicateParameter(String),
}

impl ParseError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ParseError::Json { .. } => "PARSE_ERROR",
            ParseError::UnknownKind { .. } => "UNKNOWN_KIND",
            ParseError::UnknownUnit { .. } => "UNKNOWN_UNIT",
            ParseError::TypeMismatch { .. } => "TYPE_MISMATCH",
            ParseError::InvalidRepeat { .. } => "INVALID_REPEAT",
            ParseError::MissingField { .. } => "MISSING_FIELD",
            ParseError::UnknownField { .. } => "UNKNOWN_FIELD",
            ParseError::DuplicateParameter(_) => "DUPLICATE_PARAMETER",
        }
    }
}

type Result<T> = std::result::Result<T, ParseError>;

const TOP_LEVEL_KEYS: [&str; 6] = ["name", "subjectOf", "id", "citation", "parameters", "instructions"];

/// Parses a BCL document.
///
/// Unknown top-level keys are kept in [`Protocol::extra`]; unknown keys
/// anywhere below the top level are rejected.
pub fn parse_protocol(text: &str) -> Result<Protocol> {
    let root: Value = serde_json::from_str(text).map_err(|e| ParseError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let obj = root.as_object().ok_or(ParseError::TypeMismatch {
        path: "$".into(),
        expected: "an object",
    })?;

    // serde_json keeps only the last duplicate key, so probe the raw text.
    let probe: ParameterKeyProbe = serde_json::from_str(text).unwrap_or_default();
    let mut seen = HashSet::new();
    for key in probe.parameters.0 {
        if !seen.insert(key.clone()) {
            return Err(ParseError::DuplicateParameter(key));
        }
    }

    let name = match obj.get("name") {
        Some(v) => expect_str(v, "name")?.to_string(),
        None => {
            return Err(ParseError::MissingField {
                path: "$".into(),
                field: "name",
            })
        }
    };
    let subject_of = optional_str(obj, "subjectOf")?;
    let id = optional_str(obj, "id")?;
    let citation = optional_str(obj, "citation")?;

    let parameters = match obj.get("parameters") {
        None | Some(Value::Null) => IndexMap::new(),
        Some(Value::Object(map)) => parse_parameters(map)?,
        Some(_) => {
            return Err(ParseError::TypeMismatch {
                path: "parameters".into(),
                expected: "an object",
            })
        }
    };

    let instructions = match obj.get("instructions") {
        Some(Value::Array(blocks)) => blocks
            .iter()
            .enumerate()
            .map(|(i, b)| parse_block(b, &format!("instructions[{i}]")))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => {
            return Err(ParseError::TypeMismatch {
                path: "instructions".into(),
                expected: "an array",
            })
        }
        None => {
            return Err(ParseError::MissingField {
                path: "$".into(),
                field: "instructions",
            })
        }
    };

    let extra = obj
        .iter()
        .filter(|(k, _)| !TOP_LEVEL_KEYS.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    Ok(Protocol {
        name,
        subject_of,
        id,
        citation,
        parameters,
        instructions,
        extra,
    })
}

fn parse_parameters(map: &Map<String, Value>) -> Result<IndexMap<String, Parameter>> {
    let mut out = IndexMap::with_capacity(map.len());
    for (name, v) in map {
        let path = format!("parameters.{name}");
        let param = match v {
            Value::Number(_) => Parameter::bare(expect_number(v, &path)?),
            Value::Object(fields) => {
                reject_unknown(fields, &["value", "unit"], &path)?;
                let value = fields.get("value").ok_or(ParseError::MissingField {
                    path: path.clone(),
                    field: "value",
                })?;
                let unit = fields.get("unit").ok_or(ParseError::MissingField {
                    path: path.clone(),
                    field: "unit",
                })?;
                Parameter {
                    value: expect_number(value, &format!("{path}.value"))?,
                    unit: Some(parse_unit(unit, &format!("{path}.unit"))?),
                }
            }
            _ => {
                return Err(ParseError::TypeMismatch {
                    path,
                    expected: "a number or {value, unit}",
                })
            }
        };
        out.insert(name.clone(), param);
    }
    Ok(out)
}

fn parse_block(v: &Value, path: &str) -> Result<InstructionBlock> {
    let obj = v.as_object().ok_or(ParseError::TypeMismatch {
        path: path.into(),
        expected: "an object",
    })?;
    reject_unknown(obj, &["sequence", "name", "repeat"], path)?;

    let sequence = match obj.get("sequence") {
        Some(Value::Array(steps)) => steps
            .iter()
            .enumerate()
            .map(|(i, s)| parse_step(s, &format!("{path}.sequence[{i}]")))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => {
            return Err(ParseError::TypeMismatch {
                path: format!("{path}.sequence"),
                expected: "an array",
            })
        }
        None => {
            return Err(ParseError::MissingField {
                path: path.into(),
                field: "sequence",
            })
        }
    };
    let name = match obj.get("name") {
        None | Some(Value::Null) => None,
        Some(v) => Some(expect_str(v, &format!("{path}.name"))?.to_string()),
    };
    let repeat = match obj.get("repeat") {
        None => 1,
        Some(v) => parse_repeat(v, &format!("{path}.repeat"))?,
    };
    Ok(InstructionBlock { name, repeat, sequence })
}

fn parse_repeat(v: &Value, path: &str) -> Result<u32> {
    let Value::Number(n) = v else {
        return Err(ParseError::TypeMismatch {
            path: path.into(),
            expected: "an integer",
        });
    };
    if let Some(i) = n.as_i64() {
        return if i >= 1 && i <= u32::MAX as i64 {
            Ok(i as u32)
        } else {
            Err(ParseError::InvalidRepeat {
                path: path.into(),
                found: i.to_string(),
            })
        };
    }
    if n.as_u64().is_some() {
        return Err(ParseError::InvalidRepeat {
            path: path.into(),
            found: n.to_string(),
        });
    }
    // Floats are accepted only when integral, e.g. 400.0.
    let f = n.as_f64().unwrap_or(f64::NAN);
    if f.fract() != 0.0 {
        return Err(ParseError::TypeMismatch {
            path: path.into(),
            expected: "an integer",
        });
    }
    if f < 1.0 || f > u32::MAX as f64 {
        return Err(ParseError::InvalidRepeat {
            path: path.into(),
            found: n.to_string(),
        });
    }
    Ok(f as u32)
}

fn parse_step(v: &Value, path: &str) -> Result<Step> {
    let obj = v.as_object().ok_or(ParseError::TypeMismatch {
        path: path.into(),
        expected: "an object",
    })?;
    reject_unknown(obj, &["type", "value", "unit", "termination"], path)?;

    let kind_str = require_str(obj, "type", path)?;
    let kind = StepKind::from_name(kind_str).ok_or_else(|| ParseError::UnknownKind {
        path: format!("{path}.type"),
        found: kind_str.to_string(),
    })?;
    let value = parse_value_ref(require(obj, "value", path)?, &format!("{path}.value"))?;
    let unit = parse_unit(require(obj, "unit", path)?, &format!("{path}.unit"))?;
    let terminations = match obj.get("termination") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, t)| parse_termination(t, &format!("{path}.termination[{i}]")))
            .collect::<Result<Vec<_>>>()?,
        Some(_) => {
            return Err(ParseError::TypeMismatch {
                path: format!("{path}.termination"),
                expected: "an array",
            })
        }
    };
    Ok(Step {
        kind,
        value,
        unit,
        terminations,
    })
}

fn parse_termination(v: &Value, path: &str) -> Result<Termination> {
    let obj = v.as_object().ok_or(ParseError::TypeMismatch {
        path: path.into(),
        expected: "an object",
    })?;
    reject_unknown(obj, &["type", "value", "unit"], path)?;
    let kind_str = require_str(obj, "type", path)?;
    let kind = TerminationKind::from_name(kind_str).ok_or_else(|| ParseError::UnknownKind {
        path: format!("{path}.type"),
        found: kind_str.to_string(),
    })?;
    let value = parse_value_ref(require(obj, "value", path)?, &format!("{path}.value"))?;
    let unit = parse_unit(require(obj, "unit", path)?, &format!("{path}.unit"))?;
    Ok(Termination { kind, value, unit })
}

fn parse_value_ref(v: &Value, path: &str) -> Result<ValueRef> {
    match v {
        Value::Number(_) => Ok(ValueRef::Literal(expect_number(v, path)?)),
        Value::String(s) => Ok(ValueRef::Parameter(s.clone())),
        _ => Err(ParseError::TypeMismatch {
            path: path.into(),
            expected: "a number or parameter name",
        }),
    }
}

fn parse_unit(v: &Value, path: &str) -> Result<Unit> {
    let s = expect_str(v, path)?;
    Unit::from_name(s).ok_or_else(|| ParseError::UnknownUnit {
        path: path.into(),
        found: s.into(),
    })
}

fn require<'a>(obj: &'a Map<String, Value>, field: &'static str, path: &str) -> Result<&'a Value> {
    obj.get(field).ok_or(ParseError::MissingField {
        path: path.into(),
        field,
    })
}

fn require_str<'a>(obj: &'a Map<String, Value>, field: &'static str, path: &str) -> Result<&'a str> {
    expect_str(require(obj, field, path)?, &format!("{path}.{field}"))
}

fn optional_str(obj: &Map<String, Value>, field: &str) -> Result<Option<String>> {
    match obj.get(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => Ok(Some(expect_str(v, field)?.to_string())),
    }
}

fn expect_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or(ParseError::TypeMismatch {
        path: path.into(),
        expected: "a string",
    })
}

fn expect_number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().filter(|f| f.is_finite()).ok_or(ParseError::TypeMismatch {
        path: path.into(),
        expected: "a finite number",
    })
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ParseError::UnknownField {
            path: path.into(),
            field: k.clone(),
        }),
        None => Ok(()),
    }
}

/// Collects the raw keys of the top-level "parameters" object, duplicates included.
#[derive(Default, Deserialize)]
struct ParameterKeyProbe {
    #[serde(default)]
    parameters: KeyList,
}

#[derive(Default)]
struct KeyList(Vec<String>);

impl<'de> Deserialize<'de> for KeyList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct KeyVisitor;

        impl<'de> Visitor<'de> for KeyVisitor {
            type Value = KeyList;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("any JSON value")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<KeyList, A::Error> {
                let mut keys = Vec::new();
                while let Some((k, _)) = map.next_entry::<String, IgnoredAny>()? {
                    keys.push(k);
                }
                Ok(KeyList(keys))
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<KeyList, A::Error> {
                while seq.next_element::<IgnoredAny>()?.is_some() {}
                Ok(KeyList::default())
            }

            fn visit_bool<E>(self, _: bool) -> std::result::Result<KeyList, E> {
                Ok(KeyList::default())
            }
            fn visit_i64<E>(self, _: i64) -> std::result::Result<KeyList, E> {
                Ok(KeyList::default())
            }
            fn visit_u64<E>(self, _: u64) -> std::result::Result<KeyList, E> {
                Ok(KeyList::default())
            }
            fn visit_f64<E>(self, _: f64) -> std::result::Result<KeyList, E> {
                Ok(KeyList::default())
            }
            fn visit_str<E>(self, _: &str) -> std::result::Result<KeyList, E> {
                Ok(KeyList::default())
            }
            fn visit_unit<E>(self) -> std::result::Result<KeyList, E> {
                Ok(KeyList::default())
            }
        }

        d.deserialize_any(KeyVisitor)
    }
}
