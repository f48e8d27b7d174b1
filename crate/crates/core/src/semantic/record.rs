//! Cell datasheet records and their fixed triple mapping.
//!
//! | order | predicate (context term) | object                                  | present          |
//! |-------|--------------------------|-----------------------------------------|------------------|
//! | 1     | `type`                   | IRI of `BatteryCell`                    | always           |
//! | 2     | `Manufacturer`           | text                                    | always           |
//! | 3     | `name`                   | text                                    | always           |
//! | 4     | `RatedCapacity`          | number, unit `AmpereHour`               | always           |
//! | 5     | `LowerCutoffVoltage`     | number, unit `Volt`                     | always           |
//! | 6     | `UpperCutoffVoltage`     | number, unit `Volt`                     | always           |
//! | 7     | `MinimumTemperature`     | number, unit `DegreeCelsius`            | if set           |
//! | 8     | `MaximumTemperature`     | number, unit `DegreeCelsius`            | if set           |
//! | 9     | `PositiveElectrode`      | text                                    | if set           |
//! | 10    | `NegativeElectrode`      | text                                    | if set           |
//! | 11    | `citation`               | text                                    | if set           |
//! | 12    | `isReferencedBy`         | text, one per DOI in sorted order       | per DOI          |
//! | 13    | extension predicates     | as given, sorted                        | per extension    |

use std::collections::BTreeMap;

use serde_json::{Map, Value};
use thiserror::Error;

use super::context::{is_absolute_iri, ContextMap};
use super::triples::{Term, Triple};

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub predicate: String,
    pub object: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    pub id: String,
    pub manufacturer: String,
    pub product_name: String,
    pub rated_capacity_ah: f64,
    pub lower_cutoff_v: f64,
    pub upper_cutoff_v: f64,
    pub temp_min_c: Option<f64>,
    pub temp_max_c: Option<f64>,
    pub positive_material: Option<String>,
    pub negative_material: Option<String>,
    pub citation: Option<String>,
    /// Lower-cased, unique, sorted.
    pub paper_dois: Vec<String>,
    /// Statements without a dedicated field, sorted and unique.
    pub extensions: Vec<Extension>,
}

#[derive(Debug, Error)]
pub enum CellError {
    #[error("cell record is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cell record must be a JSON object")]
    NotAnObject,
    #[error("cell record has no @id")]
    MissingId,
    #[error("@id {0:?} is not an absolute IRI")]
    BadId(String),
    #[error("rated capacity must be present and positive")]
    BadCapacity,
    #[error("lower cut-off voltage {lower} must be below upper cut-off voltage {upper}")]
    BadVoltageWindow { lower: f64, upper: f64 },
    #[error("missing required field {0:?}")]
    MissingField(&'static str),
    #[error("field {field:?}: expected {expected}")]
    TypeMismatch { field: String, expected: &'static str },
    #[error("field {field:?}: unit {found:?} is not {expected}")]
    UnitMismatch {
        field: String,
        found: String,
        expected: &'static str,
    },
    #[error("key {0:?} cannot be mapped to an IRI")]
    UnmappedKey(String),
    #[error("expected exactly one cell subject, found {0}")]
    AmbiguousSubject(usize),
    #[error("field {0:?} has conflicting values")]
    ConflictingField(String),
}

/// Lower-cases a DOI and strips resolver prefixes.
pub fn normalize_doi(doi: &str) -> String {
    let lower = doi.trim().to_lowercase();
    for prefix in [
        "https://doi.org/",
        "http://doi.org/",
        "https://dx.doi.org/",
        "http://dx.doi.org/",
        "doi:",
    ] {
        if let Some(rest) = lower.strip_prefix(prefix) {
            return rest.trim().to_string();
        }
    }
    lower
}

fn extension_key(e: &Extension) -> (String, String) {
    (e.predicate.clone(), e.object.to_ntriples())
}

impl CellRecord {
    /// Minimal record with the required fields.
    pub fn new(
        id: impl Into<String>,
        manufacturer: impl Into<String>,
        product_name: impl Into<String>,
        rated_capacity_ah: f64,
        lower_cutoff_v: f64,
        upper_cutoff_v: f64,
    ) -> Self {
        CellRecord {
            id: id.into(),
            manufacturer: manufacturer.into(),
            product_name: product_name.into(),
            rated_capacity_ah,
            lower_cutoff_v,
            upper_cutoff_v,
            temp_min_c: None,
            temp_max_c: None,
            positive_material: None,
            negative_material: None,
            citation: None,
            paper_dois: Vec::new(),
            extensions: Vec::new(),
        }
    }

    /// Restores the ordering and uniqueness invariants on DOIs and extensions.
    pub fn normalize(&mut self) {
        for d in &mut self.paper_dois {
            *d = normalize_doi(d);
        }
        self.paper_dois.sort();
        self.paper_dois.dedup();
        self.extensions.sort_by_key(extension_key);
        self.extensions.dedup_by(|a, b| extension_key(a) == extension_key(b));
    }

    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<(), CellError> {
        if !is_absolute_iri(&self.id) {
            return Err(CellError::BadId(self.id.clone()));
        }
        if !(self.rated_capacity_ah > 0.0 && self.rated_capacity_ah.is_finite()) {
            return Err(CellError::BadCapacity);
        }
        if !(self.lower_cutoff_v < self.upper_cutoff_v) {
            return Err(CellError::BadVoltageWindow {
                lower: self.lower_cutoff_v,
                upper: self.upper_cutoff_v,
            });
        }
        Ok(())
    }

    /// Adds DOIs, keeping the list normalized. Returns how many were new.
    pub fn add_dois<'a>(&mut self, dois: impl IntoIterator<Item = &'a str>) -> usize {
        let before = self.paper_dois.len();
        self.paper_dois.extend(dois.into_iter().map(normalize_doi));
        self.normalize();
        self.paper_dois.len() - before
    }

    fn numeric_fields(&self) -> impl Iterator<Item = (&'static str, &'static str, f64)> + '_ {
        [
            ("RatedCapacity", "AmpereHour", Some(self.rated_capacity_ah)),
            ("LowerCutoffVoltage", "Volt", Some(self.lower_cutoff_v)),
            ("UpperCutoffVoltage", "Volt", Some(self.upper_cutoff_v)),
            ("MinimumTemperature", "DegreeCelsius", self.temp_min_c),
            ("MaximumTemperature", "DegreeCelsius", self.temp_max_c),
        ]
        .into_iter()
        .filter_map(|(term, unit, v)| v.map(|v| (term, unit, v)))
    }

    fn text_fields(&self) -> impl Iterator<Item = (&'static str, &str)> + '_ {
        [
            ("PositiveElectrode", self.positive_material.as_deref()),
            ("NegativeElectrode", self.negative_material.as_deref()),
            ("citation", self.citation.as_deref()),
        ]
        .into_iter()
        .filter_map(|(term, v)| v.map(|v| (term, v)))
    }
}

const NUMERIC_FIELDS: [(&str, &str); 5] = [
    ("RatedCapacity", "AmpereHour"),
    ("LowerCutoffVoltage", "Volt"),
    ("UpperCutoffVoltage", "Volt"),
    ("MinimumTemperature", "DegreeCelsius"),
    ("MaximumTemperature", "DegreeCelsius"),
];

const TEXT_FIELDS: [&str; 5] = [
    "Manufacturer",
    "name",
    "PositiveElectrode",
    "NegativeElectrode",
    "citation",
];

/// Which record field a document key or predicate IRI addresses.
fn field_for<'a>(ctx: &ContextMap, key: &str, candidates: &[&'a str]) -> Option<&'a str> {
    candidates
        .iter()
        .copied()
        .find(|term| *term == key || ctx.iri(term) == Some(key))
}

/// Builds a record from a JSON-LD document, matching keys through `ctx`.
pub fn parse_cell_record(doc: &str, ctx: &ContextMap) -> Result<CellRecord, CellError> {
    let root: Value = serde_json::from_str(doc)?;
    let obj = root.as_object().ok_or(CellError::NotAnObject)?;
    let id = match obj.get("@id") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => {
            return Err(CellError::TypeMismatch {
                field: "@id".into(),
                expected: "a string",
            })
        }
        None => return Err(CellError::MissingId),
    };

    let mut numbers: BTreeMap<&str, f64> = BTreeMap::new();
    let mut texts: BTreeMap<&str, String> = BTreeMap::new();
    let mut dois = Vec::new();
    let mut extensions = Vec::new();

    for (key, value) in obj {
        if key.starts_with('@') {
            continue;
        }
        let numeric_terms: Vec<&str> = NUMERIC_FIELDS.iter().map(|(t, _)| *t).collect();
        if let Some(term) = field_for(ctx, key, &numeric_terms) {
            let unit = NUMERIC_FIELDS
                .iter()
                .find(|(t, _)| *t == term)
                .map(|(_, u)| *u)
                .unwrap();
            numbers.insert(term, numeric_value(ctx, key, value, unit)?);
        } else if let Some(term) = field_for(ctx, key, &TEXT_FIELDS) {
            let s = value.as_str().ok_or_else(|| CellError::TypeMismatch {
                field: key.clone(),
                expected: "a string",
            })?;
            texts.insert(term, s.to_string());
        } else if field_for(ctx, key, &["isReferencedBy"]).is_some() {
            match value {
                Value::String(s) => dois.push(s.clone()),
                Value::Array(items) => {
                    for item in items {
                        let s = item.as_str().ok_or_else(|| CellError::TypeMismatch {
                            field: key.clone(),
                            expected: "a list of DOI strings",
                        })?;
                        dois.push(s.to_string());
                    }
                }
                _ => {
                    return Err(CellError::TypeMismatch {
                        field: key.clone(),
                        expected: "a DOI string or list",
                    })
                }
            }
        } else {
            let predicate = ctx.expand_key(key).ok_or_else(|| CellError::UnmappedKey(key.clone()))?;
            for object in extension_objects(ctx, key, value)? {
                extensions.push(Extension {
                    predicate: predicate.clone(),
                    object,
                });
            }
        }
    }

    let mut record = CellRecord {
        id,
        manufacturer: texts
            .remove("Manufacturer")
            .ok_or(CellError::MissingField("Manufacturer"))?,
        product_name: texts.remove("name").ok_or(CellError::MissingField("name"))?,
        rated_capacity_ah: *numbers.get("RatedCapacity").ok_or(CellError::BadCapacity)?,
        lower_cutoff_v: *numbers
            .get("LowerCutoffVoltage")
            .ok_or(CellError::MissingField("LowerCutoffVoltage"))?,
        upper_cutoff_v: *numbers
            .get("UpperCutoffVoltage")
            .ok_or(CellError::MissingField("UpperCutoffVoltage"))?,
        temp_min_c: numbers.get("MinimumTemperature").copied(),
        temp_max_c: numbers.get("MaximumTemperature").copied(),
        positive_material: texts.remove("PositiveElectrode"),
        negative_material: texts.remove("NegativeElectrode"),
        citation: texts.remove("citation"),
        paper_dois: dois,
        extensions,
    };
    record.normalize();
    record.check()?;
    Ok(record)
}

fn unit_matches(ctx: &ContextMap, given: &str, expected: &str) -> bool {
    given == expected || ctx.iri(expected) == Some(given)
}

fn numeric_value(ctx: &ContextMap, key: &str, value: &Value, unit: &'static str) -> Result<f64, CellError> {
    let mismatch = || CellError::TypeMismatch {
        field: key.to_string(),
        expected: "a number or {value, unit}",
    };
    let n = match value {
        Value::Number(n) => n.as_f64(),
        Value::Object(m) => {
            if let Some(u) = m.get("unit") {
                let u = u.as_str().ok_or_else(mismatch)?;
                if !unit_matches(ctx, u, unit) {
                    return Err(CellError::UnitMismatch {
                        field: key.to_string(),
                        found: u.to_string(),
                        expected: unit,
                    });
                }
            }
            m.get("value").or_else(|| m.get("@value")).and_then(Value::as_f64)
        }
        _ => None,
    };
    n.filter(|v| v.is_finite()).ok_or_else(mismatch)
}

fn extension_objects(ctx: &ContextMap, key: &str, value: &Value) -> Result<Vec<Term>, CellError> {
    let bad = || CellError::TypeMismatch {
        field: key.to_string(),
        expected: "a string, number, {\"@id\": iri} or {value, unit}",
    };
    Ok(match value {
        Value::String(s) => vec![Term::text(s.as_str())],
        Value::Bool(b) => vec![Term::text(b.to_string())],
        Value::Number(n) => vec![Term::number(
            n.as_f64().filter(|v| v.is_finite()).ok_or_else(bad)?,
            None,
        )],
        Value::Array(items) => {
            let mut out = Vec::new();
            for item in items {
                out.extend(extension_objects(ctx, key, item)?);
            }
            out
        }
        Value::Object(m) => {
            if let Some(iri) = m.get("@id").and_then(Value::as_str) {
                if !is_absolute_iri(iri) {
                    return Err(bad());
                }
                vec![Term::iri(iri)]
            } else {
                let v = m
                    .get("value")
                    .or_else(|| m.get("@value"))
                    .and_then(Value::as_f64)
                    .ok_or_else(bad)?;
                let unit = match m.get("unit").and_then(Value::as_str) {
                    None => None,
                    Some(u) => Some(
                        ctx.iri(u)
                            .map(str::to_string)
                            .or_else(|| is_absolute_iri(u).then(|| u.to_string()))
                            .ok_or_else(bad)?,
                    ),
                };
                vec![Term::Number { value: v, unit }]
            }
        }
        Value::Null => Vec::new(),
    })
}

/// Expands a record into triples following the mapping table above.
pub fn cell_record_to_triples(r: &CellRecord, ctx: &ContextMap) -> Vec<Triple> {
    let mut out = Vec::new();
    let subject = r.id.as_str();
    out.push(Triple::new(
        subject,
        ctx.required("type"),
        Term::iri(ctx.required("BatteryCell")),
    ));
    out.push(Triple::new(
        subject,
        ctx.required("Manufacturer"),
        Term::text(r.manufacturer.as_str()),
    ));
    out.push(Triple::new(
        subject,
        ctx.required("name"),
        Term::text(r.product_name.as_str()),
    ));
    for (term, unit, v) in r.numeric_fields() {
        out.push(Triple::new(
            subject,
            ctx.required(term),
            Term::number(v, Some(ctx.required(unit))),
        ));
    }
    for (term, v) in r.text_fields() {
        out.push(Triple::new(subject, ctx.required(term), Term::text(v)));
    }
    for doi in &r.paper_dois {
        out.push(Triple::new(
            subject,
            ctx.required("isReferencedBy"),
            Term::text(doi.as_str()),
        ));
    }
    for e in &r.extensions {
        out.push(Triple::new(subject, e.predicate.as_str(), e.object.clone()));
    }
    out
}

/// Inverse of [`cell_record_to_triples`]. Triples about other subjects are ignored.
pub fn triples_to_cell_record(triples: &[Triple], ctx: &ContextMap) -> Result<CellRecord, CellError> {
    let type_iri = ctx.required("type");
    let cell_iri = ctx.required("BatteryCell");
    let mut subjects: Vec<&str> = triples
        .iter()
        .filter(|t| t.predicate == type_iri && t.object.as_iri() == Some(cell_iri))
        .map(|t| t.subject.as_str())
        .collect();
    subjects.sort_unstable();
    subjects.dedup();
    let [subject] = subjects[..] else {
        return Err(CellError::AmbiguousSubject(subjects.len()));
    };

    let mut numbers: BTreeMap<&str, f64> = BTreeMap::new();
    let mut texts: BTreeMap<&str, String> = BTreeMap::new();
    let mut dois = Vec::new();
    let mut extensions = Vec::new();
    let numeric_terms: Vec<&str> = NUMERIC_FIELDS.iter().map(|(t, _)| *t).collect();

    for t in triples.iter().filter(|t| t.subject == subject) {
        let p = t.predicate.as_str();
        if p == type_iri && t.object.as_iri() == Some(cell_iri) {
            continue;
        }
        if let Some(term) = field_for(ctx, p, &numeric_terms) {
            let expected = NUMERIC_FIELDS
                .iter()
                .find(|(f, _)| *f == term)
                .map(|(_, u)| *u)
                .unwrap();
            let Term::Number { value, unit } = &t.object else {
                return Err(CellError::TypeMismatch {
                    field: term.into(),
                    expected: "a numeric literal",
                });
            };
            if let Some(u) = unit {
                if !unit_matches(ctx, u, expected) {
                    return Err(CellError::UnitMismatch {
                        field: term.into(),
                        found: u.clone(),
                        expected,
                    });
                }
            }
            if numbers.insert(term, *value).is_some_and(|old| old != *value) {
                return Err(CellError::ConflictingField(term.into()));
            }
        } else if let Some(term) = field_for(ctx, p, &TEXT_FIELDS) {
            let s = t.object.as_text().ok_or_else(|| CellError::TypeMismatch {
                field: term.into(),
                expected: "a text literal",
            })?;
            if texts.insert(term, s.to_string()).is_some_and(|old| old != s) {
                return Err(CellError::ConflictingField(term.into()));
            }
        } else if p == ctx.required("isReferencedBy") {
            let s = t.object.as_text().ok_or_else(|| CellError::TypeMismatch {
                field: "isReferencedBy".into(),
                expected: "a text literal",
            })?;
            dois.push(s.to_string());
        } else {
            extensions.push(Extension {
                predicate: t.predicate.clone(),
                object: t.object.clone(),
            });
        }
    }

    let mut record = CellRecord {
        id: subject.to_string(),
        manufacturer: texts
            .remove("Manufacturer")
            .ok_or(CellError::MissingField("Manufacturer"))?,
        product_name: texts.remove("name").ok_or(CellError::MissingField("name"))?,
        rated_capacity_ah: *numbers.get("RatedCapacity").ok_or(CellError::BadCapacity)?,
        lower_cutoff_v: *numbers
            .get("LowerCutoffVoltage")
            .ok_or(CellError::MissingField("LowerCutoffVoltage"))?,
        upper_cutoff_v: *numbers
            .get("UpperCutoffVoltage")
            .ok_or(CellError::MissingField("UpperCutoffVoltage"))?,
        temp_min_c: numbers.get("MinimumTemperature").copied(),
        temp_max_c: numbers.get("MaximumTemperature").copied(),
        positive_material: texts.remove("PositiveElectrode"),
        negative_material: texts.remove("NegativeElectrode"),
        citation: texts.remove("citation"),
        paper_dois: dois,
        extensions,
    };
    record.normalize();
    record.check()?;
    Ok(record)
}

/// Groups triples by cell subject and rebuilds every record, sorted by id.
pub fn records_from_triples(triples: &[Triple], ctx: &ContextMap) -> Result<Vec<CellRecord>, CellError> {
    let type_iri = ctx.required("type");
    let cell_iri = ctx.required("BatteryCell");
    let mut by_subject: BTreeMap<&str, Vec<Triple>> = BTreeMap::new();
    for t in triples {
        by_subject.entry(t.subject.as_str()).or_default().push(t.clone());
    }
    by_subject
        .into_values()
        .filter(|ts| {
            ts.iter()
                .any(|t| t.predicate == type_iri && t.object.as_iri() == Some(cell_iri))
        })
        .map(|ts| triples_to_cell_record(&ts, ctx))
        .collect()
}

/// Writes a record as a JSON-LD document whose `@context` covers every key used.
pub fn emit_cell_jsonld(r: &CellRecord, ctx: &ContextMap) -> String {
    let mut context = Map::new();
    let mut body = Map::new();
    let use_term = |context: &mut Map<String, Value>, term: &str| {
        context.insert(term.to_string(), Value::from(ctx.required(term)));
    };

    body.insert("@id".into(), Value::from(r.id.as_str()));
    body.insert("@type".into(), Value::from("BatteryCell"));
    use_term(&mut context, "BatteryCell");
    body.insert("Manufacturer".into(), Value::from(r.manufacturer.as_str()));
    use_term(&mut context, "Manufacturer");
    body.insert("name".into(), Value::from(r.product_name.as_str()));
    use_term(&mut context, "name");
    for (term, unit, v) in r.numeric_fields() {
        let mut q = Map::new();
        q.insert(
            "value".into(),
            serde_json::Number::from_f64(v)
                .map(Value::Number)
                .unwrap_or(Value::Null),
        );
        q.insert("unit".into(), Value::from(unit));
        body.insert(term.into(), Value::Object(q));
        use_term(&mut context, term);
        use_term(&mut context, unit);
        use_term(&mut context, "value");
        context.insert(
            "unit".into(),
            serde_json::json!({"@id": ctx.required("unit"), "@type": "@vocab"}),
        );
    }
    for (term, v) in r.text_fields() {
        body.insert(term.into(), Value::from(v));
        use_term(&mut context, term);
    }
    if !r.paper_dois.is_empty() {
        body.insert("isReferencedBy".into(), Value::from(r.paper_dois.clone()));
        use_term(&mut context, "isReferencedBy");
    }
    let mut grouped: BTreeMap<String, Vec<Value>> = BTreeMap::new();
    for e in &r.extensions {
        let key = ctx.compact_iri(&e.predicate);
        let value = match &e.object {
            Term::Iri(iri) => serde_json::json!({"@id": iri}),
            Term::Text(s) => Value::from(s.as_str()),
            Term::Number { value, unit: None } => Value::from(*value),
            Term::Number { value, unit: Some(u) } => {
                use_term(&mut context, "value");
                context.insert(
                    "unit".into(),
                    serde_json::json!({"@id": ctx.required("unit"), "@type": "@vocab"}),
                );
                let unit = match ctx.term_for(u) {
                    Some(term) => {
                        use_term(&mut context, term);
                        term
                    }
                    None => u.as_str(),
                };
                serde_json::json!({"value": value, "unit": unit})
            }
        };
        grouped.entry(key).or_default().push(value);
    }
    for (key, mut values) in grouped {
        if !is_absolute_iri(&key) {
            context.insert(key.clone(), Value::from(ctx.expand_key(&key).unwrap_or_default()));
        }
        let v = if values.len() == 1 {
            values.pop().unwrap()
        } else {
            Value::Array(values)
        };
        body.insert(key, v);
    }

    let mut root = Map::new();
    root.insert("@context".into(), Value::Object(context));
    root.extend(body);
    let mut out = serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values always serialize");
    out.push('\n');
    out
}
