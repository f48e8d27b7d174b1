use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

/// Pinned term → IRI map shipped with the crate.
pub const DEFAULT_CONTEXT: &str = include_str!("../../data/context.json");

/// Names treated as units rather than vocabulary terms.
pub const UNIT_TERMS: [&str; 6] = ["CRate", "Ampere", "Volt", "Second", "AmpereHour", "DegreeCelsius"];

/// Terms that must be present for a context to be usable by the cell mapping.
pub const REQUIRED_TERMS: [&str; 21] = [
    "RatedCapacity",
    "Manufacturer",
    "PositiveElectrode",
    "NegativeElectrode",
    "LowerCutoffVoltage",
    "UpperCutoffVoltage",
    "CRate",
    "Ampere",
    "Volt",
    "Second",
    "AmpereHour",
    "DegreeCelsius",
    "type",
    "name",
    "citation",
    "isReferencedBy",
    "BatteryCell",
    "MinimumTemperature",
    "MaximumTemperature",
    "value",
    "unit",
];

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("cannot read context file: {0}")]
    Io(#[from] std::io::Error),
    #[error("context is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("context must be a JSON object of term to IRI")]
    NotAnObject,
    #[error("context term {0:?} must map to a string IRI")]
    NotAString(String),
    #[error("context is missing required term {0:?}")]
    IncompleteContext(String),
    #[error("term {term:?} maps to {iri:?}, which is not an absolute IRI")]
    BadIri { term: String, iri: String },
}

/// True when `s` has a URI scheme and no characters that are illegal in an IRI.
pub fn is_absolute_iri(s: &str) -> bool {
    let Some((scheme, rest)) = s.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`'))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMap {
    pub entries: BTreeMap<String, String>,
    pub unit_entries: BTreeMap<String, String>,
    /// Namespace for keys that have no entry of their own.
    pub vocab: Option<String>,
}

impl ContextMap {
    pub fn from_json_str(text: &str) -> Result<Self, ContextError> {
        let root: Value = serde_json::from_str(text)?;
        let obj = root.as_object().ok_or(ContextError::NotAnObject)?;
        let mut entries = BTreeMap::new();
        let mut unit_entries = BTreeMap::new();
        let mut vocab = None;
        for (term, v) in obj {
            let iri = v.as_str().ok_or_else(|| ContextError::NotAString(term.clone()))?;
            if !is_absolute_iri(iri) {
                return Err(ContextError::BadIri {
                    term: term.clone(),
                    iri: iri.to_string(),
                });
            }
            if term == "@vocab" {
                vocab = Some(iri.to_string());
            } else if UNIT_TERMS.contains(&term.as_str()) {
                unit_entries.insert(term.clone(), iri.to_string());
            } else {
                entries.insert(term.clone(), iri.to_string());
            }
        }
        let ctx = ContextMap {
            entries,
            unit_entries,
            vocab,
        };
        if let Some(missing) = REQUIRED_TERMS.iter().find(|t| ctx.iri(t).is_none()) {
            return Err(ContextError::IncompleteContext(missing.to_string()));
        }
        Ok(ctx)
    }

    /// The vendored default context.
    pub fn pinned() -> Self {
        Self::from_json_str(DEFAULT_CONTEXT).expect("vendored context is valid")
    }

    /// IRI of a term or unit name.
    pub fn iri(&self, term: &str) -> Option<&str> {
        self.entries
            .get(term)
            .or_else(|| self.unit_entries.get(term))
            .map(String::as_str)
    }

    /// Like [`ContextMap::iri`] for terms the loader guarantees to exist.
    pub(crate) fn required(&self, term: &str) -> &str {
        self.iri(term)
            .unwrap_or_else(|| panic!("required context term {term:?} missing"))
    }

    /// Reverse lookup: the term name mapped to `iri`, if any.
    pub fn term_for(&self, iri: &str) -> Option<&str> {
        self.entries
            .iter()
            .chain(self.unit_entries.iter())
            .find(|(_, v)| v.as_str() == iri)
            .map(|(k, _)| k.as_str())
    }

    /// True when `iri` is the expansion of some term in this map.
    pub fn contains_iri(&self, iri: &str) -> bool {
        self.term_for(iri).is_some()
    }

    /// Expands a document key: known terms map through the context,
    /// absolute IRIs pass through, anything else falls under `@vocab`.
    pub fn expand_key(&self, key: &str) -> Option<String> {
        if let Some(iri) = self.iri(key) {
            return Some(iri.to_string());
        }
        if is_absolute_iri(key) {
            return Some(key.to_string());
        }
        self.vocab.as_ref().map(|v| format!("{v}{key}"))
    }

    /// Compacts an IRI back to a document key, inverting [`ContextMap::expand_key`].
    pub fn compact_iri(&self, iri: &str) -> String {
        if let Some(term) = self.term_for(iri) {
            return term.to_string();
        }
        if let Some(local) = self.vocab.as_ref().and_then(|v| iri.strip_prefix(v.as_str())) {
            if !local.is_empty() && self.iri(local).is_none() && !is_absolute_iri(local) {
                return local.to_string();
            }
        }
        iri.to_string()
    }
}

pub fn load_context(path: impl AsRef<Path>) -> Result<ContextMap, ContextError> {
    let text = std::fs::read_to_string(path)?;
    ContextMap::from_json_str(&text)
}
