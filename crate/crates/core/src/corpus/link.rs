use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::index::CorpusIndex;
use super::normalize::{normalize, tokenize};
use super::CorpusError;
use crate::semantic::CellRecord;

/// Names under which each cell (keyed by IRI) may appear in a paper.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AliasSet {
    aliases: BTreeMap<String, Vec<String>>,
}

impl AliasSet {
    /// Validates the alias lists: none empty, none that normalize to
    /// nothing, and no normalized alias shared by two cells.
    pub fn new(aliases: BTreeMap<String, Vec<String>>) -> Result<Self, CorpusError> {
        let mut owner: HashMap<String, &str> = HashMap::new();
        for (cell, list) in &aliases {
            if list.is_empty() {
                return Err(CorpusError::NoAliases(cell.clone()));
            }
            for alias in list {
                let norm = normalize(alias);
                if norm.is_empty() {
                    return Err(CorpusError::BlankAlias {
                        cell: cell.clone(),
                        alias: alias.clone(),
                    });
                }
                match owner.get(&norm) {
                    Some(other) if *other != cell => {
                        return Err(CorpusError::AliasCollision {
                            alias: norm,
                            first: other.to_string(),
                            second: cell.clone(),
                        })
                    }
                    _ => {
                        owner.insert(norm, cell);
                    }
                }
            }
        }
        Ok(AliasSet { aliases })
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        Self::new(serde_json::from_str(text)?)
    }

    /// "Manufacturer Product" and the bare product name for every record.
    pub fn from_records(records: &[CellRecord]) -> Result<Self, CorpusError> {
        let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in records {
            let list = map.entry(r.id.clone()).or_default();
            list.push(format!("{} {}", r.manufacturer, r.product_name));
            list.push(r.product_name.clone());
        }
        Self::new(map)
    }

    /// Union with `other`; the result is validated again.
    pub fn merged(&self, other: &AliasSet) -> Result<Self, CorpusError> {
        let mut map = self.aliases.clone();
        for (cell, list) in &other.aliases {
            let entry = map.entry(cell.clone()).or_default();
            for a in list {
                if !entry.contains(a) {
                    entry.push(a.clone());
                }
            }
        }
        Self::new(map)
    }

    pub fn cells(&self) -> impl Iterator<Item = &str> {
        self.aliases.keys().map(String::as_str)
    }

    pub fn aliases(&self, cell: &str) -> Option<&[String]> {
        self.aliases.get(cell).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }
}

/// Documents mentioning one cell.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellMentions {
    /// Normalized, sorted, unique.
    pub dois: Vec<String>,
    /// Hits in documents that have no DOI, sorted.
    pub unlinked_doc_ids: Vec<String>,
}

/// Cell IRI → mentions; cells without any hit are absent.
pub type Mentions = BTreeMap<String, CellMentions>;

/// Looks up every alias of every cell and collects the matching documents.
pub fn find_cell_mentions(index: &CorpusIndex, aliases: &AliasSet) -> Mentions {
    let docs = index.documents();
    let mut out = Mentions::new();
    for (cell, list) in &aliases.aliases {
        let mut hit_docs = BTreeSet::new();
        for alias in list {
            hit_docs.extend(index.search_tokens(&tokenize(alias)).into_iter().map(|p| p.doc));
        }
        if hit_docs.is_empty() {
            continue;
        }
        let mut dois = BTreeSet::new();
        let mut unlinked = BTreeSet::new();
        for d in hit_docs {
            let entry = &docs[d as usize];
            match &entry.doi {
                Some(doi) => dois.insert(doi.clone()),
                None => unlinked.insert(entry.doc_id.clone()),
            };
        }
        out.insert(
            cell.clone(),
            CellMentions {
                dois: dois.into_iter().collect(),
                unlinked_doc_ids: unlinked.into_iter().collect(),
            },
        );
    }
    out
}

/// Result of [`link_papers`]: how many DOIs were new, and which cells were unknown.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkReport {
    pub added: usize,
    pub unknown_cells: Vec<String>,
}

impl LinkReport {
    /// One `UnknownCell` error per skipped mention.
    pub fn errors(&self) -> Vec<CorpusError> {
        self.unknown_cells
            .iter()
            .cloned()
            .map(CorpusError::UnknownCell)
            .collect()
    }
}

/// Adds the mentioned DOIs to the matching records. Mentions of cells not
/// in `records` are reported and skipped; everything else is still linked.
pub fn link_papers(records: &mut [CellRecord], mentions: &Mentions) -> LinkReport {
    let by_id: HashMap<String, usize> = records.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
    let mut report = LinkReport::default();
    for (cell, m) in mentions {
        match by_id.get(cell) {
            Some(&i) => report.added += records[i].add_dois(m.dois.iter().map(String::as_str)),
            None => report.unknown_cells.push(cell.clone()),
        }
    }
    report
}
