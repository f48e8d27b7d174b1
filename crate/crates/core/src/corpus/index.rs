use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::normalize::tokenize;
use super::CorpusError;
use crate::semantic::normalize_doi;

/// One paper's extracted text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub doi: Option<String>,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, doi: Option<&str>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            doi: doi.map(str::to_string),
            text: text.into(),
        }
    }
}

/// Occurrence of a token: document and offset in its token stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Posting {
    /// Index into the document table, which is ordered by `doc_id`.
    pub doc: u32,
    pub position: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocEntry {
    pub doc_id: String,
    pub doi: Option<String>,
    pub tokens: u32,
}

/// Positional inverted index.
///
/// Documents are kept sorted by `doc_id` and postings sorted by
/// `(doc, position)`, so the index content never depends on insertion order
/// or on how a parallel build was scheduled. Searching takes `&self`; once
/// built the index can be shared freely between threads.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusIndex {
    docs: Vec<DocEntry>,
    postings: BTreeMap<String, Vec<Posting>>,
}

struct Prepared {
    doc_id: String,
    doi: Option<String>,
    tokens: Vec<String>,
}

fn prepare(doc: &Document) -> Prepared {
    Prepared {
        doc_id: doc.doc_id.clone(),
        doi: doc.doi.as_deref().map(normalize_doi).filter(|d| !d.is_empty()),
        tokens: tokenize(&doc.text),
    }
}

impl CorpusIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Normalizes and indexes `docs` in parallel, then merges in `doc_id` order.
    pub fn build(docs: &[Document]) -> Result<Self, CorpusError> {
        let mut prepared: Vec<Prepared> = docs.par_iter().map(prepare).collect();
        prepared.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        if let Some(w) = prepared.windows(2).find(|w| w[0].doc_id == w[1].doc_id) {
            return Err(CorpusError::DuplicateDocument(w[0].doc_id.clone()));
        }
        let mut index = CorpusIndex::new();
        for (i, p) in prepared.into_iter().enumerate() {
            let doc = u32::try_from(i).map_err(|_| CorpusError::TooLarge)?;
            index.append(doc, p)?;
        }
        Ok(index)
    }

    fn append(&mut self, doc: u32, p: Prepared) -> Result<(), CorpusError> {
        let count = u32::try_from(p.tokens.len()).map_err(|_| CorpusError::TooLarge)?;
        for (pos, tok) in p.tokens.into_iter().enumerate() {
            self.postings.entry(tok).or_default().push(Posting {
                doc,
                position: pos as u32,
            });
        }
        self.docs.push(DocEntry {
            doc_id: p.doc_id,
            doi: p.doi,
            tokens: count,
        });
        Ok(())
    }

    /// Adds one document and returns its token count.
    pub fn index_document(&mut self, doc: &Document) -> Result<usize, CorpusError> {
        let slot = match self.docs.binary_search_by(|d| d.doc_id.as_str().cmp(&doc.doc_id)) {
            Ok(_) => return Err(CorpusError::DuplicateDocument(doc.doc_id.clone())),
            Err(slot) => slot,
        };
        let p = prepare(doc);
        let n = p.tokens.len();
        if self.docs.len() >= u32::MAX as usize || n > u32::MAX as usize {
            return Err(CorpusError::TooLarge);
        }
        let slot = slot as u32;
        if (slot as usize) < self.docs.len() {
            // Shift later documents to keep the table sorted.
            for list in self.postings.values_mut() {
                for posting in list.iter_mut().filter(|p| p.doc >= slot) {
                    posting.doc += 1;
                }
            }
        }
        for (pos, tok) in p.tokens.into_iter().enumerate() {
            let list = self.postings.entry(tok).or_default();
            let at = list.partition_point(|q| q.doc < slot || (q.doc == slot && q.position < pos as u32));
            list.insert(
                at,
                Posting {
                    doc: slot,
                    position: pos as u32,
                },
            );
        }
        self.docs.insert(
            slot as usize,
            DocEntry {
                doc_id: p.doc_id,
                doi: p.doi,
                tokens: n as u32,
            },
        );
        Ok(n)
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Documents in `doc_id` order.
    pub fn documents(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn document(&self, doc_id: &str) -> Option<&DocEntry> {
        self.docs
            .binary_search_by(|d| d.doc_id.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.docs[i])
    }

    pub fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map_or(&[], Vec::as_slice)
    }

    /// Every `(doc_id, position)` where the normalized phrase occurs as
    /// consecutive tokens. A phrase that normalizes to nothing has no hits.
    pub fn search_phrase(&self, phrase: &str) -> Vec<(String, usize)> {
        self.search_tokens(&tokenize(phrase))
            .into_iter()
            .map(|p| (self.docs[p.doc as usize].doc_id.clone(), p.position as usize))
            .collect()
    }

    pub(crate) fn search_tokens(&self, tokens: &[String]) -> Vec<Posting> {
        let Some((first, rest)) = tokens.split_first() else {
            return Vec::new();
        };
        let lists: Vec<&[Posting]> = rest.iter().map(|t| self.postings(t)).collect();
        if lists.iter().any(|l| l.is_empty()) {
            return Vec::new();
        }
        self.postings(first)
            .iter()
            .filter(|start| {
                lists.iter().enumerate().all(|(i, list)| {
                    let want = Posting {
                        doc: start.doc,
                        position: start.position + 1 + i as u32,
                    };
                    list.binary_search(&want).is_ok()
                })
            })
            .copied()
            .collect()
    }

    /// Checks the structural invariants, e.g. after deserializing.
    pub fn check(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::InvalidIndex(m));
        if let Some(w) = self.docs.windows(2).find(|w| w[0].doc_id >= w[1].doc_id) {
            return bad(format!("documents out of order or duplicated at {:?}", w[1].doc_id));
        }
        let mut counted = vec![0u64; self.docs.len()];
        for (tok, list) in &self.postings {
            if list.is_empty() || list.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("postings for {tok:?} are empty or unsorted"));
            }
            for p in list {
                let Some(d) = self.docs.get(p.doc as usize) else {
                    return bad(format!("posting for {tok:?} names unknown document {}", p.doc));
                };
                if p.position >= d.tokens {
                    return bad(format!("posting for {tok:?} is past the end of {:?}", d.doc_id));
                }
                counted[p.doc as usize] += 1;
            }
        }
        if let Some((i, _)) = self
            .docs
            .iter()
            .zip(&counted)
            .enumerate()
            .find(|(_, (d, c))| u64::from(d.tokens) != **c)
        {
            return bad(format!(
                "token count of {:?} does not match its postings",
                self.docs[i].doc_id
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let index: CorpusIndex = serde_json::from_str(text)?;
        index.check()?;
        Ok(index)
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    doc_id: String,
    doi: Option<String>,
    path: String,
}

/// Reads a `doc_id,doi,path` manifest; paths are relative to the manifest.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<Document>, CorpusError> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "doi", "path"] {
        return Err(CorpusError::BadManifest(format!(
            "expected header doc_id,doi,path, found {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut docs = Vec::new();
    for row in reader.deserialize() {
        let row: ManifestRow = row?;
        let file = base.join(&row.path);
        let text = std::fs::read_to_string(&file).map_err(|source| CorpusError::Io {
            path: file.display().to_string(),
            source,
        })?;
        let doi = row.doi.filter(|d| !d.trim().is_empty());
        docs.push(Document {
            doc_id: row.doc_id,
            doi,
            text,
        });
    }
    Ok(docs)
}
