//! Paper corpus: text normalization, a positional inverted index, alias
//! lookup of cell names and DOI linking back to cell records.
//!
//! Matching is exact over normalized token sequences. Normalization
//! lower-cases, treats hyphens, underscores and whitespace alike, and drops
//! other punctuation except inside DOIs, so "INR18650-MJ1", "inr18650_mj1"
//! and "INR18650 MJ1" are the same phrase.

mod index;
mod link;
mod normalize;

pub use index::{load_manifest, CorpusIndex, DocEntry, Document, Posting};
pub use link::{find_cell_mentions, link_papers, AliasSet, CellMentions, LinkReport, Mentions};
pub use normalize::{normalize, tokenize};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("document {0:?} is already indexed")]
    DuplicateDocument(String),
    #[error("no record for cell {0:?}")]
    UnknownCell(String),
    #[error("cell {0:?} has no aliases")]
    NoAliases(String),
    #[error("alias {alias:?} of cell {cell:?} has no searchable tokens")]
    BlankAlias { cell: String, alias: String },
    #[error("alias {alias:?} is shared by {first:?} and {second:?}")]
    AliasCollision {
        alias: String,
        first: String,
        second: String,
    },
    #[error("corpus index is inconsistent: {0}")]
    InvalidIndex(String),
    #[error("manifest: {0}")]
    BadManifest(String),
    #[error("corpus exceeds the index size limits")]
    TooLarge,
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
