//! Ontology context, cell datasheet records and their triple form.

mod context;
mod record;
mod triples;

pub use context::{
    is_absolute_iri, load_context, ContextError, ContextMap, DEFAULT_CONTEXT, REQUIRED_TERMS, UNIT_TERMS,
};
pub use record::{
    cell_record_to_triples, emit_cell_jsonld, normalize_doi, parse_cell_record, records_from_triples,
    triples_to_cell_record, CellError, CellRecord, Extension,
};
pub use triples::{parse_ntriples, write_ntriples, NTriplesError, Term, Triple, XSD_DOUBLE, XSD_STRING};

use std::path::Path;

/// Reads every `*.jsonld` / `*.json` file in `dir` as a cell record, sorted by file name.
pub fn load_cell_dir(dir: impl AsRef<Path>, ctx: &ContextMap) -> Result<Vec<CellRecord>, LoadError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("jsonld" | "json")))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let text = std::fs::read_to_string(&path)?;
            parse_cell_record(&text, ctx).map_err(|source| LoadError::Record {
                path: path.display().to_string(),
                source,
            })
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}: {source}")]
    Record { path: String, source: CellError },
}
