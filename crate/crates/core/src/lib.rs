//! Battery cycling protocols, cell datasheet records and the paper corpus
//! that links them.
//!
//! * [`protocol`] – the BCL document model: parse, validate, serialize.
//! * [`transform`] – resolution to physical units, unrolling, text and JSON-LD export.
//! * [`sim`] – deterministic execution against an equivalent-circuit cell model.
//! * [`semantic`] – ontology context map, cell records and their triples.
//! * [`graph`] – in-memory triple store with a small SPARQL subset.
//! * [`corpus`] – full-text index over paper texts and DOI linking.

pub mod corpus;
pub mod graph;
pub mod protocol;
pub mod semantic;
pub mod sim;
pub mod transform;
