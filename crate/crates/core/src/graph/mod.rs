//! In-memory triple store and a SPARQL subset: basic graph patterns,
//! numeric `FILTER` comparisons and `LIMIT`.

mod exec;
mod query;
mod store;

pub use exec::{execute_query, ResultTable};
pub use query::{parse_query, CmpOp, Filter, LiteralValue, PatternTerm, Query, QueryError, TriplePattern};
pub use store::{insert_triples, TripleStore};

use crate::semantic::{cell_record_to_triples, write_ntriples, CellRecord, ContextMap, Triple};

impl TripleStore {
    /// Inserts each record as one batch and returns the number of new triples.
    pub fn insert_records(&mut self, records: &[CellRecord], ctx: &ContextMap) -> usize {
        records
            .iter()
            .map(|r| self.insert_triples(cell_record_to_triples(r, ctx)))
            .sum()
    }

    /// N-Triples dump in sorted order, independent of insertion history.
    pub fn to_ntriples(&self) -> String {
        let mut all: Vec<Triple> = self.triples().to_vec();
        all.sort();
        write_ntriples(&all)
    }
}
