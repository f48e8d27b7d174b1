use std::collections::{HashMap, HashSet};

use crate::semantic::{Term, Triple};

/// Set of triples with subject, predicate and object indexes.
///
/// Triples are kept in insertion order; the indexes hold positions into
/// that list. Inserts take `&mut self`, reads take `&self`, so the borrow
/// checker enforces single-writer / many-reader access.
#[derive(Debug, Clone, Default)]
pub struct TripleStore {
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    by_subject: HashMap<String, Vec<usize>>,
    by_predicate: HashMap<String, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the triples not already present and returns how many were new.
    pub fn insert_triples<I: IntoIterator<Item = Triple>>(&mut self, triples: I) -> usize {
        let mut added = 0;
        for t in triples {
            if self.seen.contains(&t) {
                continue;
            }
            let pos = self.triples.len();
            self.by_subject.entry(t.subject.clone()).or_default().push(pos);
            self.by_predicate.entry(t.predicate.clone()).or_default().push(pos);
            self.by_object.entry(t.object.clone()).or_default().push(pos);
            self.seen.insert(t.clone());
            self.triples.push(t);
            added += 1;
        }
        added
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.seen.contains(t)
    }

    /// All triples in insertion order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    /// Triples matching the given fixed positions, using the most selective index.
    pub fn matching<'a>(
        &'a self,
        subject: Option<&str>,
        predicate: Option<&str>,
        object: Option<&Term>,
    ) -> impl Iterator<Item = &'a Triple> + 'a {
        const NONE: &[usize] = &[];
        let mut candidates: Option<&[usize]> = None;
        let mut narrow = |list: Option<&'a Vec<usize>>| {
            let list = list.map_or(NONE, Vec::as_slice);
            if candidates.is_none_or(|c| list.len() < c.len()) {
                candidates = Some(list);
            }
        };
        if let Some(s) = subject {
            narrow(self.by_subject.get(s));
        }
        if let Some(p) = predicate {
            narrow(self.by_predicate.get(p));
        }
        if let Some(o) = object {
            narrow(self.by_object.get(o));
        }
        let subject = subject.map(str::to_string);
        let predicate = predicate.map(str::to_string);
        let object = object.cloned();
        let positions: Box<dyn Iterator<Item = usize> + 'a> = match candidates {
            Some(c) => Box::new(c.iter().copied()),
            None => Box::new(0..self.triples.len()),
        };
        positions.map(move |i| &self.triples[i]).filter(move |t| {
            subject.as_deref().is_none_or(|s| t.subject == s)
                && predicate.as_deref().is_none_or(|p| t.predicate == p)
                && object.as_ref().is_none_or(|o| &t.object == o)
        })
    }

    /// Upper bound on how many triples `matching` would visit.
    pub(crate) fn estimate(&self, subject: Option<&str>, predicate: Option<&str>, object: Option<&Term>) -> usize {
        let mut best = self.triples.len();
        if let Some(s) = subject {
            best = best.min(self.by_subject.get(s).map_or(0, Vec::len));
        }
        if let Some(p) = predicate {
            best = best.min(self.by_predicate.get(p).map_or(0, Vec::len));
        }
        if let Some(o) = object {
            best = best.min(self.by_object.get(o).map_or(0, Vec::len));
        }
        best
    }

    /// True when every index agrees with the triple list.
    pub fn indexes_consistent(&self) -> bool {
        let total: usize = self.by_subject.values().map(Vec::len).sum();
        let total_p: usize = self.by_predicate.values().map(Vec::len).sum();
        let total_o: usize = self.by_object.values().map(Vec::len).sum();
        if total != self.triples.len() || total_p != self.triples.len() || total_o != self.triples.len() {
            return false;
        }
        if self.seen.len() != self.triples.len() {
            return false;
        }
        self.triples.iter().enumerate().all(|(i, t)| {
            self.seen.contains(t)
                && self.by_subject.get(&t.subject).is_some_and(|v| v.contains(&i))
                && self.by_predicate.get(&t.predicate).is_some_and(|v| v.contains(&i))
                && self.by_object.get(&t.object).is_some_and(|v| v.contains(&i))
        })
    }
}

/// Free-function form of [`TripleStore::insert_triples`].
pub fn insert_triples<I: IntoIterator<Item = Triple>>(store: &mut TripleStore, triples: I) -> usize {
    store.insert_triples(triples)
}
