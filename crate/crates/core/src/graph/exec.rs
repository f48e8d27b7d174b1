use serde_json::{json, Map, Value};

use super::query::{LiteralValue, PatternTerm, Query, TriplePattern};
use super::store::TripleStore;
use crate::semantic::{Term, Triple, XSD_DOUBLE};

/// Query answer: one column per selected variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    /// Unique rows sorted by their N-Triples rendering.
    pub rows: Vec<Vec<Term>>,
}

impl ResultTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values bound to one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<&Term>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    /// Header of `?var` names, then one line per row with N-Triples cells.
    pub fn to_tsv(&self) -> String {
        let mut out = self
            .columns
            .iter()
            .map(|c| format!("?{c}"))
            .collect::<Vec<_>>()
            .join("\t");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Term::to_ntriples).collect::<Vec<_>>().join("\t"));
            out.push('\n');
        }
        out
    }

    /// SPARQL 1.1 query results JSON.
    pub fn to_json(&self) -> Value {
        let bindings: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, t) in self.columns.iter().zip(row) {
                    let cell = match t {
                        Term::Iri(i) => json!({"type": "uri", "value": i}),
                        Term::Text(s) => json!({"type": "literal", "value": s}),
                        Term::Number { value, unit } => json!({
                            "type": "literal",
                            "value": value.to_string(),
                            "datatype": unit.as_deref().unwrap_or(XSD_DOUBLE),
                        }),
                    };
                    m.insert(c.clone(), cell);
                }
                Value::Object(m)
            })
            .collect();
        json!({"head": {"vars": self.columns}, "results": {"bindings": bindings}})
    }
}

type Bindings = Vec<Option<Term>>;

struct Plan<'q> {
    vars: Vec<&'q str>,
    patterns: Vec<&'q TriplePattern>,
}

impl Plan<'_> {
    fn slot(&self, v: &str) -> usize {
        self.vars
            .iter()
            .position(|x| *x == v)
            .expect("variables are collected from the patterns")
    }
}

/// Concrete value a pattern position takes under `b`, if fixed.
fn fixed<'a>(t: &'a PatternTerm, plan: &Plan, b: &'a Bindings) -> Option<Fixed<'a>> {
    match t {
        PatternTerm::Var(v) => b[plan.slot(v)].as_ref().map(Fixed::Term),
        PatternTerm::Iri(i) => Some(Fixed::Iri(i)),
        PatternTerm::Literal(l) => Some(Fixed::Literal(l)),
    }
}

#[derive(Clone, Copy)]
enum Fixed<'a> {
    Term(&'a Term),
    Iri(&'a str),
    Literal(&'a LiteralValue),
}

impl<'a> Fixed<'a> {
    fn as_iri(self) -> Option<Option<&'a str>> {
        match self {
            Fixed::Term(Term::Iri(i)) => Some(Some(i.as_str())),
            Fixed::Iri(i) => Some(Some(i)),
            // A literal can never sit in subject or predicate position.
            _ => None,
        }
    }

    /// Exact object key for the index, when one exists.
    fn object_key(&self) -> Option<Term> {
        match self {
            Fixed::Term(t) => Some((*t).clone()),
            Fixed::Iri(i) => Some(Term::iri(*i)),
            Fixed::Literal(LiteralValue::Text(s)) => Some(Term::text(s.as_str())),
            // Numeric constants match any unit, so they cannot use the exact index.
            Fixed::Literal(LiteralValue::Number(_)) => None,
        }
    }

    fn matches(&self, t: &Term) -> bool {
        match self {
            Fixed::Term(x) => *x == t,
            Fixed::Iri(i) => t.as_iri() == Some(*i),
            Fixed::Literal(l) => PatternTerm::Literal((*l).clone()).matches(t),
        }
    }
}

/// Number of positions already determined; used to pick the next pattern.
fn boundness(p: &TriplePattern, plan: &Plan, b: &Bindings) -> usize {
    p.terms().into_iter().filter(|t| fixed(t, plan, b).is_some()).count()
}

fn candidates<'s>(store: &'s TripleStore, p: &TriplePattern, plan: &Plan, b: &Bindings) -> Option<Vec<&'s Triple>> {
    let s = match fixed(&p.subject, plan, b) {
        Some(f) => f.as_iri()?,
        None => None,
    };
    let pr = match fixed(&p.predicate, plan, b) {
        Some(f) => f.as_iri()?,
        None => None,
    };
    let o_fixed = fixed(&p.object, plan, b);
    let o_key = o_fixed.as_ref().and_then(Fixed::object_key);
    Some(
        store
            .matching(s, pr, o_key.as_ref())
            .filter(|t| o_fixed.as_ref().is_none_or(|f| f.matches(&t.object)))
            .collect(),
    )
}

fn bind(b: &mut Bindings, slot: usize, value: Term, undo: &mut Vec<usize>) -> bool {
    match &b[slot] {
        Some(existing) => *existing == value,
        None => {
            b[slot] = Some(value);
            undo.push(slot);
            true
        }
    }
}

fn solve(store: &TripleStore, plan: &Plan, remaining: &mut Vec<usize>, b: &mut Bindings, out: &mut Vec<Bindings>) {
    if remaining.is_empty() {
        out.push(b.clone());
        return;
    }
    // Greedy: the pattern with most fixed positions, then fewest candidates.
    let pick = (0..remaining.len())
        .max_by_key(|&i| {
            let p = plan.patterns[remaining[i]];
            let est = store.estimate(
                fixed(&p.subject, plan, b).and_then(|f| f.as_iri().flatten()),
                fixed(&p.predicate, plan, b).and_then(|f| f.as_iri().flatten()),
                None,
            );
            (boundness(p, plan, b), std::cmp::Reverse(est), std::cmp::Reverse(i))
        })
        .expect("non-empty");
    let pi = remaining.swap_remove(pick);
    let p = plan.patterns[pi];
    if let Some(cands) = candidates(store, p, plan, b) {
        for t in cands {
            let mut undo = Vec::new();
            let mut ok = true;
            for (pt, value) in [
                (&p.subject, Term::iri(t.subject.as_str())),
                (&p.predicate, Term::iri(t.predicate.as_str())),
                (&p.object, t.object.clone()),
            ] {
                if let PatternTerm::Var(v) = pt {
                    if !bind(b, plan.slot(v), value, &mut undo) {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                solve(store, plan, remaining, b, out);
            }
            for slot in undo {
                b[slot] = None;
            }
        }
    }
    remaining.push(pi);
    let last = remaining.len() - 1;
    remaining.swap(pick, last);
}

/// Evaluates `q` against `store`: natural join of the patterns, numeric
/// filters, projection, de-duplication, deterministic order, then LIMIT.
pub fn execute_query(store: &TripleStore, q: &Query) -> ResultTable {
    let plan = Plan {
        vars: q.pattern_vars(),
        patterns: q.patterns.iter().collect(),
    };
    let mut solutions = Vec::new();
    let mut remaining: Vec<usize> = (0..plan.patterns.len()).collect();
    let mut bindings: Bindings = vec![None; plan.vars.len()];
    solve(store, &plan, &mut remaining, &mut bindings, &mut solutions);

    let filters: Vec<_> = q.filters.iter().map(|f| (plan.slot(&f.var), f)).collect();
    let select: Vec<usize> = q.select_vars.iter().map(|v| plan.slot(v)).collect();
    let mut rows: Vec<(String, Vec<Term>)> = solutions
        .into_iter()
        .filter(|b| {
            filters
                .iter()
                .all(|(slot, f)| b[*slot].as_ref().is_some_and(|t| f.accepts(t)))
        })
        .map(|b| {
            let row: Vec<Term> = select
                .iter()
                .map(|&s| b[s].clone().expect("every pattern variable is bound"))
                .collect();
            let key = row.iter().map(Term::to_ntriples).collect::<Vec<_>>().join("\t");
            (key, row)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows.dedup_by(|a, b| a.0 == b.0);
    if let Some(n) = q.limit {
        rows.truncate(n);
    }
    ResultTable {
        columns: q.select_vars.clone(),
        rows: rows.into_iter().map(|(_, r)| r).collect(),
    }
}
