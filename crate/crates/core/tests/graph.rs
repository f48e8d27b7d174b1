mod common;

use std::path::Path;

use battlink::graph::{execute_query, parse_query, Query, TripleStore};
use battlink::semantic::{cell_record_to_triples, load_cell_dir, CellRecord, ContextMap, Term, Triple};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const MJ1: &str = "https://www.wikidata.org/wiki/Q120766894";

fn fixture(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn loaded_store() -> (TripleStore, Vec<CellRecord>) {
    let ctx = ContextMap::pinned();
    let records = load_cell_dir(fixture("cells"), &ctx).unwrap();
    let mut store = TripleStore::new();
    store.insert_records(&records, &ctx);
    (store, records)
}

fn query_file(name: &str) -> Query {
    parse_query(&std::fs::read_to_string(fixture("queries").join(name)).unwrap()).unwrap()
}

#[test]
fn mj1_capacity_lookup() {
    let (store, _) = loaded_store();
    let table = execute_query(&store, &query_file("mj1_capacity.rq"));
    assert_eq!(table.len(), 1);
    assert_eq!(table.rows[0][0].as_number(), Some(3.4));
    assert!(table.to_tsv().starts_with("?cap\n"));
}

#[test]
fn range_query_matches_direct_filter() {
    let (store, records) = loaded_store();
    let table = execute_query(&store, &query_file("range_3_4.rq"));
    let mut expected: Vec<(String, f64)> = records
        .iter()
        .filter(|r| (3.0..=4.0).contains(&r.rated_capacity_ah))
        .map(|r| (r.id.clone(), r.rated_capacity_ah))
        .collect();
    expected.sort_by(|a, b| a.0.cmp(&b.0));
    let got: Vec<(String, f64)> = table
        .rows
        .iter()
        .map(|r| (r[0].as_iri().unwrap().to_string(), r[1].as_number().unwrap()))
        .collect();
    let mut got_sorted = got.clone();
    got_sorted.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(got_sorted, expected);
    assert_eq!(got.len(), 5);
    assert!(got.iter().any(|(id, _)| id == MJ1));
}

#[test]
fn papers_for_m50() {
    let (store, _) = loaded_store();
    let table = execute_query(&store, &query_file("papers_for_m50.rq"));
    let dois: Vec<&str> = table.rows.iter().map(|r| r[0].as_text().unwrap()).collect();
    assert_eq!(
        dois,
        [
            "10.5555/synthetic.m50.0001",
            "10.5555/synthetic.m50.0002",
            "10.5555/synthetic.m50.0003"
        ]
    );
}

#[test]
fn three_cell_range_example() {
    let ctx = ContextMap::pinned();
    let records: Vec<CellRecord> = [("a", 2.5), ("b", 3.4), ("c", 4.9)]
        .iter()
        .map(|(n, cap)| CellRecord::new(format!("https://example.org/cell/{n}"), "Maker", *n, *cap, 2.5, 4.2))
        .collect();
    let mut store = TripleStore::new();
    store.insert_records(&records, &ctx);
    let table = execute_query(&store, &query_file("range_3_4.rq"));
    assert_eq!(table.len(), 1);
    assert_eq!(table.rows[0][0], Term::iri("https://example.org/cell/b"));
}

#[test]
fn empty_store_keeps_columns() {
    let store = TripleStore::new();
    let table = execute_query(&store, &query_file("range_3_4.rq"));
    assert!(table.is_empty());
    assert_eq!(table.columns, ["cell", "cap"]);
    assert_eq!(table.to_tsv(), "?cell\t?cap\n");
    assert_eq!(table.to_json()["results"]["bindings"].as_array().unwrap().len(), 0);
}

#[test]
fn insert_counts_add_up() {
    let ctx = ContextMap::pinned();
    let records = load_cell_dir(fixture("cells"), &ctx).unwrap();
    let per_record: usize = records.iter().map(|r| cell_record_to_triples(r, &ctx).len()).sum();
    let mut store = TripleStore::new();
    assert_eq!(store.insert_records(&records, &ctx), per_record);
    assert_eq!(store.insert_records(&records, &ctx), 0);
    assert_eq!(store.len(), per_record);
    assert!(store.indexes_consistent());
}

#[test]
fn dump_is_order_independent() {
    let (store, records) = loaded_store();
    let ctx = ContextMap::pinned();
    let mut reversed = TripleStore::new();
    let rev: Vec<CellRecord> = records.into_iter().rev().collect();
    reversed.insert_records(&rev, &ctx);
    assert_eq!(store.to_ntriples(), reversed.to_ntriples());
}

#[test]
fn concurrent_readers_agree() {
    let (store, _) = loaded_store();
    let q = query_file("range_3_4.rq");
    let expected = execute_query(&store, &q);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..8).map(|_| s.spawn(|| execute_query(&store, &q))).collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), expected);
        }
    });
}

#[test]
fn seeded_pairs_match_oracle() {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut non_empty = 0;
    for _ in 0..200 {
        let triples = common::random_store(&mut rng, 500);
        let q = common::random_query(&mut rng);
        let mut store = TripleStore::new();
        store.insert_triples(triples.clone());
        let expected = common::brute_force(&triples, &q);
        non_empty += usize::from(!expected.is_empty());
        assert_eq!(execute_query(&store, &q).rows, expected, "query: {q}");
    }
    // The generator must exercise joins that actually produce rows.
    assert!(non_empty >= 40, "only {non_empty} non-empty answers");
}

fn case() -> impl Strategy<Value = (Vec<Triple>, Query)> {
    any::<u64>().prop_map(|seed| {
        let mut rng = StdRng::seed_from_u64(seed);
        (common::random_store(&mut rng, 300), common::random_query(&mut rng))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn executor_matches_nested_loops((triples, q) in case()) {
        let mut store = TripleStore::new();
        store.insert_triples(triples.clone());
        prop_assert!(store.indexes_consistent());
        prop_assert_eq!(execute_query(&store, &q).rows, common::brute_force(&triples, &q));
    }

    #[test]
    fn printed_query_parses_back((_, q) in case()) {
        prop_assert_eq!(parse_query(&q.to_string()).unwrap(), q);
    }

    #[test]
    fn pattern_order_is_irrelevant((triples, q) in case(), rot in 0usize..3) {
        let mut store = TripleStore::new();
        store.insert_triples(triples);
        let mut permuted = q.clone();
        let n = permuted.patterns.len();
        permuted.patterns.rotate_left(rot % n);
        permuted.patterns.reverse();
        prop_assert_eq!(execute_query(&store, &q), execute_query(&store, &permuted));
    }

    #[test]
    fn limit_takes_a_prefix((triples, q) in case(), n in 0usize..12) {
        let mut store = TripleStore::new();
        store.insert_triples(triples);
        let mut all = q.clone();
        all.limit = None;
        let full = execute_query(&store, &all);
        let mut limited = q;
        limited.limit = Some(n);
        let part = execute_query(&store, &limited);
        prop_assert_eq!(&part.rows[..], &full.rows[..n.min(full.len())]);
    }

    #[test]
    fn insert_is_idempotent((triples, _) in case()) {
        let mut store = TripleStore::new();
        let first = store.insert_triples(triples.clone());
        prop_assert_eq!(store.insert_triples(triples.clone()), 0);
        let unique: std::collections::HashSet<_> = triples.into_iter().collect();
        prop_assert_eq!(first, unique.len());
        prop_assert!(store.indexes_consistent());
    }
}
