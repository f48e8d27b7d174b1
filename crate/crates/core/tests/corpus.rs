mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use battlink::corpus::{
    find_cell_mentions, link_papers, load_manifest, normalize, tokenize, AliasSet, CorpusIndex, Document,
};
use battlink::semantic::{load_cell_dir, ContextMap};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

const MJ1: &str = "https://www.wikidata.org/wiki/Q120766894";
const M50: &str = "https://w3id.org/battlink/cell/LG_Chem_INR21700_M50";

fn fixture(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn fixture_aliases() -> AliasSet {
    let records = load_cell_dir(fixture("cells"), &ContextMap::pinned()).unwrap();
    let extra = AliasSet::from_json(&std::fs::read_to_string(fixture("aliases.json")).unwrap()).unwrap();
    AliasSet::from_records(&records).unwrap().merged(&extra).unwrap()
}

fn alias_list(set: &AliasSet) -> Vec<(String, Vec<String>)> {
    set.cells()
        .map(|c| (c.to_string(), set.aliases(c).unwrap().to_vec()))
        .collect()
}

#[test]
fn fixture_corpus_links() {
    let docs = load_manifest(fixture("corpus/manifest.csv")).unwrap();
    assert_eq!(docs.len(), 5);
    let index = CorpusIndex::build(&docs).unwrap();
    let mentions = find_cell_mentions(&index, &fixture_aliases());
    assert_eq!(
        mentions[MJ1].dois,
        ["10.5555/synthetic.corpus.0001", "10.5555/synthetic.corpus.0003"]
    );
    assert_eq!(mentions[MJ1].unlinked_doc_ids, ["p005"]);
    assert_eq!(mentions[M50].dois, ["10.5555/synthetic.corpus.0002"]);
    assert_eq!(
        mentions["https://w3id.org/battlink/cell/Acme_AC18650-30"].dois,
        ["10.5555/synthetic.corpus.0003"]
    );
    assert_eq!(mentions.len(), 3);

    let mut records = load_cell_dir(fixture("cells"), &ContextMap::pinned()).unwrap();
    let report = link_papers(&mut records, &mentions);
    assert!(report.unknown_cells.is_empty());
    assert_eq!(report.added, 4);
    let m50 = records.iter().find(|r| r.id == M50).unwrap();
    assert_eq!(m50.paper_dois.len(), 4);
}

#[test]
fn aliases_from_fixture_file_include_the_other_mj1_name() {
    let set = fixture_aliases();
    assert!(set.aliases(MJ1).unwrap().iter().any(|a| a == "LG Chem INR21700 MJ1"));
    // A different cell claiming that name must be refused.
    let mut clash = BTreeMap::new();
    clash.insert(
        "https://example.org/other".to_string(),
        vec!["lg-chem inr21700_mj1".to_string()],
    );
    assert!(set.merged(&AliasSet::new(clash).unwrap()).is_err());
}

#[test]
fn index_survives_json() {
    let docs = load_manifest(fixture("corpus/manifest.csv")).unwrap();
    let index = CorpusIndex::build(&docs).unwrap();
    let back = CorpusIndex::from_json(&index.to_json()).unwrap();
    assert_eq!(back, index);
    assert_eq!(back.search_phrase("inr18650 mj1"), index.search_phrase("INR18650_MJ1"));
}

#[test]
fn planted_thousand_documents() {
    let set = fixture_aliases();
    let aliases = alias_list(&set);
    // Precondition for exact precision: no alias of one cell is contained in an alias of another.
    for (c1, l1) in &aliases {
        for (c2, l2) in &aliases {
            if c1 != c2 {
                for a in l1 {
                    for b in l2 {
                        assert!(
                            common::naive_find(&tokenize(b), &tokenize(a)).is_empty(),
                            "{a} inside {b}"
                        );
                    }
                }
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(1000);
    let corpus = common::planted_corpus(&mut rng, 1000, &aliases);
    let index = CorpusIndex::build(&corpus.docs).unwrap();
    let found = find_cell_mentions(&index, &set);

    // Brute-force scan over every document and alias.
    let mut scan: BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
    for d in &corpus.docs {
        let hay = common::naive_tokens(&d.text);
        for (cell, list) in &aliases {
            if list
                .iter()
                .any(|a| !common::naive_find(&hay, &common::naive_tokens(a)).is_empty())
            {
                let e = scan.entry(cell.clone()).or_default();
                match &d.doi {
                    Some(doi) => e.0.insert(battlink::semantic::normalize_doi(doi)),
                    None => e.1.insert(d.doc_id.clone()),
                };
            }
        }
    }
    assert_eq!(scan, corpus.truth);
    let got: BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)> = found
        .iter()
        .map(|(c, m)| {
            (
                c.clone(),
                (
                    m.dois.iter().cloned().collect(),
                    m.unlinked_doc_ids.iter().cloned().collect(),
                ),
            )
        })
        .collect();
    assert_eq!(got, corpus.truth);
}

#[test]
fn parallel_build_is_deterministic() {
    let aliases = alias_list(&fixture_aliases());
    let corpus = common::planted_corpus(&mut StdRng::seed_from_u64(7), 300, &aliases);
    let a = CorpusIndex::build(&corpus.docs).unwrap();
    let mut reversed = corpus.docs.clone();
    reversed.reverse();
    let b = CorpusIndex::build(&reversed).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let mut inc = CorpusIndex::new();
    for d in corpus.docs.iter().take(50) {
        inc.index_document(d).unwrap();
    }
    assert_eq!(inc, CorpusIndex::build(&corpus.docs[..50]).unwrap());
}

#[test]
fn concurrent_searches() {
    let aliases = alias_list(&fixture_aliases());
    let corpus = common::planted_corpus(&mut StdRng::seed_from_u64(3), 200, &aliases);
    let index = CorpusIndex::build(&corpus.docs).unwrap();
    let expected = index.search_phrase("LG MJ1");
    std::thread::scope(|s| {
        for _ in 0..4 {
            s.spawn(|| assert_eq!(index.search_phrase("lg-mj1"), expected));
        }
    });
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("lg".to_string()),
        Just("mj1".to_string()),
        Just("chem".to_string()),
        Just("inr18650".to_string()),
        Just("Cell".to_string()),
        "[a-zA-Z0-9]{1,4}",
    ]
}

fn sep() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![" ", "-", "_", "  ", ", ", ". ", " (", ") ", "\n", "--"])
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec((word(), sep()), 0..30)
        .prop_map(|parts| parts.into_iter().map(|(w, s)| format!("{w}{s}")).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalization_is_idempotent(s in "\\PC{0,40}|(10\\.[0-9]{4}/[a-zA-Z.()_-]{1,10}[ .,]?){1,3}") {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once), once.clone());
        prop_assert!(!once.starts_with(' ') && !once.ends_with(' ') && !once.contains("  "));
    }

    #[test]
    fn search_agrees_with_token_scan(texts in prop::collection::vec(text(), 1..8), phrase in prop::collection::vec((word(), sep()), 1..4)) {
        let docs: Vec<Document> = texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), None, t.clone())).collect();
        let index = CorpusIndex::build(&docs).unwrap();
        let phrase: String = phrase.into_iter().map(|(w, s)| format!("{w}{s}")).collect();
        let needle = common::naive_tokens(&phrase);
        let mut expected = Vec::new();
        for d in &docs {
            let hay = common::naive_tokens(&d.text);
            prop_assert_eq!(tokenize(&d.text), hay.clone());
            expected.extend(common::naive_find(&hay, &needle).into_iter().map(|p| (d.doc_id.clone(), p)));
        }
        prop_assert_eq!(index.search_phrase(&phrase), expected);
        index.check().unwrap();
    }

    #[test]
    fn linking_reaches_a_fixed_point(seed in any::<u64>()) {
        let set = fixture_aliases();
        let corpus = common::planted_corpus(&mut StdRng::seed_from_u64(seed), 40, &alias_list(&set));
        let mentions = find_cell_mentions(&CorpusIndex::build(&corpus.docs).unwrap(), &set);
        let mut records = load_cell_dir(fixture("cells"), &ContextMap::pinned()).unwrap();
        link_papers(&mut records, &mentions);
        let once = records.clone();
        prop_assert_eq!(link_papers(&mut records, &mentions).added, 0);
        prop_assert_eq!(records, once);
    }
}
