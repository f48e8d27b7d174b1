//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line.

mod common;

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use battlink::corpus::{find_cell_mentions, link_papers, AliasSet, CorpusIndex};
use battlink::graph::{execute_query, parse_query, TripleStore};
use battlink::protocol::{parse_protocol, serialize_protocol, validate_protocol};
use battlink::semantic::{
    cell_record_to_triples, emit_cell_jsonld, load_cell_dir, triples_to_cell_record, CellRecord, ContextMap,
};
use battlink::sim::{build_reference_model, capacity_check, simulate, EventKind, SimConfig};
use battlink::transform::{
    emit_protocol_jsonld, export_experiment_text, resolve_quantities, unroll, ResolvedBlock, ResolvedProtocol,
    ResolvedStep, ResolvedTermination,
};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::Value;

const RATED_CAPACITY: &str =
    "https://w3id.org/emmo/domain/electrochemistry#electrochemistry_9b3b4668_0795_4a35_9965_2af383497a26";

type Outcome = Result<String, String>;

/// Number, title, check and time budget.
type Criterion = (u32, &'static str, fn() -> Outcome, Duration);

fn fixture(rel: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(fixture(rel)).unwrap()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn minimal_example() -> Outcome {
    let p = parse_protocol(&read("protocols/minimal_example.json")).map_err(|e| e.to_string())?;
    let report = validate_protocol(&p);
    ensure!(
        report.errors.is_empty(),
        "validation errors: {:?}",
        report.error_codes()
    );
    let rp = resolve_quantities(&p).map_err(|e| e.to_string())?;
    let step = &rp.instructions[0].sequence[0];
    ensure!(
        matches!(step, ResolvedStep::ElectricCurrent { current_a, .. } if *current_a == 2.5),
        "step resolved to {step:?}"
    );
    let text = export_experiment_text(&rp);
    ensure!(text == ["Charge at 2.5 A until 4.2 V"], "experiment text {text:?}");
    Ok("1 C at 2.5 Ah resolves to 2.5 A; \"Charge at 2.5 A until 4.2 V\"".into())
}

fn cycle_life_parse() -> Outcome {
    let p = parse_protocol(&read("protocols/cycle_life_mj1.json")).map_err(|e| e.to_string())?;
    let shape: Vec<(Option<&str>, usize, u32)> = p
        .instructions
        .iter()
        .map(|b| (b.name.as_deref(), b.sequence.len(), b.repeat))
        .collect();
    ensure!(
        shape
            == [
                (Some("HighDrainrateChargeDischargecondition"), 5, 400),
                (Some("cycle_401_reference_test"), 3, 1)
            ],
        "blocks {shape:?}"
    );
    let rp = resolve_quantities(&p).map_err(|e| e.to_string())?;
    let flat = unroll(&rp).len();
    ensure!(flat == 2003 && rp.flat_len() == 2003, "unrolled to {flat} steps");
    Ok("2 blocks (5 x 400, 3 x 1), 2003 flat steps".into())
}

fn single_block(steps: Vec<ResolvedStep>) -> ResolvedProtocol {
    ResolvedProtocol {
        name: "closed-form".into(),
        subject_of: None,
        id: None,
        citation: None,
        capacity_ah: Some(2.5),
        instructions: vec![ResolvedBlock {
            name: None,
            repeat: 1,
            sequence: steps,
        }],
    }
}

fn closed_form() -> Outcome {
    let cfg = SimConfig::default();
    let cc = ResolvedStep::ElectricCurrent {
        current_a: 2.5,
        terminations: vec![ResolvedTermination::Voltage(4.2)],
    };
    let cv = ResolvedStep::Voltage {
        voltage_v: 4.2,
        terminations: vec![ResolvedTermination::ElectricCurrent(0.1)],
    };

    let ideal = build_reference_model(2.5, 3.0, 4.2, 0.0).map_err(|e| e.to_string())?;
    let trace = simulate(&single_block(vec![cc.clone()]), &ideal, &cfg).map_err(|e| e.to_string())?;
    let (t_a, soc_a) = (trace.events[0].t_s, trace.rows.last().unwrap().soc);
    ensure!(
        trace.events[0].kind == EventKind::Voltage,
        "(a) ended by {}",
        trace.events[0].kind
    );
    ensure!(
        close(t_a, 3600.0, 0.5) && close(soc_a, 1.0, 1e-6),
        "(a) t = {t_a}, soc = {soc_a}"
    );

    let (r0, k) = (0.02, 1.2);
    let m = build_reference_model(2.5, 3.0, 4.2, r0).map_err(|e| e.to_string())?;
    let trace = simulate(&single_block(vec![cc, cv]), &m, &cfg).map_err(|e| e.to_string())?;
    let t_b = trace.events[0].t_s;
    // CC ends where OCV + I r0 = 4.2; SOC follows from the linear OCV and
    // the time from dSOC/dt = I / (3600 Q) with I = Q = 2.5.
    let t_b_exact = (4.2 - 2.5 * r0 - 3.0) / k * 3600.0;
    ensure!(close(t_b, t_b_exact, 1.0) && close(t_b, 3450.0, 1.0), "(b) t = {t_b}");
    let hold = trace.events[1].t_s - t_b;
    let tau = 3600.0 * 2.5 * r0 / k;
    let hold_exact = tau * (2.5f64 / 0.1).ln();
    let soc_c = trace.rows.last().unwrap().soc;
    let soc_c_exact = (4.2 - 0.1 * r0 - 3.0) / k;
    ensure!(
        close(hold, hold_exact, 1.0) && close(hold, 482.8, 1.0),
        "(c) hold = {hold}"
    );
    ensure!(close(soc_c, soc_c_exact, 1e-4), "(c) soc = {soc_c}");
    Ok(format!(
        "(a) {t_a:.3} s, SOC {soc_a:.7}; (b) {t_b:.3} s; (c) hold {hold:.2} s, SOC {soc_c:.6}"
    ))
}

fn cycle_life_fade() -> Outcome {
    let p = parse_protocol(&read("protocols/cycle_life_mj1.json")).map_err(|e| e.to_string())?;
    let rp = resolve_quantities(&p).map_err(|e| e.to_string())?;
    let (cap, v_lo, v_hi) = (3.4, 2.5, 4.2);
    // Small series resistance: a CV hold needs r0 > 0, but the IR drop
    // should barely shift the end-of-step SOCs.
    let r0 = 0.001;
    let fade = 0.2 / 400.0;
    let m = build_reference_model(cap, v_lo, v_hi, r0)
        .and_then(|m| m.with_fade(fade))
        .map_err(|e| e.to_string())?;
    ensure!(
        close(m.capacity_at(400), 0.8 * cap, 1e-12),
        "Q_400 = {}",
        m.capacity_at(400)
    );
    let cfg = SimConfig {
        dt_s: 10.0,
        ..SimConfig::default()
    };
    let trace = simulate(&rp, &m, &cfg).map_err(|e| e.to_string())?;
    ensure!(trace.events.len() == 2003, "{} step events", trace.events.len());
    let ratio = capacity_check(&trace, "cycle_401_reference_test", cap).map_err(|e| e.to_string())?;
    // Oracle: the reference discharge runs from the CV end point (|I| = 0.05 A)
    // to the cut-off under 0.68 A, on the faded capacity.
    let soc = |v: f64| (v - v_lo) / (v_hi - v_lo);
    let expected = 0.8 * (soc(v_hi - 0.05 * r0) - soc(v_lo + 0.2 * cap * r0));
    ensure!(
        close(ratio, expected, 1e-3),
        "ratio {ratio} differs from the closed form {expected}"
    );
    ensure!(close(ratio, 0.80, 0.005), "ratio {ratio}");
    Ok(format!(
        "capacity ratio {ratio:.4} after 400 faded cycles (closed form {expected:.4})"
    ))
}

fn knowledge_graph() -> Outcome {
    let ctx = ContextMap::pinned();
    let records = load_cell_dir(fixture("cells"), &ctx).map_err(|e| e.to_string())?;
    ensure!(records.len() >= 10, "only {} records", records.len());
    let mut store = TripleStore::new();
    store.insert_records(&records, &ctx);
    let run = |name: &str| -> Result<battlink::graph::ResultTable, String> {
        let q = parse_query(&read(&format!("queries/{name}"))).map_err(|e| e.to_string())?;
        Ok(execute_query(&store, &q))
    };

    let mj1 = run("mj1_capacity.rq")?;
    ensure!(
        mj1.len() == 1 && mj1.rows[0][0].as_number() == Some(3.4),
        "(a) {:?}",
        mj1.rows
    );

    let range = run("range_3_4.rq")?;
    let mut got: Vec<&str> = range.rows.iter().filter_map(|r| r[0].as_iri()).collect();
    let mut want: Vec<&str> = records
        .iter()
        .filter(|r| (3.0..=4.0).contains(&r.rated_capacity_ah))
        .map(|r| r.id.as_str())
        .collect();
    got.sort_unstable();
    want.sort_unstable();
    ensure!(got == want, "(b) {got:?} vs {want:?}");

    let papers = run("papers_for_m50.rq")?;
    let dois: Vec<&str> = papers.rows.iter().filter_map(|r| r[0].as_text()).collect();
    let m50 = records
        .iter()
        .find(|r| r.product_name == "INR21700 M50")
        .ok_or("no M50 fixture")?;
    ensure!(dois == m50.paper_dois, "(c) {dois:?}");

    let mut rng = StdRng::seed_from_u64(2024);
    for i in 0..200 {
        let triples = common::random_store(&mut rng, 500);
        let q = common::random_query(&mut rng);
        let mut s = TripleStore::new();
        s.insert_triples(triples.clone());
        ensure!(
            execute_query(&s, &q).rows == common::brute_force(&triples, &q),
            "pair {i} differs: {q}"
        );
    }
    Ok(format!(
        "MJ1 = 3.4 Ah; {} cells in 3-4 Ah; {} M50 DOIs; 200/200 random pairs agree",
        got.len(),
        dois.len()
    ))
}

fn round_trips() -> Outcome {
    let mut names: Vec<_> = std::fs::read_dir(fixture("protocols"))
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    for path in &names {
        let p =
            parse_protocol(&std::fs::read_to_string(path).unwrap()).map_err(|e| format!("{}: {e}", path.display()))?;
        let again = parse_protocol(&serialize_protocol(&p)).map_err(|e| format!("{}: {e}", path.display()))?;
        ensure!(again == p, "{} changed in a round trip", path.display());
    }
    let ctx = ContextMap::pinned();
    let mut rng = StdRng::seed_from_u64(6);
    for n in 0..500 {
        let r: CellRecord = common::random_record(&mut rng, n);
        let back = triples_to_cell_record(&cell_record_to_triples(&r, &ctx), &ctx).map_err(|e| e.to_string())?;
        ensure!(back == r, "record {n} changed: {r:?}");
    }
    Ok(format!("{} protocol fixtures, 500 random cell records", names.len()))
}

fn corpus_linking() -> Outcome {
    let ctx = ContextMap::pinned();
    let mut records = load_cell_dir(fixture("cells"), &ctx).map_err(|e| e.to_string())?;
    let extra = AliasSet::from_json(&read("aliases.json")).map_err(|e| e.to_string())?;
    let aliases = AliasSet::from_records(&records)
        .and_then(|a| a.merged(&extra))
        .map_err(|e| e.to_string())?;
    let list: Vec<(String, Vec<String>)> = aliases
        .cells()
        .map(|c| (c.to_string(), aliases.aliases(c).unwrap().to_vec()))
        .collect();
    let corpus = common::planted_corpus(&mut StdRng::seed_from_u64(77), 1000, &list);
    let index = CorpusIndex::build(&corpus.docs).map_err(|e| e.to_string())?;
    let found = find_cell_mentions(&index, &aliases);

    // Brute-force scan of every document for every alias.
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for d in &corpus.docs {
        let hay = common::naive_tokens(&d.text);
        for (cell, names) in &list {
            let truth = names
                .iter()
                .any(|a| !common::naive_find(&hay, &common::naive_tokens(a)).is_empty());
            let reported = found.get(cell).is_some_and(|m| match &d.doi {
                Some(doi) => m.dois.contains(&battlink::semantic::normalize_doi(doi)),
                None => m.unlinked_doc_ids.contains(&d.doc_id),
            });
            match (truth, reported) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
    }
    ensure!(tp > 0, "no planted mentions");
    let recall = tp as f64 / (tp + fn_) as f64;
    let precision = tp as f64 / (tp + fp) as f64;
    ensure!(
        recall == 1.0 && precision == 1.0,
        "recall {recall}, precision {precision}"
    );

    link_papers(&mut records, &found);
    let once = records.clone();
    let second = link_papers(&mut records, &found);
    ensure!(records == once && second.added == 0, "second link changed records");
    Ok(format!(
        "{tp} document-cell mentions, recall 1.0, precision 1.0; linking idempotent"
    ))
}

/// Every non-@ key in `v` must have its own entry in `ctx`.
fn uncovered_keys(v: &Value, ctx: &serde_json::Map<String, Value>, out: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                if k != "@context" {
                    if !k.starts_with('@') && !ctx.contains_key(k) {
                        out.push(k.clone());
                    }
                    uncovered_keys(child, ctx, out);
                }
            }
        }
        Value::Array(items) => items.iter().for_each(|i| uncovered_keys(i, ctx, out)),
        _ => {}
    }
}

fn jsonld_closure() -> Outcome {
    let ctx = ContextMap::pinned();
    let mut docs = Vec::new();
    for name in [
        "minimal_example.json",
        "cycle_life_mj1.json",
        "cccv_charge.json",
        "pulse_with_guard.json",
    ] {
        let p = parse_protocol(&read(&format!("protocols/{name}"))).map_err(|e| e.to_string())?;
        docs.push((
            name.to_string(),
            emit_protocol_jsonld(&p, &ctx).map_err(|e| e.to_string())?,
        ));
    }
    for r in load_cell_dir(fixture("cells"), &ctx).map_err(|e| e.to_string())? {
        docs.push((r.id.clone(), emit_cell_jsonld(&r, &ctx)));
    }
    let mut rated_seen = 0;
    for (name, text) in &docs {
        let v: Value = serde_json::from_str(text).map_err(|e| format!("{name}: {e}"))?;
        let context = v
            .get("@context")
            .and_then(Value::as_object)
            .ok_or(format!("{name}: no inline @context"))?;
        let mut missing = Vec::new();
        uncovered_keys(&v, context, &mut missing);
        ensure!(missing.is_empty(), "{name}: keys without a context entry: {missing:?}");
        if let Some(def) = context.get("RatedCapacity") {
            let iri = def.as_str().or_else(|| def.get("@id").and_then(Value::as_str));
            ensure!(iri == Some(RATED_CAPACITY), "{name}: RatedCapacity maps to {iri:?}");
            rated_seen += 1;
        }
    }
    ensure!(
        rated_seen == docs.len(),
        "RatedCapacity defined in {rated_seen} of {} documents",
        docs.len()
    );
    ensure!(
        ctx.iri("RatedCapacity") == Some(RATED_CAPACITY),
        "pinned context differs"
    );
    Ok(format!("{} documents closed; RatedCapacity IRI exact", docs.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        (
            1,
            "minimal example golden parse",
            minimal_example,
            Duration::from_secs(1),
        ),
        (
            2,
            "cycle-life protocol golden parse",
            cycle_life_parse,
            Duration::from_secs(1),
        ),
        (3, "closed-form simulation oracles", closed_form, Duration::from_secs(5)),
        (4, "cycle-life fade harness", cycle_life_fade, Duration::from_secs(60)),
        (5, "knowledge-graph queries", knowledge_graph, Duration::from_secs(30)),
        (6, "round trips", round_trips, Duration::from_secs(30)),
        (7, "corpus linking", corpus_linking, Duration::from_secs(30)),
        (8, "JSON-LD closure", jsonld_closure, Duration::from_secs(30)),
    ];
    // Written straight to stdout so the lines show without --nocapture.
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (n, title, run, budget) in criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|detail| {
            if took <= budget {
                Ok(detail)
            } else {
                Err(format!("took {took:.2?}, budget {budget:?}"))
            }
        });
        let line = match &result {
            Ok(detail) => format!("PASS criterion {n}: {title} ({took:.2?}) - {detail}"),
            Err(why) => format!("FAIL criterion {n}: {title} ({took:.2?}) - {why}"),
        };
        writeln!(out, "{line}").unwrap();
        if result.is_err() {
            failed.push(n);
        }
    }
    out.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
