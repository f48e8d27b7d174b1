//! Python bindings. Structured results cross the boundary as JSON text
//! or plain lists; protocols, records and queries are passed as text.

use std::collections::BTreeMap;

use battlink::corpus::{find_cell_mentions, normalize as normalize_text, AliasSet, CorpusIndex, Document};
use battlink::graph::{execute_query, parse_query, TripleStore};
use battlink::protocol::{parse_protocol, validate_protocol, Protocol};
use battlink::semantic::{cell_record_to_triples, parse_cell_record, parse_ntriples, ContextMap};
use battlink::sim::{
    build_reference_model, capacity_check, simulate as run_simulation, trace_to_csv, SimConfig, SimTrace,
};
use battlink::transform::{emit_protocol_jsonld, export_experiment_text, resolve_quantities, unroll, ResolvedProtocol};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn protocol(text: &str) -> PyResult<Protocol> {
    parse_protocol(text).map_err(value_error)
}

fn resolved(text: &str) -> PyResult<ResolvedProtocol> {
    resolve_quantities(&protocol(text)?).map_err(value_error)
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// Validation report of a protocol document as JSON.
#[pyfunction]
fn validate(text: &str) -> PyResult<String> {
    Ok(to_json(&validate_protocol(&protocol(text)?)))
}

/// Protocol with every quantity in A, V or s, as JSON.
#[pyfunction]
fn resolve(text: &str) -> PyResult<String> {
    Ok(to_json(&resolved(text)?))
}

/// Number of steps executed once block repeats are expanded.
#[pyfunction]
fn unroll_len(text: &str) -> PyResult<usize> {
    Ok(unroll(&resolved(text)?).len())
}

#[pyfunction]
fn experiment_text(text: &str) -> PyResult<Vec<String>> {
    Ok(export_experiment_text(&resolved(text)?))
}

#[pyfunction]
fn protocol_jsonld(text: &str) -> PyResult<String> {
    emit_protocol_jsonld(&protocol(text)?, &ContextMap::pinned()).map_err(value_error)
}

#[allow(clippy::too_many_arguments)]
fn trace(
    text: &str,
    capacity: f64,
    vmin: f64,
    vmax: f64,
    r0: f64,
    fade: f64,
    soc0: f64,
    dt: f64,
) -> PyResult<SimTrace> {
    let rp = resolved(text)?;
    let model = build_reference_model(capacity, vmin, vmax, r0)
        .and_then(|m| m.with_fade(fade))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let cfg = SimConfig {
        dt_s: dt,
        initial_soc: soc0,
        ..SimConfig::default()
    };
    run_simulation(&rp, &model, &cfg).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs the protocol on a linear-OCV model and returns the trace as CSV.
#[pyfunction]
#[pyo3(signature = (text, capacity, vmin, vmax, r0, fade = 0.0, soc0 = 0.0, dt = 1.0))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    text: &str,
    capacity: f64,
    vmin: f64,
    vmax: f64,
    r0: f64,
    fade: f64,
    soc0: f64,
    dt: f64,
) -> PyResult<String> {
    Ok(trace_to_csv(&trace(text, capacity, vmin, vmax, r0, fade, soc0, dt)?))
}

/// Discharge capacity of the named block's last iteration over `capacity`.
#[pyfunction]
#[pyo3(signature = (text, block, capacity, vmin, vmax, r0, fade = 0.0, dt = 1.0))]
#[allow(clippy::too_many_arguments)]
fn capacity_ratio(
    text: &str,
    block: &str,
    capacity: f64,
    vmin: f64,
    vmax: f64,
    r0: f64,
    fade: f64,
    dt: f64,
) -> PyResult<f64> {
    let t = trace(text, capacity, vmin, vmax, r0, fade, 0.0, dt)?;
    capacity_check(&t, block, capacity).map_err(value_error)
}

/// N-Triples for a list of cell JSON-LD documents.
#[pyfunction]
fn cells_to_ntriples(docs: Vec<String>) -> PyResult<String> {
    let ctx = ContextMap::pinned();
    let mut store = TripleStore::new();
    for doc in &docs {
        let r = parse_cell_record(doc, &ctx).map_err(value_error)?;
        store.insert_triples(cell_record_to_triples(&r, &ctx));
    }
    Ok(store.to_ntriples())
}

/// Runs a query over N-Triples text; returns (columns, rows of N-Triples terms).
#[pyfunction]
fn query(ntriples: &str, text: &str) -> PyResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut store = TripleStore::new();
    store.insert_triples(parse_ntriples(ntriples).map_err(value_error)?);
    let q = parse_query(text).map_err(value_error)?;
    let table = execute_query(&store, &q);
    let rows = table
        .rows
        .iter()
        .map(|r| r.iter().map(|t| t.to_ntriples()).collect())
        .collect();
    Ok((table.columns, rows))
}

#[pyfunction]
fn normalize(text: &str) -> String {
    normalize_text(text)
}

/// Mentions report (JSON) for `(doc_id, doi, text)` documents and an alias map.
#[pyfunction]
fn find_mentions(
    docs: Vec<(String, Option<String>, String)>,
    aliases: BTreeMap<String, Vec<String>>,
) -> PyResult<String> {
    let docs: Vec<Document> = docs
        .into_iter()
        .map(|(doc_id, doi, text)| Document { doc_id, doi, text })
        .collect();
    let index = CorpusIndex::build(&docs).map_err(value_error)?;
    let aliases = AliasSet::new(aliases).map_err(value_error)?;
    Ok(to_json(&find_cell_mentions(&index, &aliases)))
}

#[pymodule]
fn pybattlink(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(resolve, m)?)?;
    m.add_function(wrap_pyfunction!(unroll_len, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_text, m)?)?;
    m.add_function(wrap_pyfunction!(protocol_jsonld, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(capacity_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(cells_to_ntriples, m)?)?;
    m.add_function(wrap_pyfunction!(query, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(find_mentions, m)?)?;
    Ok(())
}
