//! `battlink` command-line tool. Payload goes to stdout (or `-o`),
//! diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 validation errors, 2 I/O or parse failure,
//! 3 simulation error, 4 query syntax error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use battlink::corpus::{find_cell_mentions, link_papers, load_manifest, AliasSet, CorpusError, CorpusIndex};
use battlink::graph::{execute_query, parse_query, TripleStore};
use battlink::protocol::{parse_protocol, validate_protocol, Protocol};
use battlink::semantic::{
    cell_record_to_triples, load_cell_dir, load_context, parse_ntriples, records_from_triples, CellError, ContextMap,
    LoadError, Triple,
};
use battlink::sim::{build_reference_model, events_to_csv, simulate, trace_to_csv, SimConfig};
use battlink::transform::{
    emit_protocol_jsonld, export_experiment_text, resolve_quantities, step_text, unroll, ResolvedProtocol,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "battlink",
    version,
    about = "Battery cycling protocols, cell knowledge graph and paper linking"
)]
struct Cli {
    /// Context file mapping terms to IRIs (default: the built-in context).
    #[arg(long, global = true, value_name = "PATH")]
    context: Option<PathBuf>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the payload here instead of stdout (`-` is stdout).
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Check a protocol document and print the error/warning report.
    Validate { protocol: PathBuf },
    /// Print the protocol with every quantity in A, V or s.
    Resolve { protocol: PathBuf },
    /// Print one line per executed step, repeats expanded.
    Unroll { protocol: PathBuf },
    /// Run the protocol on a linear-OCV cell model.
    Simulate {
        protocol: PathBuf,
        /// Cell capacity in Ah (default: the protocol's Capacity parameter).
        #[arg(long)]
        capacity: Option<f64>,
        /// OCV at SOC 0 in V (default: LowerCutoffVoltage).
        #[arg(long)]
        vmin: Option<f64>,
        /// OCV at SOC 1 in V (default: UpperCutoffVoltage).
        #[arg(long)]
        vmax: Option<f64>,
        /// Series resistance in ohm.
        #[arg(long, default_value_t = 0.01)]
        r0: f64,
        /// Fractional capacity loss per completed block iteration.
        #[arg(long, default_value_t = 0.0)]
        fade: f64,
        /// Initial state of charge.
        #[arg(long, default_value_t = 0.0)]
        soc0: f64,
        /// Nominal time step in s.
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        /// Termination time tolerance in s.
        #[arg(long, default_value_t = 1e-3)]
        event_tol: f64,
        /// Longest allowed step duration in s.
        #[arg(long, default_value_t = 86_400.0)]
        max_step: f64,
        /// Also write the step-end events as CSV.
        #[arg(long, value_name = "PATH")]
        events: Option<PathBuf>,
    },
    /// Print the protocol as plain experiment text.
    ExportExperiment { protocol: PathBuf },
    /// Print the protocol as a JSON-LD document.
    Jsonld { protocol: PathBuf },
    /// Read a directory of cell records and print their N-Triples.
    IngestCells { dir: PathBuf },
    /// Run a query against an N-Triples store.
    Query { store: PathBuf, query: PathBuf },
    /// Build a corpus index from a `doc_id,doi,path` manifest.
    IndexCorpus { manifest: PathBuf },
    /// Find cell mentions in an index and add their DOIs to the store.
    Link {
        store: PathBuf,
        index: PathBuf,
        /// Extra aliases: JSON map of cell IRI to names.
        #[arg(long, value_name = "PATH")]
        aliases: Option<PathBuf>,
        /// Also write the mentions report as JSON.
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Validation(String),
    Input(String),
    Simulation(String),
    QuerySyntax(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Simulation(_) => 3,
            Failure::QuerySyntax(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Input(m) | Failure::Simulation(m) | Failure::QuerySyntax(m) => m,
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_protocol(path: &Path) -> Result<Protocol> {
    parse_protocol(&read(path)?).map_err(|e| Failure::Input(format!("{}: [{}] {e}", path.display(), e.code())))
}

fn load_resolved(path: &Path) -> Result<ResolvedProtocol> {
    let p = load_protocol(path)?;
    resolve_quantities(&p).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn load_store(path: &Path) -> Result<Vec<Triple>> {
    parse_ntriples(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn tsv_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

struct App {
    context: ContextMap,
    format: Option<Format>,
    output: PathBuf,
}

impl App {
    /// Writes the payload of a command that still fails afterwards.
    fn emit_partial(&self, payload: &str) -> Result<()> {
        write_to(&self.output, payload)
    }

    fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn run(&self, command: Command) -> Result<String> {
        match command {
            Command::Validate { protocol } => {
                let report = validate_protocol(&load_protocol(&protocol)?);
                for f in report.errors.iter().chain(&report.warnings) {
                    eprintln!("{}: {} at {}: {}", protocol.display(), f.code, f.path, f.message);
                }
                let out = match self.format_or(Format::Json) {
                    Format::Json => pretty(&report),
                    Format::Tsv | Format::Csv => {
                        let mut s = String::from("severity\tcode\tpath\tmessage\n");
                        for (sev, list) in [("error", &report.errors), ("warning", &report.warnings)] {
                            for f in list {
                                let _ = writeln!(s, "{sev}\t{}\t{}\t{}", f.code, f.path, tsv_field(&f.message));
                            }
                        }
                        s
                    }
                };
                if report.errors.is_empty() {
                    Ok(out)
                } else {
                    // The report is still the payload; the exit code carries the verdict.
                    self.emit_partial(&out)?;
                    Err(Failure::Validation(format!(
                        "{} validation error(s)",
                        report.errors.len()
                    )))
                }
            }
            Command::Resolve { protocol } => Ok(pretty(&load_resolved(&protocol)?)),
            Command::Unroll { protocol } => {
                let rp = load_resolved(&protocol)?;
                let mut out = String::new();
                for fs in unroll(&rp) {
                    match self.format_or(Format::Json) {
                        Format::Json => {
                            out.push_str(&serde_json::to_string(&fs).expect("serializable"));
                            out.push('\n');
                        }
                        Format::Tsv | Format::Csv => {
                            let sep = if self.format == Some(Format::Csv) { ',' } else { '\t' };
                            let _ = writeln!(
                                out,
                                "{}{sep}{}{sep}{}{sep}{}",
                                fs.id.block,
                                fs.id.iteration,
                                fs.id.step,
                                step_text(&fs.step)
                            );
                        }
                    }
                }
                Ok(out)
            }
            Command::Simulate {
                protocol,
                capacity,
                vmin,
                vmax,
                r0,
                fade,
                soc0,
                dt,
                event_tol,
                max_step,
                events,
            } => {
                let p = load_protocol(&protocol)?;
                let rp = resolve_quantities(&p).map_err(|e| Failure::Validation(e.to_string()))?;
                let need = |v: Option<f64>, param: &str, flag: &str| {
                    v.or_else(|| p.parameter(param)).ok_or_else(|| {
                        Failure::Input(format!("no {flag} given and the protocol has no {param} parameter"))
                    })
                };
                let capacity = need(capacity, "Capacity", "--capacity")?;
                let vmin = need(vmin, "LowerCutoffVoltage", "--vmin")?;
                let vmax = need(vmax, "UpperCutoffVoltage", "--vmax")?;
                let model = build_reference_model(capacity, vmin, vmax, r0)
                    .and_then(|m| m.with_fade(fade))
                    .map_err(|e| Failure::Simulation(e.to_string()))?;
                let cfg = SimConfig {
                    dt_s: dt,
                    event_tol_s: event_tol,
                    max_step_duration_s: max_step,
                    initial_soc: soc0,
                };
                let trace = simulate(&rp, &model, &cfg).map_err(|e| Failure::Simulation(e.to_string()))?;
                eprintln!(
                    "{} rows, {} steps, {:.1} s simulated",
                    trace.rows.len(),
                    trace.events.len(),
                    trace.rows.last().map_or(0.0, |r| r.t_s)
                );
                if let Some(path) = events {
                    write_to(&path, &events_to_csv(&trace))?;
                }
                Ok(match self.format_or(Format::Csv) {
                    Format::Csv => trace_to_csv(&trace),
                    Format::Tsv => trace_to_csv(&trace).replace(',', "\t"),
                    Format::Json => pretty(&json!({
                        "events": trace.events,
                        "per_cycle": trace.per_cycle,
                        "final": trace.rows.last(),
                    })),
                })
            }
            Command::ExportExperiment { protocol } => {
                let lines = export_experiment_text(&load_resolved(&protocol)?);
                Ok(match self.format {
                    Some(Format::Json) => pretty(&lines),
                    _ => lines.iter().map(|l| format!("{l}\n")).collect(),
                })
            }
            Command::Jsonld { protocol } => {
                let p = load_protocol(&protocol)?;
                let mut doc =
                    emit_protocol_jsonld(&p, &self.context).map_err(|e| Failure::Validation(e.to_string()))?;
                doc.push('\n');
                Ok(doc)
            }
            Command::IngestCells { dir } => {
                let records = load_cell_dir(&dir, &self.context).map_err(|e| match e {
                    LoadError::Io(e) => Failure::Input(format!("{}: {e}", dir.display())),
                    LoadError::Record {
                        path,
                        source: source @ CellError::Json(_),
                    } => Failure::Input(format!("{path}: {source}")),
                    LoadError::Record { path, source } => Failure::Validation(format!("{path}: {source}")),
                })?;
                let mut store = TripleStore::new();
                let added = store.insert_records(&records, &self.context);
                eprintln!("{} records, {added} triples", records.len());
                Ok(store.to_ntriples())
            }
            Command::Query { store, query } => {
                let triples = load_store(&store)?;
                let q = parse_query(&read(&query)?)
                    .map_err(|e| Failure::QuerySyntax(format!("{}: [{}] {e}", query.display(), e.code())))?;
                let mut s = TripleStore::new();
                s.insert_triples(triples);
                let table = execute_query(&s, &q);
                eprintln!("{} row(s)", table.len());
                Ok(match self.format_or(Format::Tsv) {
                    Format::Json => pretty(&table.to_json()),
                    Format::Tsv | Format::Csv => table.to_tsv(),
                })
            }
            Command::IndexCorpus { manifest } => {
                let docs = load_manifest(&manifest).map_err(corpus_failure)?;
                let index = CorpusIndex::build(&docs).map_err(corpus_failure)?;
                eprintln!("{} documents indexed", index.len());
                Ok(index.to_json() + "\n")
            }
            Command::Link {
                store,
                index,
                aliases,
                report,
            } => {
                let triples = load_store(&store)?;
                let mut records = records_from_triples(&triples, &self.context)
                    .map_err(|e| Failure::Validation(format!("{}: {e}", store.display())))?;
                let index = CorpusIndex::from_json(&read(&index)?).map_err(corpus_failure)?;
                let mut set = AliasSet::from_records(&records).map_err(corpus_failure)?;
                if let Some(path) = aliases {
                    let extra = AliasSet::from_json(&read(&path)?).map_err(corpus_failure)?;
                    set = set.merged(&extra).map_err(corpus_failure)?;
                }
                let mentions = find_cell_mentions(&index, &set);
                let outcome = link_papers(&mut records, &mentions);
                eprintln!(
                    "{} cell(s) mentioned, {} new DOI link(s)",
                    mentions.len(),
                    outcome.added
                );
                if let Some(path) = report {
                    write_to(&path, &pretty(&mentions))?;
                }
                let linked: Vec<Triple> = records
                    .iter()
                    .flat_map(|r| cell_record_to_triples(r, &self.context))
                    .collect();
                let mut out = TripleStore::new();
                out.insert_triples(linked);
                let out = out.to_ntriples();
                if outcome.unknown_cells.is_empty() {
                    Ok(out)
                } else {
                    self.emit_partial(&out)?;
                    let names: Vec<String> = outcome.errors().iter().map(ToString::to_string).collect();
                    Err(Failure::Validation(names.join("; ")))
                }
            }
        }
    }
}

fn corpus_failure(e: CorpusError) -> Failure {
    match e {
        CorpusError::Io { .. } | CorpusError::Csv(_) | CorpusError::Json(_) | CorpusError::BadManifest(_) => {
            Failure::Input(e.to_string())
        }
        _ => Failure::Validation(e.to_string()),
    }
}

fn write_to(path: &Path, payload: &str) -> Result<()> {
    if path == Path::new("-") {
        std::io::stdout()
            .write_all(payload.as_bytes())
            .map_err(|e| Failure::Input(e.to_string()))
    } else {
        std::fs::write(path, payload).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let context = match &cli.context {
        Some(path) => match load_context(path) {
            Ok(ctx) => ctx,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => ContextMap::pinned(),
    };
    let output = cli.output.unwrap_or_else(|| PathBuf::from("-"));
    let app = App {
        context,
        format: cli.format,
        output,
    };
    match app.run(cli.command).and_then(|payload| write_to(&app.output, &payload)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
