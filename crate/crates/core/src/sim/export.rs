use super::SimTrace;

pub const TRACE_CSV_HEADER: [&str; 7] = ["t_s", "current_a", "voltage_v", "soc", "block", "iter", "step"];
pub const EVENTS_CSV_HEADER: [&str; 5] = ["t_s", "block", "iter", "step", "kind"];

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("writing to memory cannot fail");
    String::from_utf8(bytes).expect("CSV built from UTF-8 fields")
}

/// Trace rows as CSV. Floats use the shortest decimal that parses back exactly.
pub fn trace_to_csv(trace: &SimTrace) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(TRACE_CSV_HEADER).expect("in-memory write");
    for r in &trace.rows {
        w.write_record([
            r.t_s.to_string(),
            r.current_a.to_string(),
            r.voltage_v.to_string(),
            r.soc.to_string(),
            r.block.to_string(),
            r.iteration.to_string(),
            r.step.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

pub fn events_to_csv(trace: &SimTrace) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(EVENTS_CSV_HEADER).expect("in-memory write");
    for e in &trace.events {
        w.write_record([
            e.t_s.to_string(),
            e.id.block.to_string(),
            e.id.iteration.to_string(),
            e.id.step.to_string(),
            e.kind.as_str().to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}
