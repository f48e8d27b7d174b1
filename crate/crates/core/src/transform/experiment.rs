//! Plain-text experiment export in the style accepted by simulation
//! packages: one instruction per line.
//!
//! Grammar:
//!
//! ```text
//! Charge at {I} A until {V} V
//! Discharge at {I} A until {V} V
//! Hold at {V} V until {I} A
//! Rest for {t} seconds
//! ```
//!
//! A step whose terminations include a time limit reads
//! `... for {t} seconds`, followed by `or until ...` for any other limits.
//! Blocks that repeat more than once are introduced by a `Repeat {n}:` line
//! and their steps are indented by two spaces.

use super::{ResolvedProtocol, ResolvedStep, ResolvedTermination};

/// Formats a magnitude with at least one decimal and at most nine,
/// never in exponent form.
pub fn format_magnitude(x: f64) -> String {
    let mut s = format!("{:.9}", x.abs());
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    s
}

fn clauses(terminations: &[ResolvedTermination]) -> String {
    let mut parts = Vec::new();
    for t in terminations {
        if let ResolvedTermination::Time(s) = t {
            parts.push(format!("for {} seconds", format_magnitude(*s)));
        }
    }
    for t in terminations {
        match t {
            ResolvedTermination::Voltage(v) => parts.push(format!("until {} V", format_magnitude(*v))),
            ResolvedTermination::ElectricCurrent(i) => parts.push(format!("until {} A", format_magnitude(*i))),
            ResolvedTermination::Time(_) => {}
        }
    }
    parts.join(" or ")
}

/// Text for a single resolved step.
pub fn step_text(step: &ResolvedStep) -> String {
    match step {
        ResolvedStep::ElectricCurrent {
            current_a,
            terminations,
        } => {
            let verb = if *current_a > 0.0 { "Charge" } else { "Discharge" };
            let mut s = format!("{verb} at {} A", format_magnitude(*current_a));
            let tail = clauses(terminations);
            if !tail.is_empty() {
                s.push(' ');
                s.push_str(&tail);
            }
            s
        }
        ResolvedStep::Voltage {
            voltage_v,
            terminations,
        } => {
            let mut s = format!("Hold at {} V", format_magnitude(*voltage_v));
            let tail = clauses(terminations);
            if !tail.is_empty() {
                s.push(' ');
                s.push_str(&tail);
            }
            s
        }
        ResolvedStep::Rest { duration_s } => {
            format!("Rest for {} seconds", format_magnitude(*duration_s))
        }
    }
}

pub fn export_experiment_text(rp: &ResolvedProtocol) -> Vec<String> {
    let mut lines = Vec::new();
    for block in &rp.instructions {
        if block.repeat > 1 {
            lines.push(format!("Repeat {}:", block.repeat));
            lines.extend(block.sequence.iter().map(|s| format!("  {}", step_text(s))));
        } else {
            lines.extend(block.sequence.iter().map(step_text));
        }
    }
    lines
}
