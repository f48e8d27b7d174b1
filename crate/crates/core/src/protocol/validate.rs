use serde::{Deserialize, Serialize};

use super::{
    reserved_dimension, InstructionBlock, ParameterDimension, Protocol, Step, StepKind, Termination, TerminationKind,
    Unit, ValueRef, CAPACITY, LOWER_CUTOFF_VOLTAGE, UPPER_CUTOFF_VOLTAGE,
};
use crate::transform::Quantity;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn error_codes(&self) -> Vec<&str> {
        self.errors.iter().map(|f| f.code.as_str()).collect()
    }

    pub fn warning_codes(&self) -> Vec<&str> {
        self.warnings.iter().map(|f| f.code.as_str()).collect()
    }

    fn error(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Finding {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, code: &str, path: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Finding {
            code: code.into(),
            path: path.into(),
            message: message.into(),
        });
    }
}

/// Checks every document-model invariant; never fails, all findings go into the report.
///
/// A report without errors guarantees that quantity resolution succeeds.
pub fn validate_protocol(p: &Protocol) -> ValidationReport {
    let mut report = ValidationReport::default();

    if p.name.trim().is_empty() {
        report.error("EMPTY_NAME", "name", "protocol name must be non-empty");
    }
    for key in p.extra.keys() {
        report.warn(
            "UNKNOWN_KEY",
            key.as_str(),
            format!("unrecognised top-level key {key:?} kept verbatim"),
        );
    }
    check_parameters(p, &mut report);

    if p.instructions.is_empty() {
        report.warn(
            "EMPTY_INSTRUCTIONS",
            "instructions",
            "protocol has no instruction blocks",
        );
    }
    for (i, block) in p.instructions.iter().enumerate() {
        check_block(p, block, &format!("instructions[{i}]"), &mut report);
    }
    report
}

fn check_parameters(p: &Protocol, report: &mut ValidationReport) {
    for (name, param) in &p.parameters {
        let path = format!("parameters.{name}");
        match (reserved_dimension(name), param.unit) {
            (Some(ParameterDimension::AmpereHour), Some(u)) => report.error(
                "PARAMETER_UNIT_MISMATCH",
                path.as_str(),
                format!("{name} is in ampere-hours, not {u}"),
            ),
            (Some(ParameterDimension::Unit(fixed)), Some(u)) if fixed != u => report.error(
                "PARAMETER_UNIT_MISMATCH",
                path.as_str(),
                format!("{name} is in {fixed}, not {u}"),
            ),
            (None, None) => report.error(
                "UNKNOWN_PARAMETER_UNIT",
                path.as_str(),
                format!("{name} is not a reserved parameter; give it as {{\"value\": n, \"unit\": u}}"),
            ),
            _ => {}
        }
    }
    if let Some(cap) = p.parameter(CAPACITY) {
        if cap <= 0.0 {
            report.error(
                "INVALID_CAPACITY",
                format!("parameters.{CAPACITY}"),
                "capacity must be positive",
            );
        }
    }
    if let (Some(lo), Some(hi)) = (p.parameter(LOWER_CUTOFF_VOLTAGE), p.parameter(UPPER_CUTOFF_VOLTAGE)) {
        if lo >= hi {
            report.error(
                "INVALID_VOLTAGE_WINDOW",
                "parameters",
                format!("{LOWER_CUTOFF_VOLTAGE} ({lo}) must be below {UPPER_CUTOFF_VOLTAGE} ({hi})"),
            );
        }
    }
}

fn check_block(p: &Protocol, block: &InstructionBlock, path: &str, report: &mut ValidationReport) {
    if block.repeat < 1 {
        report.error("INVALID_REPEAT", format!("{path}.repeat"), "repeat must be at least 1");
    }
    if block.sequence.is_empty() {
        report.error(
            "EMPTY_SEQUENCE",
            format!("{path}.sequence"),
            "sequence must contain at least one step",
        );
    }
    for (j, step) in block.sequence.iter().enumerate() {
        check_step(p, step, &format!("{path}.sequence[{j}]"), report);
    }
}

fn check_step(p: &Protocol, step: &Step, path: &str, report: &mut ValidationReport) {
    let unit_ok = match step.kind {
        StepKind::ElectricCurrent => matches!(step.unit, Unit::CRate | Unit::Ampere),
        StepKind::Voltage => step.unit == Unit::Volt,
        StepKind::Rest => step.unit == Unit::Second,
    };
    if !unit_ok {
        report.error(
            "STEP_UNIT_MISMATCH",
            path,
            format!("{} step cannot be given in {}", step.kind, step.unit),
        );
    }

    let value = resolve_checked(p, &step.value, step.unit, path, report);

    match step.kind {
        StepKind::Rest => {
            if !step.terminations.is_empty() {
                report.error(
                    "REST_HAS_TERMINATION",
                    path,
                    "rest steps take their duration from value, not terminations",
                );
            }
            match step.value {
                ValueRef::Literal(v) if v >= 0.0 => {}
                _ => report.error(
                    "REST_DURATION_INVALID",
                    path,
                    "rest duration must be a non-negative literal",
                ),
            }
        }
        StepKind::ElectricCurrent | StepKind::Voltage => {
            if step.terminations.is_empty() {
                report.error(
                    "MISSING_TERMINATION",
                    path,
                    format!("{} step needs at least one termination", step.kind),
                );
            } else {
                let effective = if step.kind == StepKind::ElectricCurrent {
                    TerminationKind::Voltage
                } else {
                    TerminationKind::ElectricCurrent
                };
                let guarded = step
                    .terminations
                    .iter()
                    .any(|t| t.kind == effective || t.kind == TerminationKind::Time);
                if !guarded {
                    report.warn(
                        "UNGUARDED_STEP",
                        path,
                        format!(
                            "{} step has no {} or Time termination and may never end",
                            step.kind, effective
                        ),
                    );
                }
            }
        }
    }

    if let Some(v) = value {
        match step.kind {
            StepKind::ElectricCurrent if unit_ok => check_current(p, v, step.unit, path, report),
            StepKind::Voltage if v <= 0.0 => {
                report.error("INVALID_SETPOINT", path, "voltage setpoint must be positive")
            }
            _ => {}
        }
    }

    for (k, t) in step.terminations.iter().enumerate() {
        check_termination(p, t, &format!("{path}.termination[{k}]"), report);
    }
}

fn check_current(p: &Protocol, value: f64, unit: Unit, path: &str, report: &mut ValidationReport) {
    let amperes = if unit == Unit::CRate {
        match p.capacity_ah() {
            Some(cap) => Quantity::new(value, Unit::CRate).to_amperes(cap),
            None => {
                report.error(
                    "MISSING_CAPACITY",
                    path,
                    "CRate current needs a Capacity parameter to resolve",
                );
                return;
            }
        }
    } else {
        Some(value)
    };
    match amperes {
        Some(0.0) => report.error("ZERO_CURRENT", path, "current step resolves to 0 A"),
        Some(a) if !a.is_finite() => report.error(
            "NON_FINITE_CURRENT",
            path,
            "current step resolves to a non-finite value",
        ),
        _ => {}
    }
}

fn check_termination(p: &Protocol, t: &Termination, path: &str, report: &mut ValidationReport) {
    let unit_ok = t.unit == t.kind.unit();
    if !unit_ok {
        report.error(
            "TERMINATION_UNIT_MISMATCH",
            path,
            format!("{} termination must be in {}, not {}", t.kind, t.kind.unit(), t.unit),
        );
    }
    let Some(v) = resolve_checked(p, &t.value, t.unit, path, report) else {
        return;
    };
    match t.kind {
        TerminationKind::Time if v <= 0.0 => report.error("INVALID_TIME_LIMIT", path, "time limit must be positive"),
        TerminationKind::Voltage => {
            if let Some(hi) = p.parameter(UPPER_CUTOFF_VOLTAGE) {
                if v > hi {
                    report.warn(
                        "TERMINATION_OUTSIDE_WINDOW",
                        path,
                        format!("{v} V exceeds {UPPER_CUTOFF_VOLTAGE} ({hi} V)"),
                    );
                }
            }
            if let Some(lo) = p.parameter(LOWER_CUTOFF_VOLTAGE) {
                if v < lo {
                    report.warn(
                        "TERMINATION_OUTSIDE_WINDOW",
                        path,
                        format!("{v} V is below {LOWER_CUTOFF_VOLTAGE} ({lo} V)"),
                    );
                }
            }
        }
        _ => {}
    }
}

/// Resolves a value reference, reporting dangling or dimensionally wrong parameters.
fn resolve_checked(
    p: &Protocol,
    value: &ValueRef,
    unit: Unit,
    path: &str,
    report: &mut ValidationReport,
) -> Option<f64> {
    match value {
        ValueRef::Literal(v) => Some(*v),
        ValueRef::Parameter(name) => {
            let Some(param) = p.parameters.get(name) else {
                report.error(
                    "UNRESOLVED_PARAMETER",
                    path,
                    format!("parameter {name:?} is not defined"),
                );
                return None;
            };
            let dim = reserved_dimension(name).or(param.unit.map(ParameterDimension::Unit));
            match dim {
                Some(ParameterDimension::Unit(u)) if u == unit => Some(param.value),
                // Already reported under parameters.
                None => None,
                Some(_) => {
                    report.error(
                        "PARAMETER_UNIT_MISMATCH",
                        path,
                        format!("parameter {name:?} cannot be used as a value in {unit}"),
                    );
                    None
                }
            }
        }
    }
}
