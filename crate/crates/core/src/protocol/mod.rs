//! Battery cycler language (BCL) document model.
//!
//! A [`Protocol`] is a named list of [`InstructionBlock`]s, each of which
//! repeats a sequence of [`Step`]s. Step and termination values are either
//! literals or references into the protocol's parameter table.
//!
//! Sign convention, shared by every module in this crate: positive current
//! charges the cell, negative current discharges it.

mod parse;
mod serialize;
mod validate;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

pub use parse::{parse_protocol, ParseError};
pub use serialize::serialize_protocol;
pub use validate::{validate_protocol, Finding, ValidationReport};

/// Rated capacity parameter, ampere-hours.
pub const CAPACITY: &str = "Capacity";
/// Lower cut-off voltage parameter, volts.
pub const LOWER_CUTOFF_VOLTAGE: &str = "LowerCutoffVoltage";
/// Upper cut-off voltage parameter, volts.
pub const UPPER_CUTOFF_VOLTAGE: &str = "UpperCutoffVoltage";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepKind {
    ElectricCurrent,
    Voltage,
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationKind {
    Voltage,
    ElectricCurrent,
    /// Elapsed step time. Not part of the original language; a safety valve.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    CRate,
    Ampere,
    Volt,
    Second,
}

impl StepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StepKind::ElectricCurrent => "ElectricCurrent",
            StepKind::Voltage => "Voltage",
            StepKind::Rest => "Rest",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "ElectricCurrent" => Some(StepKind::ElectricCurrent),
            "Voltage" => Some(StepKind::Voltage),
            "Rest" => Some(StepKind::Rest),
            _ => None,
        }
    }
}

impl TerminationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminationKind::Voltage => "Voltage",
            TerminationKind::ElectricCurrent => "ElectricCurrent",
            TerminationKind::Time => "Time",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "Voltage" => Some(TerminationKind::Voltage),
            "ElectricCurrent" => Some(TerminationKind::ElectricCurrent),
            "Time" => Some(TerminationKind::Time),
            _ => None,
        }
    }

    /// The only unit a termination of this kind may carry.
    pub fn unit(self) -> Unit {
        match self {
            TerminationKind::Voltage => Unit::Volt,
            TerminationKind::ElectricCurrent => Unit::Ampere,
            TerminationKind::Time => Unit::Second,
        }
    }
}

impl Unit {
    pub fn as_str(self) -> &'static str {
        match self {
            Unit::CRate => "CRate",
            Unit::Ampere => "Ampere",
            Unit::Volt => "Volt",
            Unit::Second => "Second",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "CRate" => Some(Unit::CRate),
            "Ampere" => Some(Unit::Ampere),
            "Volt" => Some(Unit::Volt),
            "Second" => Some(Unit::Second),
            _ => None,
        }
    }
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for TerminationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A step or termination value: either a number or the name of a parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueRef {
    Literal(f64),
    Parameter(String),
}

impl ValueRef {
    pub fn literal(&self) -> Option<f64> {
        match self {
            ValueRef::Literal(v) => Some(*v),
            ValueRef::Parameter(_) => None,
        }
    }
}

impl From<f64> for ValueRef {
    fn from(v: f64) -> Self {
        ValueRef::Literal(v)
    }
}

impl From<&str> for ValueRef {
    fn from(name: &str) -> Self {
        ValueRef::Parameter(name.to_string())
    }
}

/// A protocol parameter.
///
/// `unit` is `Some` only when the document used the object form
/// `{"value": n, "unit": u}`. Reserved parameters have fixed units regardless.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<Unit>,
}

impl Parameter {
    pub fn bare(value: f64) -> Self {
        Parameter { value, unit: None }
    }
}

/// Dimension a parameter is known to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterDimension {
    AmpereHour,
    Unit(Unit),
}

/// Fixed dimension of a reserved parameter name, `None` for any other name.
pub fn reserved_dimension(name: &str) -> Option<ParameterDimension> {
    match name {
        CAPACITY => Some(ParameterDimension::AmpereHour),
        LOWER_CUTOFF_VOLTAGE | UPPER_CUTOFF_VOLTAGE => Some(ParameterDimension::Unit(Unit::Volt)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub kind: TerminationKind,
    pub value: ValueRef,
    pub unit: Unit,
}

impl Termination {
    pub fn new(kind: TerminationKind, value: impl Into<ValueRef>) -> Self {
        Termination {
            kind,
            value: value.into(),
            unit: kind.unit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub kind: StepKind,
    pub value: ValueRef,
    pub unit: Unit,
    pub terminations: Vec<Termination>,
}

impl Step {
    pub fn current(value: impl Into<ValueRef>, unit: Unit, terminations: Vec<Termination>) -> Self {
        Step {
            kind: StepKind::ElectricCurrent,
            value: value.into(),
            unit,
            terminations,
        }
    }

    pub fn voltage(value: impl Into<ValueRef>, terminations: Vec<Termination>) -> Self {
        Step {
            kind: StepKind::Voltage,
            value: value.into(),
            unit: Unit::Volt,
            terminations,
        }
    }

    pub fn rest(seconds: f64) -> Self {
        Step {
            kind: StepKind::Rest,
            value: ValueRef::Literal(seconds),
            unit: Unit::Second,
            terminations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionBlock {
    pub name: Option<String>,
    pub repeat: u32,
    pub sequence: Vec<Step>,
}

impl InstructionBlock {
    pub fn new(sequence: Vec<Step>) -> Self {
        InstructionBlock {
            name: None,
            repeat: 1,
            sequence,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub name: String,
    pub subject_of: Option<String>,
    pub id: Option<String>,
    pub citation: Option<String>,
    pub parameters: IndexMap<String, Parameter>,
    pub instructions: Vec<InstructionBlock>,
    /// Unrecognised top-level keys, kept verbatim in document order.
    pub extra: IndexMap<String, serde_json::Value>,
}

impl Protocol {
    pub fn new(name: impl Into<String>) -> Self {
        Protocol {
            name: name.into(),
            subject_of: None,
            id: None,
            citation: None,
            parameters: IndexMap::new(),
            instructions: Vec::new(),
            extra: IndexMap::new(),
        }
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).map(|p| p.value)
    }

    pub fn capacity_ah(&self) -> Option<f64> {
        self.parameter(CAPACITY)
    }

    /// Looks up a block by its name.
    pub fn block(&self, name: &str) -> Option<(usize, &InstructionBlock)> {
        self.instructions
            .iter()
            .enumerate()
            .find(|(_, b)| b.name.as_deref() == Some(name))
    }
}
