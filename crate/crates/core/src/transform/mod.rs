//! Turning a parsed protocol into something executable or exportable.

mod experiment;
mod jsonld;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::{Protocol, Step, StepKind, Termination, TerminationKind, Unit, ValueRef};

pub use experiment::{export_experiment_text, format_magnitude, step_text};
pub use jsonld::{emit_protocol_jsonld, JsonLdError};

/// A magnitude paired with its unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub magnitude: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(magnitude: f64, unit: Unit) -> Self {
        Quantity { magnitude, unit }
    }

    /// Current in amperes. 1C is the rated capacity in Ah, read as amperes.
    /// Returns `None` for quantities that are not currents.
    pub fn to_amperes(self, capacity_ah: f64) -> Option<f64> {
        match self.unit {
            Unit::Ampere => Some(self.magnitude),
            Unit::CRate => Some(self.magnitude * capacity_ah),
            Unit::Volt | Unit::Second => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolveError {
    #[error("{path}: CRate current given but the protocol has no Capacity parameter")]
    MissingCapacity { path: String },
    #[error("{path}: current resolves to 0 A")]
    ZeroCurrent { path: String },
    #[error("{path}: current resolves to a non-finite value")]
    NonFiniteCurrent { path: String },
    #[error("{path}: parameter {name:?} is not defined")]
    UnresolvedParameter { path: String, name: String },
    #[error("{path}: {found} is not valid here")]
    UnitMismatch { path: String, found: Unit },
}

/// Terminations with every reference resolved. Values are volts, amperes or seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value")]
pub enum ResolvedTermination {
    Voltage(f64),
    ElectricCurrent(f64),
    Time(f64),
}

impl ResolvedTermination {
    pub fn kind(&self) -> TerminationKind {
        match self {
            ResolvedTermination::Voltage(_) => TerminationKind::Voltage,
            ResolvedTermination::ElectricCurrent(_) => TerminationKind::ElectricCurrent,
            ResolvedTermination::Time(_) => TerminationKind::Time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum ResolvedStep {
    ElectricCurrent {
        current_a: f64,
        terminations: Vec<ResolvedTermination>,
    },
    Voltage {
        voltage_v: f64,
        terminations: Vec<ResolvedTermination>,
    },
    Rest {
        duration_s: f64,
    },
}

impl ResolvedStep {
    pub fn kind(&self) -> StepKind {
        match self {
            ResolvedStep::ElectricCurrent { .. } => StepKind::ElectricCurrent,
            ResolvedStep::Voltage { .. } => StepKind::Voltage,
            ResolvedStep::Rest { .. } => StepKind::Rest,
        }
    }

    pub fn terminations(&self) -> &[ResolvedTermination] {
        match self {
            ResolvedStep::ElectricCurrent { terminations, .. } | ResolvedStep::Voltage { terminations, .. } => {
                terminations
            }
            ResolvedStep::Rest { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedBlock {
    pub name: Option<String>,
    pub repeat: u32,
    pub sequence: Vec<ResolvedStep>,
}

/// Executable form of a protocol: literals only, currents in amperes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedProtocol {
    pub name: String,
    pub subject_of: Option<String>,
    pub id: Option<String>,
    pub citation: Option<String>,
    pub capacity_ah: Option<f64>,
    pub instructions: Vec<ResolvedBlock>,
}

impl ResolvedProtocol {
    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.instructions.iter().position(|b| b.name.as_deref() == Some(name))
    }

    /// Number of steps after unrolling repeats.
    pub fn flat_len(&self) -> usize {
        self.instructions
            .iter()
            .map(|b| b.repeat as usize * b.sequence.len())
            .sum()
    }
}

/// Replaces parameter references by their values and converts C-rates to amperes.
pub fn resolve_quantities(p: &Protocol) -> Result<ResolvedProtocol, ResolveError> {
    let capacity = p.capacity_ah();
    let mut instructions = Vec::with_capacity(p.instructions.len());
    for (i, block) in p.instructions.iter().enumerate() {
        let sequence = block
            .sequence
            .iter()
            .enumerate()
            .map(|(j, step)| resolve_step(p, capacity, step, &format!("instructions[{i}].sequence[{j}]")))
            .collect::<Result<Vec<_>, _>>()?;
        instructions.push(ResolvedBlock {
            name: block.name.clone(),
            repeat: block.repeat,
            sequence,
        });
    }
    Ok(ResolvedProtocol {
        name: p.name.clone(),
        subject_of: p.subject_of.clone(),
        id: p.id.clone(),
        citation: p.citation.clone(),
        capacity_ah: capacity,
        instructions,
    })
}

fn lookup(p: &Protocol, v: &ValueRef, path: &str) -> Result<f64, ResolveError> {
    match v {
        ValueRef::Literal(x) => Ok(*x),
        ValueRef::Parameter(name) => p.parameter(name).ok_or_else(|| ResolveError::UnresolvedParameter {
            path: path.to_string(),
            name: name.clone(),
        }),
    }
}

fn resolve_step(p: &Protocol, capacity: Option<f64>, step: &Step, path: &str) -> Result<ResolvedStep, ResolveError> {
    let value = lookup(p, &step.value, path)?;
    let terminations = step
        .terminations
        .iter()
        .enumerate()
        .map(|(k, t)| resolve_termination(p, t, &format!("{path}.termination[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mismatch = || ResolveError::UnitMismatch {
        path: path.to_string(),
        found: step.unit,
    };
    match step.kind {
        StepKind::ElectricCurrent => {
            let current_a = match step.unit {
                Unit::Ampere => value,
                Unit::CRate => {
                    let cap = capacity.ok_or_else(|| ResolveError::MissingCapacity { path: path.to_string() })?;
                    Quantity::new(value, Unit::CRate)
                        .to_amperes(cap)
                        .expect("CRate is a current")
                }
                _ => return Err(mismatch()),
            };
            if current_a == 0.0 {
                return Err(ResolveError::ZeroCurrent { path: path.to_string() });
            }
            if !current_a.is_finite() {
                return Err(ResolveError::NonFiniteCurrent { path: path.to_string() });
            }
            Ok(ResolvedStep::ElectricCurrent {
                current_a,
                terminations,
            })
        }
        StepKind::Voltage if step.unit == Unit::Volt => Ok(ResolvedStep::Voltage {
            voltage_v: value,
            terminations,
        }),
        StepKind::Rest if step.unit == Unit::Second => Ok(ResolvedStep::Rest { duration_s: value }),
        _ => Err(mismatch()),
    }
}

fn resolve_termination(p: &Protocol, t: &Termination, path: &str) -> Result<ResolvedTermination, ResolveError> {
    if t.unit != t.kind.unit() {
        return Err(ResolveError::UnitMismatch {
            path: path.to_string(),
            found: t.unit,
        });
    }
    let v = lookup(p, &t.value, path)?;
    Ok(match t.kind {
        TerminationKind::Voltage => ResolvedTermination::Voltage(v),
        TerminationKind::ElectricCurrent => ResolvedTermination::ElectricCurrent(v),
        TerminationKind::Time => ResolvedTermination::Time(v),
    })
}

/// Position of one executed step within the unrolled protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StepId {
    pub block: usize,
    pub iteration: u32,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatStep {
    pub id: StepId,
    pub step: ResolvedStep,
}

/// Expands block repeats. Output is ordered by (block, iteration, step).
pub fn unroll(rp: &ResolvedProtocol) -> Vec<FlatStep> {
    let mut out = Vec::with_capacity(rp.flat_len());
    for (block, b) in rp.instructions.iter().enumerate() {
        for iteration in 0..b.repeat {
            for (step, s) in b.sequence.iter().enumerate() {
                out.push(FlatStep {
                    id: StepId { block, iteration, step },
                    step: s.clone(),
                });
            }
        }
    }
    out
}
