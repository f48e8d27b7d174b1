//! Deterministic protocol execution against a reference cell model.
//!
//! Every trace row closes an interval that started at the previous row.
//! Charge moved over that interval follows one quadrature rule,
//! [`interval_charge_ah`], used both by the integrator and by every
//! summary, so SOC bookkeeping and reported charge agree exactly:
//!
//! * both rows belong to the same executed step: trapezoid rule;
//! * the interval opens a new step: the step's own current at the right row
//!   (exact for constant current, implicit Euler for a voltage hold).
//!
//! The first row sits at t = 0 and already carries the first step's current.

mod analysis;
mod engine;
mod export;
mod model;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transform::StepId;

pub use analysis::{capacity_check, cycle_summary, CapacityError};
pub use engine::simulate;
pub use export::{events_to_csv, trace_to_csv, EVENTS_CSV_HEADER, TRACE_CSV_HEADER};
pub use model::{build_reference_model, CellModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid cell model: {0}")]
    InvalidModel(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("voltage hold at block {block}, iteration {iteration}, step {step} needs a non-zero series resistance", block = .0.block, iteration = .0.iteration, step = .0.step)]
    SingularHold(StepId),
    #[error("cell capacity has faded to zero before block {block}, iteration {iteration}", block = .0.block, iteration = .0.iteration)]
    CapacityExhausted(StepId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt_s: f64,
    pub event_tol_s: f64,
    pub max_step_duration_s: f64,
    pub initial_soc: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt_s: 1.0,
            event_tol_s: 1e-3,
            max_step_duration_s: 86_400.0,
            initial_soc: 0.0,
        }
    }
}

impl SimConfig {
    // Negated comparisons so that NaN is rejected too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidConfig(msg.to_string()));
        if !(self.dt_s > 0.0 && self.dt_s.is_finite()) {
            return bad("dt_s must be positive");
        }
        if !(self.event_tol_s > 0.0 && self.event_tol_s < self.dt_s) {
            return bad("event_tol_s must be positive and below dt_s");
        }
        if !(self.max_step_duration_s > 0.0) {
            return bad("max_step_duration_s must be positive");
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return bad("initial_soc must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub current_a: f64,
    pub voltage_v: f64,
    pub soc: f64,
    pub block: usize,
    pub iteration: u32,
    pub step: usize,
}

impl TraceRow {
    pub fn step_id(&self) -> StepId {
        StepId {
            block: self.block,
            iteration: self.iteration,
            step: self.step,
        }
    }
}

/// Why a step ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Voltage,
    ElectricCurrent,
    Time,
    /// A rest step ran for its full duration.
    Duration,
    #[serde(rename = "SOC_BOUND")]
    SocBound,
    #[serde(rename = "STEP_TIMEOUT")]
    StepTimeout,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Voltage => "Voltage",
            EventKind::ElectricCurrent => "ElectricCurrent",
            EventKind::Time => "Time",
            EventKind::Duration => "Duration",
            EventKind::SocBound => "SOC_BOUND",
            EventKind::StepTimeout => "STEP_TIMEOUT",
        }
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t_s: f64,
    pub id: StepId,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub block: usize,
    pub iteration: u32,
    pub charge_ah_in: f64,
    pub discharge_ah_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub rows: Vec<TraceRow>,
    /// One event per executed step, in execution order.
    pub events: Vec<SimEvent>,
    pub per_cycle: Vec<CycleSummary>,
    /// Block names of the executed protocol, by block index.
    pub block_names: Vec<Option<String>>,
}

impl SimTrace {
    /// Rows produced by one executed step, in time order.
    pub fn step_rows(&self, id: StepId) -> &[TraceRow] {
        let start = self.rows.partition_point(|r| r.step_id() < id);
        let end = self.rows.partition_point(|r| r.step_id() <= id);
        &self.rows[start..end]
    }

    pub fn event(&self, id: StepId) -> Option<&SimEvent> {
        self.events.iter().find(|e| e.id == id)
    }
}

/// Ampere-hours moved between two consecutive rows (positive = charge).
pub fn interval_charge_ah(prev: &TraceRow, row: &TraceRow) -> f64 {
    interval_ah_with(prev, row, |i| i)
}

pub(crate) fn interval_ah_with(prev: &TraceRow, row: &TraceRow, f: impl Fn(f64) -> f64) -> f64 {
    let dt = row.t_s - prev.t_s;
    if prev.step_id() == row.step_id() {
        0.5 * (f(prev.current_a) + f(row.current_a)) * dt / 3600.0
    } else {
        f(row.current_a) * dt / 3600.0
    }
}
