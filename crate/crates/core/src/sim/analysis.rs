use thiserror::Error;

use super::{interval_ah_with, CycleSummary, SimTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CapacityError {
    #[error("no block named {0:?} in the simulated protocol")]
    UnknownBlock(String),
    #[error("block {0:?} contains no discharge")]
    NoDischarge(String),
    #[error("rated capacity must be positive, got {0}")]
    InvalidRatedCapacity(f64),
}

/// Charge in and out per executed block iteration, in execution order.
///
/// Each interval between consecutive rows is attributed to the iteration of
/// its closing row and integrated with the trace quadrature rule.
pub fn cycle_summary(trace: &SimTrace) -> Vec<CycleSummary> {
    let mut out: Vec<CycleSummary> = Vec::new();
    let mut prev = None;
    for row in &trace.rows {
        let same = out
            .last()
            .is_some_and(|c| c.block == row.block && c.iteration == row.iteration);
        if !same {
            out.push(CycleSummary {
                block: row.block,
                iteration: row.iteration,
                charge_ah_in: 0.0,
                discharge_ah_out: 0.0,
            });
        }
        if let Some(p) = prev {
            let c = out.last_mut().expect("pushed above");
            c.charge_ah_in += interval_ah_with(p, row, |i| i.max(0.0));
            c.discharge_ah_out += interval_ah_with(p, row, |i| (-i).max(0.0));
        }
        prev = Some(row);
    }
    out
}

/// Discharge delivered in the last iteration of the named block, as a
/// fraction of `rated_capacity_ah`.
// Negated comparisons so that NaN is rejected too.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn capacity_check(
    trace: &SimTrace,
    reference_block_name: &str,
    rated_capacity_ah: f64,
) -> Result<f64, CapacityError> {
    if !(rated_capacity_ah > 0.0) {
        return Err(CapacityError::InvalidRatedCapacity(rated_capacity_ah));
    }
    let block = trace
        .block_names
        .iter()
        .position(|n| n.as_deref() == Some(reference_block_name))
        .ok_or_else(|| CapacityError::UnknownBlock(reference_block_name.to_string()))?;
    let no_discharge = || CapacityError::NoDischarge(reference_block_name.to_string());
    let iteration = trace
        .rows
        .iter()
        .filter(|r| r.block == block)
        .map(|r| r.iteration)
        .max()
        .ok_or_else(no_discharge)?;
    let in_cycle = |r: &super::TraceRow| r.block == block && r.iteration == iteration;
    if !trace.rows.iter().any(|r| in_cycle(r) && r.current_a < 0.0) {
        return Err(no_discharge());
    }
    let discharge: f64 = trace
        .rows
        .windows(2)
        .filter(|w| in_cycle(&w[1]))
        .map(|w| interval_ah_with(&w[0], &w[1], |i| (-i).max(0.0)))
        .sum();
    Ok(discharge / rated_capacity_ah)
}
