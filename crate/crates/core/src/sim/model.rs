use serde::{Deserialize, Serialize};

use super::SimError;

/// Zeroth-order equivalent circuit: an OCV source in series with `r0_ohm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellModel {
    pub capacity_ah: f64,
    /// `(soc, volts)` breakpoints; SOC strictly increasing, volts non-decreasing.
    pub ocv_table: Vec<(f64, f64)>,
    pub r0_ohm: f64,
    /// Fractional capacity lost per completed block iteration.
    pub fade_per_cycle: f64,
}

/// Linear OCV from `v_min` at SOC 0 to `v_max` at SOC 1, no fade.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn build_reference_model(capacity_ah: f64, v_min: f64, v_max: f64, r0_ohm: f64) -> Result<CellModel, SimError> {
    if !(v_min < v_max) {
        return Err(SimError::InvalidModel(format!("v_min {v_min} must be below v_max {v_max}")));
    }
    CellModel::new(capacity_ah, vec![(0.0, v_min), (1.0, v_max)], r0_ohm, 0.0)
}

impl CellModel {
    pub fn new(
        capacity_ah: f64,
        ocv_table: Vec<(f64, f64)>,
        r0_ohm: f64,
        fade_per_cycle: f64,
    ) -> Result<Self, SimError> {
        let m = CellModel {
            capacity_ah,
            ocv_table,
            r0_ohm,
            fade_per_cycle,
        };
        m.check()?;
        Ok(m)
    }

    pub fn with_fade(mut self, fade_per_cycle: f64) -> Result<Self, SimError> {
        self.fade_per_cycle = fade_per_cycle;
        self.check()?;
        Ok(self)
    }

    pub fn check(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::InvalidModel(msg.to_string()));
        if !(self.capacity_ah > 0.0 && self.capacity_ah.is_finite()) {
            return bad("capacity must be positive");
        }
        if !(self.r0_ohm >= 0.0 && self.r0_ohm.is_finite()) {
            return bad("series resistance must be non-negative");
        }
        if !(self.fade_per_cycle >= 0.0 && self.fade_per_cycle.is_finite()) {
            return bad("fade per cycle must be non-negative");
        }
        if self.ocv_table.len() < 2 {
            return bad("OCV table needs at least two breakpoints");
        }
        if self.ocv_table.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
            return bad("OCV table must be finite");
        }
        let (first, last) = (self.ocv_table[0].0, self.ocv_table[self.ocv_table.len() - 1].0);
        if first != 0.0 || last != 1.0 {
            return bad("OCV table must span SOC 0 to 1");
        }
        for w in self.ocv_table.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("OCV table SOC must be strictly increasing");
            }
            if w[1].1 < w[0].1 {
                return bad("OCV must be non-decreasing in SOC");
            }
        }
        Ok(())
    }

    /// Open-circuit voltage; constant beyond the table ends.
    pub fn ocv(&self, soc: f64) -> f64 {
        let t = &self.ocv_table;
        if soc <= t[0].0 {
            return t[0].1;
        }
        if soc >= t[t.len() - 1].0 {
            return t[t.len() - 1].1;
        }
        let j = t.partition_point(|(s, _)| *s <= soc) - 1;
        let (s0, v0) = t[j];
        let (s1, v1) = t[j + 1];
        v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
    }

    /// Capacity after `k` completed block iterations, clamped at zero.
    pub fn capacity_at(&self, k: u64) -> f64 {
        (self.capacity_ah * (1.0 - self.fade_per_cycle * k as f64)).max(0.0)
    }

    /// Steepest OCV slope in volts per unit SOC.
    pub fn max_slope(&self) -> f64 {
        self.ocv_table
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .fold(0.0, f64::max)
    }

    /// Solves `s = s0 + a + b·(v_set − OCV(s))` for `s`, with `b ≥ 0`.
    ///
    /// The left side minus the right is strictly increasing in `s` and linear
    /// between breakpoints, so the root is found exactly segment by segment.
    pub(crate) fn solve_hold(&self, s0: f64, a: f64, b: f64, v_set: f64) -> f64 {
        let f = |s: f64| s - s0 - a - b * (v_set - self.ocv(s));
        let t = &self.ocv_table;
        let (lo, hi) = (t[0].0, t[t.len() - 1].0);
        if f(lo) >= 0.0 {
            // OCV is flat below the table.
            return s0 + a + b * (v_set - t[0].1);
        }
        if f(hi) <= 0.0 {
            return s0 + a + b * (v_set - t[t.len() - 1].1);
        }
        for w in t.windows(2) {
            let (fa, fb) = (f(w[0].0), f(w[1].0));
            if fa < 0.0 && fb >= 0.0 {
                return w[0].0 - fa * (w[1].0 - w[0].0) / (fb - fa);
            }
        }
        unreachable!("f changes sign on the table")
    }
}
