use super::{interval_charge_ah, CellModel, EventKind, SimConfig, SimError, SimEvent, SimTrace, TraceRow};
use crate::transform::{unroll, ResolvedProtocol, ResolvedStep, ResolvedTermination, StepId};

/// How the cell is driven during a step.
#[derive(Debug, Clone, Copy)]
enum Control {
    Current(f64),
    Hold(f64),
    Rest,
}

/// Cell state at a row: SOC and the current flowing at that instant.
#[derive(Debug, Clone, Copy)]
struct State {
    soc: f64,
    current: f64,
}

struct StepCtx<'a> {
    model: &'a CellModel,
    control: Control,
    terminations: &'a [ResolvedTermination],
    /// Coulombs per unit SOC at the current fade level.
    coulombs: f64,
}

impl StepCtx<'_> {
    fn current_at(&self, soc: f64) -> f64 {
        match self.control {
            Control::Current(i) => i,
            Control::Hold(v) => (v - self.model.ocv(soc)) / self.model.r0_ohm,
            Control::Rest => 0.0,
        }
    }

    fn voltage(&self, s: State) -> f64 {
        self.model.ocv(s.soc) + s.current * self.model.r0_ohm
    }

    /// State after `h` seconds from `left`. `same_step` selects the
    /// trapezoid rule; otherwise the right-endpoint rule applies.
    fn advance(&self, left: State, h: f64, same_step: bool) -> State {
        match self.control {
            Control::Current(i) => State {
                soc: left.soc + i * h / self.coulombs,
                current: i,
            },
            Control::Rest => State {
                soc: left.soc,
                current: 0.0,
            },
            Control::Hold(v) => {
                let r0 = self.model.r0_ohm;
                let (a, b) = if same_step {
                    let c = 0.5 * h / self.coulombs;
                    (c * left.current, c / r0)
                } else {
                    (0.0, h / self.coulombs / r0)
                };
                let soc = self.model.solve_hold(left.soc, a, b, v);
                State {
                    soc,
                    current: self.current_at(soc),
                }
            }
        }
    }

    /// First voltage or current termination satisfied in state `s`.
    fn fired(&self, s: State) -> Option<EventKind> {
        for t in self.terminations {
            match (*t, self.control) {
                (ResolvedTermination::Voltage(th), Control::Current(i)) => {
                    let v = self.voltage(s);
                    if (i > 0.0 && v >= th) || (i < 0.0 && v <= th) {
                        return Some(EventKind::Voltage);
                    }
                }
                (ResolvedTermination::ElectricCurrent(th), Control::Current(_) | Control::Hold(_))
                    if s.current.abs() <= th.abs() =>
                {
                    return Some(EventKind::ElectricCurrent);
                }
                // The held voltage is the controlled quantity; time is handled by clipping.
                _ => {}
            }
        }
        None
    }

    /// Step length after which the discrete update lands exactly on an SOC bound.
    fn bound_step(&self, left: State, same_step: bool) -> Option<(f64, f64)> {
        if matches!(self.control, Control::Rest) {
            return None;
        }
        let mut best: Option<(f64, f64)> = None;
        for bound in [0.0, 1.0] {
            let ib = self.current_at(bound);
            let flow = if same_step && !matches!(self.control, Control::Current(_)) {
                0.5 * (left.current + ib)
            } else {
                ib
            };
            let h = ((bound - left.soc) * self.coulombs / flow).max(0.0);
            let outward = if bound == 1.0 { flow > 0.0 } else { flow < 0.0 };
            if outward && h.is_finite() && best.is_none_or(|(b, _)| h < b) {
                best = Some((h, bound));
            }
        }
        best
    }
}

struct Runner<'a> {
    cfg: &'a SimConfig,
    rows: Vec<TraceRow>,
    events: Vec<SimEvent>,
    t: f64,
    state: State,
}

impl Runner<'_> {
    fn push(&mut self, t: f64, s: State, v: f64, id: StepId) {
        debug_assert!(self.rows.last().is_none_or(|r| t > r.t_s));
        self.rows.push(TraceRow {
            t_s: t,
            current_a: s.current,
            voltage_v: v,
            soc: s.soc,
            block: id.block,
            iteration: id.iteration,
            step: id.step,
        });
        self.t = t;
        self.state = s;
    }

    fn end(&mut self, id: StepId, kind: EventKind) {
        self.events.push(SimEvent { t_s: self.t, id, kind });
    }

    fn run_step(&mut self, id: StepId, ctx: &StepCtx) {
        let cfg = self.cfg;
        let t0 = self.t;
        let start = State {
            soc: self.state.soc,
            current: ctx.current_at(self.state.soc),
        };
        if let Some(kind) = ctx.fired(start) {
            self.end(id, kind);
            return;
        }

        // Elapsed-time limits, in priority order for ties.
        let limits: Vec<f64> = ctx
            .terminations
            .iter()
            .filter_map(|t| match t {
                ResolvedTermination::Time(d) => Some(*d),
                _ => None,
            })
            .collect();
        let nominal = match ctx.control {
            Control::Hold(_) => {
                let slope = ctx.model.max_slope();
                if slope > 0.0 {
                    cfg.dt_s.min(0.25 * ctx.coulombs * ctx.model.r0_ohm / slope)
                } else {
                    cfg.dt_s
                }
            }
            _ => cfg.dt_s,
        };

        let mut elapsed = 0.0;
        loop {
            let eps = 1e-12 * (1.0 + self.t.abs());
            let same_step = self.rows.last().is_some_and(|r| r.step_id() == id);
            let left = if same_step { self.state } else { start };

            let mut h = nominal;
            let mut clip = None;
            let mut clip_at = f64::INFINITY;
            let mut offer = |rem: f64, at: f64, kind: EventKind, h: &mut f64| {
                if rem < *h || (rem == *h && clip.is_none()) {
                    *h = rem;
                    clip = Some(kind);
                    clip_at = at;
                }
            };
            for &limit in &limits {
                offer(limit - elapsed, limit, EventKind::Time, &mut h);
            }
            offer(
                cfg.max_step_duration_s - elapsed,
                cfg.max_step_duration_s,
                EventKind::StepTimeout,
                &mut h,
            );
            let mut bound = None;
            if let Some((hb, b)) = ctx.bound_step(left, same_step) {
                offer(hb, elapsed + hb, EventKind::SocBound, &mut h);
                if clip == Some(EventKind::SocBound) {
                    bound = Some(b);
                }
            }
            if h <= eps {
                if let Some(kind) = clip {
                    self.end(id, kind);
                    return;
                }
            }

            let mut prop = ctx.advance(left, h, same_step);
            if let Some(b) = bound {
                prop = State {
                    soc: b,
                    current: ctx.current_at(b),
                };
            }

            if ctx.fired(prop).is_some() {
                let (mut lo, mut hi) = (0.0_f64, h);
                while hi - lo > cfg.event_tol_s || (lo == 0.0 && hi > eps) {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if ctx.fired(ctx.advance(left, mid, same_step)).is_some() {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let mut base = left;
                let mut base_same = same_step;
                if lo > 0.0 {
                    let s = ctx.advance(left, lo, same_step);
                    self.push(t0 + elapsed + lo, s, ctx.voltage(s), id);
                    base = s;
                    base_same = true;
                }
                let s = if hi == h && lo == 0.0 {
                    prop
                } else {
                    ctx.advance(base, hi - lo, base_same)
                };
                self.push(t0 + elapsed + hi, s, ctx.voltage(s), id);
                elapsed += hi;
                if let Some(kind) = ctx.fired(s) {
                    self.end(id, kind);
                    return;
                }
                continue;
            }

            elapsed = if clip.is_some() { clip_at } else { elapsed + h };
            self.push(t0 + elapsed, prop, ctx.voltage(prop), id);
            if let Some(kind) = clip {
                self.end(id, kind);
                return;
            }
        }
    }
}

/// Executes every unrolled step of `rp` in order. Fade advances by one
/// cycle after each completed block iteration.
pub fn simulate(rp: &ResolvedProtocol, m: &CellModel, cfg: &SimConfig) -> Result<SimTrace, SimError> {
    m.check()?;
    cfg.check()?;
    let flat = unroll(rp);
    let mut first_cycle = Vec::with_capacity(rp.instructions.len());
    let mut acc = 0u64;
    for b in &rp.instructions {
        first_cycle.push(acc);
        acc += u64::from(b.repeat);
    }

    let mut run = Runner {
        cfg,
        rows: Vec::new(),
        events: Vec::new(),
        t: 0.0,
        state: State {
            soc: cfg.initial_soc,
            current: 0.0,
        },
    };

    for fs in &flat {
        let id = fs.id;
        let q = m.capacity_at(first_cycle[id.block] + u64::from(id.iteration));
        if q <= 0.0 {
            return Err(SimError::CapacityExhausted(id));
        }
        let (control, terminations, rest_s) = match &fs.step {
            ResolvedStep::ElectricCurrent {
                current_a,
                terminations,
            } => (Control::Current(*current_a), &terminations[..], None),
            ResolvedStep::Voltage {
                voltage_v,
                terminations,
            } => {
                if m.r0_ohm == 0.0 {
                    return Err(SimError::SingularHold(id));
                }
                (Control::Hold(*voltage_v), &terminations[..], None)
            }
            ResolvedStep::Rest { duration_s } => (Control::Rest, &[][..], Some(*duration_s)),
        };
        let rest_terms;
        let terminations = match rest_s {
            Some(d) => {
                rest_terms = [ResolvedTermination::Time(d)];
                &rest_terms[..]
            }
            None => terminations,
        };
        let ctx = StepCtx {
            model: m,
            control,
            terminations,
            coulombs: 3600.0 * q,
        };

        if run.rows.is_empty() {
            let s = State {
                soc: run.state.soc,
                current: ctx.current_at(run.state.soc),
            };
            run.push(0.0, s, ctx.voltage(s), id);
        }
        let before = run.events.len();
        run.run_step(id, &ctx);
        if rest_s.is_some() {
            if let Some(e) = run.events.get_mut(before) {
                if e.kind == EventKind::Time {
                    e.kind = EventKind::Duration;
                }
            }
        }
    }

    let block_names = rp.instructions.iter().map(|b| b.name.clone()).collect();
    let mut trace = SimTrace {
        rows: run.rows,
        events: run.events,
        per_cycle: Vec::new(),
        block_names,
    };
    trace.per_cycle = super::cycle_summary(&trace);
    debug_assert!(trace
        .rows
        .windows(2)
        .all(|w| interval_charge_ah(&w[0], &w[1]).is_finite()));
    Ok(trace)
}
