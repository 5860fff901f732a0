//! Explicit time integration of the graph equation `du/dt = v F^{-alpha}`.
//!
//! Each step is an explicit midpoint (two-stage Runge-Kutta) step with the
//! diffusive limit
//!
//! ```text
//! dt = safety * min_nodes dl^2 / (C alpha F^{-alpha-1} (dF/dl1 + dF/dl2))
//! dl = s(u) min(dtheta, sin(theta) dphi) / v
//! ```
//!
//! further capped so that records land exactly on the `record_every` grid
//! and the run ends exactly at `t_end`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::diagnostics::{diagnostics_from_field, DiagnosticsContext, DiagnosticsRecord};
use crate::error::{FlowError, Result};
use crate::geometry::{compute_curvature, row_flow, RowScratch, SphericalGrid, SurfaceState};
use crate::spaceform::SpaceForm;
use crate::speed::{FlowExponent, SpeedFunction};

pub const DEFAULT_CFL_SAFETY: f64 = 0.2;
pub const DEFAULT_CFL_CONSTANT: f64 = 4.0;
/// S^3 runs stop once `max u >= pi/2 - EQUATOR_MARGIN`.
pub const EQUATOR_MARGIN: f64 = 1e-3;

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Termination {
    TEnd,
    MaxSteps,
    Blowup,
    ConeViolation,
    EquatorProximity,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TEnd => "t_end",
            Termination::MaxSteps => "max_steps",
            Termination::Blowup => "blowup",
            Termination::ConeViolation => "cone_violation",
            Termination::EquatorProximity => "equator_proximity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Termination::TEnd,
            Termination::MaxSteps,
            Termination::Blowup,
            Termination::ConeViolation,
            Termination::EquatorProximity,
        ]
        .into_iter()
        .find(|t| t.as_str() == s)
    }

    /// Normal endings; blow-up and loss of convexity are abnormal.
    pub fn is_normal(self) -> bool {
        !matches!(self, Termination::Blowup | Termination::ConeViolation)
    }

    fn from_error(err: &FlowError) -> Self {
        match err {
            FlowError::ConeViolation { .. } => Termination::ConeViolation,
            _ => Termination::Blowup,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of one flow run.
#[derive(Clone, Debug)]
pub struct FlowConfig {
    pub space_form: SpaceForm,
    pub speed: SpeedFunction,
    pub alpha: FlowExponent,
    pub initial: SurfaceState,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub cfl_constant: f64,
    pub max_steps: usize,
    pub record_every: f64,
    /// Keep a copy of the surface at every record time.
    pub keep_snapshots: bool,
    /// Threads sharing each right-hand-side evaluation; the result does not
    /// depend on it.
    pub workers: usize,
}

impl FlowConfig {
    pub fn new(
        space_form: SpaceForm,
        speed: SpeedFunction,
        alpha: FlowExponent,
        initial: SurfaceState,
        t_end: f64,
    ) -> Self {
        FlowConfig {
            space_form,
            speed,
            alpha,
            initial,
            t_end,
            cfl_safety: DEFAULT_CFL_SAFETY,
            cfl_constant: DEFAULT_CFL_CONSTANT,
            max_steps: usize::MAX,
            record_every: t_end / 100.0,
            keep_snapshots: false,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FlowError::InvalidParameter(msg));
        if self.space_form == SpaceForm::Spherical && self.alpha.get() != 1.0 {
            return bad("the S^3 flow requires alpha = 1".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive (got {})", self.t_end));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return bad(format!(
                "cfl_safety must lie in (0, 1] (got {})",
                self.cfl_safety
            ));
        }
        if !(self.cfl_constant > 0.0) {
            return bad("cfl_constant must be positive".into());
        }
        if !(self.record_every > 0.0) {
            return bad("record_every must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }
}

/// Result of a run. `records` always starts with the initial surface and
/// ends with `final_state`.
#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub snapshots: Vec<SurfaceState>,
    pub records: Vec<DiagnosticsRecord>,
    pub termination: Termination,
    /// The error behind an abnormal termination.
    pub error: Option<FlowError>,
    pub steps: usize,
    pub final_state: SurfaceState,
}

/// Evaluates the right-hand side together with the unscaled stable step.
struct Evaluator {
    space_form: SpaceForm,
    speed: SpeedFunction,
    alpha: FlowExponent,
    cfl_constant: f64,
    scratch: Vec<RowScratch>,
}

impl Evaluator {
    fn new(
        space_form: SpaceForm,
        speed: SpeedFunction,
        alpha: FlowExponent,
        cfl_constant: f64,
        workers: usize,
    ) -> Self {
        Evaluator {
            space_form,
            speed,
            alpha,
            cfl_constant,
            scratch: vec![RowScratch::default(); workers.max(1)],
        }
    }

    /// Fills `out` with `v F^{-alpha}` and returns the stable step at
    /// `cfl_safety = 1`. Rows are split evenly across the workers; each
    /// row is computed identically whichever worker owns it.
    fn eval(&mut self, grid: &SphericalGrid, u: &[f64], out: &mut [f64]) -> Result<f64> {
        let (sf, speed, alpha) = (self.space_form, self.speed, self.alpha);
        let n_phi = grid.n_phi();
        let rows_per_worker = grid.n_theta().div_ceil(self.scratch.len());
        let band = |first_row: usize, out: &mut [f64], scratch: &mut RowScratch| -> Result<f64> {
            let mut worst = f64::INFINITY;
            for (k, rates) in out.chunks_mut(n_phi).enumerate() {
                let row = row_flow(sf, &speed, alpha, grid, u, first_row + k, rates, scratch)?;
                worst = worst.min(row);
            }
            Ok(worst)
        };
        let worst = if self.scratch.len() == 1 {
            band(0, out, &mut self.scratch[0])?
        } else {
            let results: Vec<Result<f64>> = std::thread::scope(|scope| {
                let handles: Vec<_> = out
                    .chunks_mut(rows_per_worker * n_phi)
                    .zip(self.scratch.iter_mut())
                    .enumerate()
                    .map(|(w, (chunk, scratch))| {
                        let band = &band;
                        scope.spawn(move || band(w * rows_per_worker, chunk, scratch))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("flow worker panicked"))
                    .collect()
            });
            let mut worst = f64::INFINITY;
            for r in results {
                worst = worst.min(r?);
            }
            worst
        };
        let dt = worst / self.cfl_constant;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FlowError::NumericalBlowup(format!("stable step {dt}")));
        }
        Ok(dt)
    }
}

/// `du/dt` at every node.
pub fn rhs(
    sf: SpaceForm,
    speed: &SpeedFunction,
    alpha: FlowExponent,
    state: &SurfaceState,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; state.u().len()];
    Evaluator::new(sf, *speed, alpha, DEFAULT_CFL_CONSTANT, 1).eval(
        state.grid(),
        state.u(),
        &mut out,
    )?;
    Ok(out)
}

/// Largest stable explicit step, before the record-time cap.
pub fn stable_dt(
    sf: SpaceForm,
    speed: &SpeedFunction,
    alpha: FlowExponent,
    state: &SurfaceState,
    cfl_safety: f64,
) -> Result<f64> {
    let mut out = vec![0.0; state.u().len()];
    let dt = Evaluator::new(sf, *speed, alpha, DEFAULT_CFL_CONSTANT, 1).eval(
        state.grid(),
        state.u(),
        &mut out,
    )?;
    Ok(cfl_safety * dt)
}

/// Integrates the flow until `t_end`, `max_steps`, or an abnormal event.
pub fn run(cfg: &FlowConfig) -> Result<FlowOutcome> {
    cfg.validate()?;
    let sf = cfg.space_form;
    let ctx = DiagnosticsContext::new(sf, cfg.speed, cfg.alpha, &cfg.initial);
    let grid = cfg.initial.shared_grid();
    let n = grid.len();

    let mut state = cfg.initial.clone();
    let mut outcome = FlowOutcome {
        snapshots: Vec::new(),
        records: Vec::new(),
        termination: Termination::TEnd,
        error: None,
        steps: 0,
        final_state: state.clone(),
    };

    let record = |state: &SurfaceState, outcome: &mut FlowOutcome| -> Result<()> {
        let field = compute_curvature(sf, &cfg.speed, state)?;
        outcome
            .records
            .push(diagnostics_from_field(&ctx, state, &field));
        if cfg.keep_snapshots {
            outcome.snapshots.push(state.clone());
        }
        Ok(())
    };

    if let Err(e) = record(&state, &mut outcome) {
        outcome.termination = Termination::from_error(&e);
        outcome.error = Some(e);
        return Ok(outcome);
    }

    let t0 = state.t;
    let t_end = t0 + cfg.t_end;
    let mut record_index = 1u64;
    let mut next_record = t0 + cfg.record_every;
    let mut evaluator = Evaluator::new(sf, cfg.speed, cfg.alpha, cfg.cfl_constant, cfg.workers);
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut mid = vec![0.0; n];
    let near_equator =
        |s: &SurfaceState| sf == SpaceForm::Spherical && s.max_u() >= FRAC_PI_2 - EQUATOR_MARGIN;

    let termination = loop {
        if near_equator(&state) {
            break Termination::EquatorProximity;
        }
        if state.t >= t_end {
            break Termination::TEnd;
        }
        if outcome.steps >= cfg.max_steps {
            break Termination::MaxSteps;
        }
        let step = (|| -> Result<(f64, bool, bool)> {
            let stable = cfg.cfl_safety * evaluator.eval(&grid, state.u(), &mut k1)?;
            let to_record = next_record - state.t;
            let to_end = t_end - state.t;
            let mut dt = stable;
            let mut hits_record = false;
            let mut hits_end = false;
            if to_record <= dt {
                dt = to_record;
                hits_record = true;
            }
            if to_end <= dt {
                dt = to_end;
                hits_end = true;
                hits_record = to_end >= to_record;
            }
            for k in 0..n {
                mid[k] = state.u()[k] + 0.5 * dt * k1[k];
            }
            evaluator.eval(&grid, &mid, &mut k2)?;
            Ok((dt, hits_record, hits_end))
        })();
        let (dt, hits_record, hits_end) = match step {
            Ok(x) => x,
            Err(e) => {
                let t = Termination::from_error(&e);
                outcome.error = Some(e);
                break t;
            }
        };
        let u = state.u_mut();
        for k in 0..n {
            u[k] += dt * k2[k];
        }
        if let Some(bad) = u.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            outcome.error = Some(FlowError::NumericalBlowup(format!(
                "radial value {bad} after step {}",
                outcome.steps + 1
            )));
            // restore the last valid surface
            for k in 0..n {
                u[k] -= dt * k2[k];
            }
            break Termination::Blowup;
        }
        outcome.steps += 1;
        state.t = if hits_end {
            t_end
        } else if hits_record {
            next_record
        } else {
            state.t + dt
        };
        if hits_record {
            record_index += 1;
            next_record = t0 + record_index as f64 * cfg.record_every;
            if let Err(e) = record(&state, &mut outcome) {
                let t = Termination::from_error(&e);
                outcome.error = Some(e);
                break t;
            }
        }
    };
    outcome.termination = termination;
    if outcome.records.last().map(|r| r.t) != Some(state.t) {
        // a failing final record leaves the error already stored
        if let Err(e) = record(&state, &mut outcome) {
            outcome.error.get_or_insert(e);
        }
    }
    outcome.final_state = state;
    Ok(outcome)
}
