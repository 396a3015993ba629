//! Fixed-step simulation of repeated print cycles.
//!
//! One experiment integrates the plant continuously over a configured
//! number of cycles. A cycle ends at the first step where the downstream
//! roller has advanced by the terminal angle; the registration error at
//! that instant is what the cycle-to-cycle learning consumes. Feedback
//! state, tensions and the accumulated registration error all carry across
//! cycle boundaries untouched.

use serde::{Deserialize, Serialize};

use crate::controller::{Controller, ControllerSpec};
use crate::delay::TensionHistory;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::plant::{self, PlantState};

/// Integration and experiment-length settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Fixed integration step (s).
    pub time_step: f64,
    /// Number of cycles to run.
    pub iterations: usize,
    /// Downstream roller angle that ends a cycle (rad).
    pub terminal_angle: f64,
    /// Keep one row per integration step across the whole experiment.
    pub record_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            time_step: 1.0e-3,
            iterations: 40,
            terminal_angle: std::f64::consts::TAU,
            record_trace: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, p: &SystemParams) -> Result<()> {
        if !self.time_step.is_finite() || self.time_step <= 0.0 {
            return Err(Error::InvalidParam {
                name: "time_step",
                reason: format!("must be positive and finite, got {}", self.time_step),
            });
        }
        if self.time_step > p.period_ref / 1000.0 {
            return Err(Error::InvalidParam {
                name: "time_step",
                reason: format!(
                    "must resolve the cycle: at most {} for this unit, got {}",
                    p.period_ref / 1000.0,
                    self.time_step
                ),
            });
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParam {
                name: "iterations",
                reason: "must run at least one cycle".into(),
            });
        }
        if !self.terminal_angle.is_finite() || self.terminal_angle <= 0.0 {
            return Err(Error::InvalidParam {
                name: "terminal_angle",
                reason: format!("must be positive and finite, got {}", self.terminal_angle),
            });
        }
        Ok(())
    }
}

/// Per-cycle summary, one row per completed cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Cycle number, starting at 1.
    pub iteration: usize,
    /// Accumulated registration error at the terminal instant (m).
    pub terminal_re: f64,
    /// Simulation time of the terminal instant (s).
    pub terminal_time: f64,
    /// Largest |tension deviation| over the cycle, all three spans (N).
    pub max_abs_tension: f64,
    /// Largest |speed deviation| over the cycle, both rollers (m/s).
    pub max_abs_speed: f64,
    /// Learned feed-forward amplitude applied during this cycle (N·m).
    pub xi: f64,
    /// Amplitude increment applied at the end of this cycle (N·m).
    pub learning_increment: f64,
}

/// One integration step of the state trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time: f64,
    pub tension_up: f64,
    pub tension_mid: f64,
    pub tension_down: f64,
    pub speed_up: f64,
    pub speed_down: f64,
    pub reg_error: f64,
}

impl TraceRow {
    fn from_state(s: &PlantState) -> Self {
        Self {
            time: s.time,
            tension_up: s.tension_up,
            tension_mid: s.tension_mid,
            tension_down: s.tension_down,
            speed_up: s.speed_up,
            speed_down: s.speed_down,
            reg_error: s.reg_error,
        }
    }
}

/// Result of a full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub records: Vec<IterationRecord>,
    /// Present when the configuration asked for a state trace.
    pub trace: Option<Vec<TraceRow>>,
}

/// Advances the state by one fixed step under zero-order-hold torques.
///
/// Classical fourth-order Runge–Kutta over the eight integrated quantities
/// (three tensions, two speeds, two phases, registration error). The
/// registration-error rate needs the upstream tension one transport delay
/// ago, which is read from `history` at each stage time; the caller pushes
/// the new sample after the step, so stage lookups never run ahead of the
/// stored history.
pub fn integrate_step(
    p: &SystemParams,
    s: &mut PlantState,
    history: &TensionHistory,
    torque_up: f64,
    torque_down: f64,
    dt: f64,
    disturbance_on: bool,
) -> Result<()> {
    if !torque_up.is_finite() || !torque_down.is_finite() {
        return Err(Error::NonFinite {
            context: "applied torque",
        });
    }
    let y0 = [
        s.tension_up,
        s.tension_mid,
        s.tension_down,
        s.speed_up,
        s.speed_down,
        s.phase_up,
        s.phase_down,
        s.reg_error,
    ];
    if y0.iter().any(|v| !v.is_finite()) || !s.time.is_finite() {
        return Err(Error::NonFinite {
            context: "plant state",
        });
    }

    let deriv = |y: &[f64; 8], stage_time: f64| -> [f64; 8] {
        let head: [f64; 7] = y[..7].try_into().expect("fixed split");
        let d7 = plant::derivatives7(p, &head, torque_up, torque_down, disturbance_on);
        let delayed = history.sample(stage_time - p.period_ref);
        let dr = plant::registration_rate(p, delayed, y[1]);
        [d7[0], d7[1], d7[2], d7[3], d7[4], d7[5], d7[6], dr]
    };

    let t = s.time;
    let k1 = deriv(&y0, t);
    let k2 = deriv(&offset(&y0, &k1, dt / 2.0), t + dt / 2.0);
    let k3 = deriv(&offset(&y0, &k2, dt / 2.0), t + dt / 2.0);
    let k4 = deriv(&offset(&y0, &k3, dt), t + dt);

    let mut y = y0;
    for i in 0..8 {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if !y[i].is_finite() {
            return Err(Error::NonFinite {
                context: "integrated state",
            });
        }
    }

    s.tension_up = y[0];
    s.tension_mid = y[1];
    s.tension_down = y[2];
    s.speed_up = y[3];
    s.speed_down = y[4];
    s.phase_up = y[5];
    s.phase_down = y[6];
    s.reg_error = y[7];
    s.time = t + dt;
    Ok(())
}

fn offset(y: &[f64; 8], k: &[f64; 8], h: f64) -> [f64; 8] {
    let mut out = *y;
    for i in 0..8 {
        out[i] += h * k[i];
    }
    out
}

/// Summary of one completed cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleOutcome {
    pub terminal_re: f64,
    pub terminal_time: f64,
    pub max_abs_tension: f64,
    pub max_abs_speed: f64,
}

/// Runs one cycle: steps until the downstream roller has turned by the
/// terminal angle, feeding controller torques held constant over each step.
pub fn run_cycle(
    p: &SystemParams,
    cfg: &SimConfig,
    controller: &mut Controller,
    state: &mut PlantState,
    history: &mut TensionHistory,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<CycleOutcome> {
    let start_phase = state.phase_down;
    let expected =
        (cfg.terminal_angle / std::f64::consts::TAU * p.period_ref / cfg.time_step).ceil();
    let max_steps = 3 * expected as usize + 1024;
    let mut max_abs_tension: f64 = 0.0;
    let mut max_abs_speed: f64 = 0.0;

    for _ in 0..max_steps {
        let (torque_up, torque_down) = controller.torques(state, cfg.time_step);
        integrate_step(
            p,
            state,
            history,
            torque_up,
            torque_down,
            cfg.time_step,
            true,
        )?;
        history.push(state.time, state.tension_up);
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow::from_state(state));
        }
        max_abs_tension = max_abs_tension
            .max(state.tension_up.abs())
            .max(state.tension_mid.abs())
            .max(state.tension_down.abs());
        max_abs_speed = max_abs_speed
            .max(state.speed_up.abs())
            .max(state.speed_down.abs());
        if state.phase_down - start_phase >= cfg.terminal_angle {
            return Ok(CycleOutcome {
                terminal_re: state.reg_error,
                terminal_time: state.time,
                max_abs_tension,
                max_abs_speed,
            });
        }
    }
    Err(Error::MaxStepsExceeded { max_steps })
}

/// Runs a full experiment from the reference point: `iterations` cycles
/// with the learning update applied once at each cycle end.
pub fn run_experiment(
    p: &SystemParams,
    cfg: &SimConfig,
    spec: &ControllerSpec,
) -> Result<ExperimentOutcome> {
    p.validate()?;
    cfg.validate(p)?;
    let mut controller = Controller::new(p, spec)?;
    let mut state = PlantState::default();
    let mut history = TensionHistory::new(p.period_ref, cfg.time_step);
    history.push(0.0, 0.0);
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut records = Vec::with_capacity(cfg.iterations);

    for iteration in 1..=cfg.iterations {
        let xi = controller.xi();
        let wrap = |e: Error| Error::AtIteration {
            iteration,
            source: Box::new(e),
        };
        let cycle = run_cycle(p, cfg, &mut controller, &mut state, &mut history, trace.as_mut())
            .map_err(wrap)?;
        let learning_increment = controller.on_terminal(cycle.terminal_re).map_err(wrap)?;
        records.push(IterationRecord {
            iteration,
            terminal_re: cycle.terminal_re,
            terminal_time: cycle.terminal_time,
            max_abs_tension: cycle.max_abs_tension,
            max_abs_speed: cycle.max_abs_speed,
            xi,
            learning_increment,
        });
    }
    Ok(ExperimentOutcome { records, trace })
}
