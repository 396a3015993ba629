//! Perturbation dynamics of the two-roller unit.
//!
//! Speeds and tensions are deviations from the reference operating point.
//! Each driven roller obeys a torque balance; each span obeys a
//! stretch-transport tension balance; the registration error integrates the
//! tension mismatch between the two print nips, with the upstream
//! contribution delayed by one web transit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Which driven roller of the unit an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Roller {
    Up,
    Down,
}

/// Dynamic state of the unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    /// Tension deviation of the entering span (N).
    pub tension_up: f64,
    /// Tension deviation of the span between the rollers (N).
    pub tension_mid: f64,
    /// Tension deviation of the leaving span (N).
    pub tension_down: f64,
    /// Web speed deviation at the upstream roller (m/s).
    pub speed_up: f64,
    /// Web speed deviation at the downstream roller (m/s).
    pub speed_down: f64,
    /// Upstream roller phase (rad), grows without wrapping.
    pub phase_up: f64,
    /// Downstream roller phase (rad), grows without wrapping.
    pub phase_down: f64,
    /// Accumulated registration error (m); never reset between cycles.
    pub reg_error: f64,
    /// Simulation time (s).
    pub time: f64,
}

/// Constant torque (N·m) that holds the given roller exactly at its
/// reference speed under the reference span tensions.
pub fn equilibrium_input(p: &SystemParams, roller: Roller) -> f64 {
    let (f, n, r, v, tension_step) = match roller {
        Roller::Up => (
            p.friction_up,
            p.gear_up,
            p.radius_up,
            p.speed_ref_up,
            p.tension_ref_mid - p.tension_ref_up,
        ),
        Roller::Down => (
            p.friction_down,
            p.gear_down,
            p.radius_down,
            p.speed_ref_down,
            p.tension_ref_down - p.tension_ref_mid,
        ),
    };
    f * v / (n * r) - r / n * tension_step
}

/// Upstream roller radius at phase `theta` (m), including eccentricity.
pub fn effective_radius(p: &SystemParams, theta: f64) -> f64 {
    p.radius_up + p.eccentricity * theta.cos()
}

/// Torque (N·m) that would hold the upstream roller at reference speed at
/// phase `theta`, where the eccentric radius applies.
pub fn varying_equilibrium_input(p: &SystemParams, theta: f64) -> Result<f64> {
    let r = effective_radius(p, theta);
    if r <= 0.0 {
        return Err(Error::NonPositiveRadius { theta });
    }
    Ok(p.friction_up * p.speed_ref_up / (p.gear_up * r)
        - r / p.gear_up * (p.tension_ref_mid - p.tension_ref_up))
}

/// Equivalent input disturbance (N·m) on the upstream torque channel at
/// phase `theta`: the gap between the constant open-loop torque and the
/// torque the eccentric radius would actually require.
pub fn input_disturbance(p: &SystemParams, theta: f64) -> Result<f64> {
    Ok(equilibrium_input(p, Roller::Up) - varying_equilibrium_input(p, theta)?)
}

/// Growth rate of the registration error (m/s) given the upstream span
/// tension one transit ago and the mid-span tension now.
///
/// Positive when the span between the printing nips is more stretched now
/// than the entering span was when the material in it passed the upstream
/// nip: the pattern pair printed this cycle drifts apart.
pub fn registration_rate(p: &SystemParams, delayed_tension_up: f64, tension_mid: f64) -> f64 {
    (p.speed_ref_down * tension_mid - p.speed_ref_up * delayed_tension_up) / p.ae()
}

/// Time derivatives of
/// `(tension_up, tension_mid, tension_down, speed_up, speed_down, phase_up, phase_down)`.
///
/// `torque_up` and `torque_down` are absolute motor torques (N·m). With
/// `disturbance_on` the upstream roller uses its eccentric radius profile,
/// which is what turns a constant open-loop torque into a phase-periodic
/// equivalent input disturbance.
pub fn plant_derivatives(
    p: &SystemParams,
    s: &PlantState,
    torque_up: f64,
    torque_down: f64,
    disturbance_on: bool,
) -> Result<[f64; 7]> {
    let y = [
        s.tension_up,
        s.tension_mid,
        s.tension_down,
        s.speed_up,
        s.speed_down,
        s.phase_up,
        s.phase_down,
    ];
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "plant state",
        });
    }
    if !torque_up.is_finite() || !torque_down.is_finite() {
        return Err(Error::NonFinite {
            context: "applied torque",
        });
    }
    Ok(derivatives7(p, &y, torque_up, torque_down, disturbance_on))
}

/// Unchecked derivative kernel shared with the integrator. State layout:
/// `[tension_up, tension_mid, tension_down, speed_up, speed_down, phase_up, phase_down]`.
pub(crate) fn derivatives7(
    p: &SystemParams,
    y: &[f64; 7],
    torque_up: f64,
    torque_down: f64,
    disturbance_on: bool,
) -> [f64; 7] {
    let [t_up, t_mid, t_down, v_up, v_down, th_up, _] = *y;
    let ae = p.ae();
    let r_up = if disturbance_on {
        p.radius_up + p.eccentricity * th_up.cos()
    } else {
        p.radius_up
    };
    let r_down = p.radius_down;

    // absolute values around the reference point
    let vu = p.speed_ref_up + v_up;
    let vd = p.speed_ref_down + v_down;
    let tu = p.tension_ref_up + t_up;
    let tm = p.tension_ref_mid + t_mid;
    let td = p.tension_ref_down + t_down;

    let dv_up = r_up / p.inertia_up
        * ((tm - tu) * r_up + p.gear_up * torque_up - p.friction_up / r_up * vu);
    let dv_down = r_down / p.inertia_down
        * ((td - tm) * r_down + p.gear_down * torque_down - p.friction_down / r_down * vd);

    // the boundary rollers outside the unit hold reference speed and tension
    let dt_up = (ae * v_up - p.tension_ref_up * v_up - p.speed_ref_up * t_up) / p.span_up;
    let dt_mid = (ae * (v_down - v_up) + p.tension_ref_up * v_up + p.speed_ref_up * t_up
        - p.tension_ref_mid * v_down
        - p.speed_ref_down * t_mid
        + (p.tension_ref_up * p.speed_ref_up - p.tension_ref_mid * p.speed_ref_down))
        / p.span_mid;
    let dt_down = (-ae * v_down + p.tension_ref_mid * v_down + p.speed_ref_down * t_mid
        - p.speed_ref_down * t_down
        + (p.tension_ref_mid - p.tension_ref_down) * p.speed_ref_down)
        / p.span_down;

    [dt_up, dt_mid, dt_down, dv_up, dv_down, vu / r_up, vd / r_down]
}
