//! Controller assembly: a within-cycle feedback baseline plus an optional
//! cycle-to-cycle learned feed-forward torque.
//!
//! The baseline runs continuously across cycle boundaries; only the learned
//! amplitude changes between cycles. All feedback acts on perturbation
//! quantities, and the assembled output is the absolute motor torque.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lqr::{self, LqrWeights};
use crate::params::SystemParams;
use crate::pid::{PidChannel, PidGains};
use crate::plant::{self, PlantState, Roller};
use crate::stilc::{BasisTable, StilcController};

/// Torque channel(s) the learned feed-forward acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StilcChannel {
    Upstream,
    Downstream,
    Both,
}

/// Configuration of the cycle-to-cycle learning loop. The basis is always
/// indexed by the upstream roller phase, where the disturbance lives; the
/// channel only picks which motor applies the correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StilcSpec {
    pub learning_gain: f64,
    pub basis_steps: usize,
    /// Terminal registration error to drive toward (m).
    pub target: f64,
    pub channel: StilcChannel,
}

impl Default for StilcSpec {
    fn default() -> Self {
        Self {
            learning_gain: 5000.0,
            basis_steps: 20,
            target: 0.0,
            channel: StilcChannel::Upstream,
        }
    }
}

/// Within-cycle feedback baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BaselineSpec {
    OpenLoop,
    Pid { up: PidGains, down: PidGains },
    Lqr(LqrWeights),
}

/// Complete controller configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub baseline: BaselineSpec,
    pub stilc: Option<StilcSpec>,
}

impl ControllerSpec {
    /// Named configurations: `open-loop`, `pid-a`, `pid-b`, `pid-c`, `lqr`,
    /// `stilc-pid` (alias of `stilc-pid-a`), `stilc-pid-b`, `stilc-pid-c`,
    /// `stilc-lqr`.
    pub fn preset(name: &str) -> Option<Self> {
        let pid = |g: PidGains| BaselineSpec::Pid { up: g, down: g };
        let spec = match name {
            "open-loop" => Self {
                baseline: BaselineSpec::OpenLoop,
                stilc: None,
            },
            "pid-a" => Self {
                baseline: pid(PidGains::preset_a()),
                stilc: None,
            },
            "pid-b" => Self {
                baseline: pid(PidGains::preset_b()),
                stilc: None,
            },
            "pid-c" => Self {
                baseline: pid(PidGains::preset_c()),
                stilc: None,
            },
            "lqr" => Self {
                baseline: BaselineSpec::Lqr(LqrWeights::default()),
                stilc: None,
            },
            "stilc-pid" | "stilc-pid-a" => Self {
                baseline: pid(PidGains::preset_a()),
                stilc: Some(StilcSpec::default()),
            },
            "stilc-pid-b" => Self {
                baseline: pid(PidGains::preset_b()),
                stilc: Some(StilcSpec::default()),
            },
            "stilc-pid-c" => Self {
                baseline: pid(PidGains::preset_c()),
                stilc: Some(StilcSpec::default()),
            },
            "stilc-lqr" => Self {
                baseline: BaselineSpec::Lqr(LqrWeights::default()),
                stilc: Some(StilcSpec::default()),
            },
            _ => return None,
        };
        Some(spec)
    }

    pub fn preset_names() -> &'static [&'static str] {
        &[
            "open-loop",
            "pid-a",
            "pid-b",
            "pid-c",
            "lqr",
            "stilc-pid",
            "stilc-pid-a",
            "stilc-pid-b",
            "stilc-pid-c",
            "stilc-lqr",
        ]
    }
}

enum BaselineState {
    OpenLoop,
    Pid {
        up_gains: PidGains,
        down_gains: PidGains,
        up: PidChannel,
        down: PidChannel,
    },
    Lqr {
        /// 2×7 gain on `[tensions, speeds, tension integrals]`.
        gain: DMatrix<f64>,
        /// Integrators of the two measured tension deviations, negated.
        z: [f64; 2],
    },
}

/// Runtime controller. Produces absolute motor torques from the current
/// plant state; holds the feedback state and the learned amplitude.
pub struct Controller {
    torque_ref_up: f64,
    torque_ref_down: f64,
    baseline: BaselineState,
    stilc: Option<(StilcController, StilcChannel)>,
}

impl Controller {
    pub fn new(p: &SystemParams, spec: &ControllerSpec) -> Result<Self> {
        let baseline = match &spec.baseline {
            BaselineSpec::OpenLoop => BaselineState::OpenLoop,
            BaselineSpec::Pid { up, down } => BaselineState::Pid {
                up_gains: *up,
                down_gains: *down,
                up: PidChannel::default(),
                down: PidChannel::default(),
            },
            BaselineSpec::Lqr(w) => BaselineState::Lqr {
                gain: lqr::design_gain(p, w)?,
                z: [0.0; 2],
            },
        };
        let stilc = spec.stilc.as_ref().map(|s| {
            (
                StilcController::new(s.learning_gain, BasisTable::cosine(s.basis_steps), s.target),
                s.channel,
            )
        });
        Ok(Self {
            torque_ref_up: plant::equilibrium_input(p, Roller::Up),
            torque_ref_down: plant::equilibrium_input(p, Roller::Down),
            baseline,
            stilc,
        })
    }

    /// Absolute motor torques `(up, down)` for the step starting at `s`.
    /// Feedback integrators advance by `dt` after the torque is formed, so
    /// each step applies the integral accumulated up to its start.
    pub fn torques(&mut self, s: &PlantState, dt: f64) -> (f64, f64) {
        let (mut u_up, mut u_down) = (0.0, 0.0);
        match &mut self.baseline {
            BaselineState::OpenLoop => {}
            BaselineState::Pid {
                up_gains,
                down_gains,
                up,
                down,
            } => {
                u_up = up.step(up_gains, [s.tension_up, s.speed_up], dt);
                u_down = down.step(down_gains, [s.tension_mid, s.speed_down], dt);
            }
            BaselineState::Lqr { gain, z } => {
                let x = DVector::from_column_slice(&[
                    s.tension_up,
                    s.tension_mid,
                    s.tension_down,
                    s.speed_up,
                    s.speed_down,
                    z[0],
                    z[1],
                ]);
                let u = -(&*gain * x);
                u_up = u[0];
                u_down = u[1];
                z[0] -= s.tension_up * dt;
                z[1] -= s.tension_mid * dt;
            }
        }
        if let Some((stilc, channel)) = &self.stilc {
            let ff = stilc.output(s.phase_up);
            match channel {
                StilcChannel::Upstream => u_up += ff,
                StilcChannel::Downstream => u_down += ff,
                StilcChannel::Both => {
                    u_up += ff;
                    u_down += ff;
                }
            }
        }
        (self.torque_ref_up + u_up, self.torque_ref_down + u_down)
    }

    /// Cycle boundary: feeds the terminal registration error to the
    /// learning loop. Returns the applied amplitude increment (0 when no
    /// learning is configured). Feedback state deliberately persists.
    pub fn on_terminal(&mut self, terminal_error: f64) -> Result<f64> {
        match &mut self.stilc {
            Some((stilc, _)) => stilc.update(terminal_error),
            None => Ok(0.0),
        }
    }

    /// Current learned amplitude (N·m); 0 when no learning is configured.
    pub fn xi(&self) -> f64 {
        self.stilc.as_ref().map_or(0.0, |(s, _)| s.xi())
    }
}
