//! Per-roller PID tension/speed feedback.

use serde::{Deserialize, Serialize};

/// PID gains acting on a roller's `(span tension, web speed)` deviation pair.
///
/// Each gain is a row vector over that pair, so e.g. `kd = [-0.0038, -0.1916]`
/// damps both the tension rate and the roller acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidGains {
    pub kp: [f64; 2],
    pub ki: [f64; 2],
    pub kd: [f64; 2],
}

impl PidGains {
    /// Baseline tuning A.
    pub const fn preset_a() -> Self {
        Self {
            kp: [-0.1916, 0.0],
            ki: [-0.0767, 0.0],
            kd: [-0.0038, -0.1916],
        }
    }

    /// Tuning B: A with a softer integral gain.
    pub const fn preset_b() -> Self {
        Self {
            kp: [-0.1916, 0.0],
            ki: [-0.0575, 0.0],
            kd: [-0.0038, -0.1916],
        }
    }

    /// Tuning C: B with a doubled proportional gain.
    pub const fn preset_c() -> Self {
        Self {
            kp: [-0.3832, 0.0],
            ki: [-0.0575, 0.0],
            kd: [-0.0038, -0.1916],
        }
    }

    pub const fn zero() -> Self {
        Self {
            kp: [0.0; 2],
            ki: [0.0; 2],
            kd: [0.0; 2],
        }
    }
}

/// PID torque (N·m) for one roller given its measurement, running integral
/// and derivative estimate.
pub fn pid_control(g: &PidGains, measured: [f64; 2], integral: [f64; 2], derivative: [f64; 2]) -> f64 {
    g.kp[0] * measured[0]
        + g.kp[1] * measured[1]
        + g.ki[0] * integral[0]
        + g.ki[1] * integral[1]
        + g.kd[0] * derivative[0]
        + g.kd[1] * derivative[1]
}

/// Discrete-time realization of one roller's PID channel.
///
/// The integral is a left-rectangle sum, so the torque at step `k` uses the
/// integral of steps `0..k`; the derivative is a backward difference and is
/// zero on the first step.
#[derive(Debug, Clone, Default)]
pub struct PidChannel {
    integral: [f64; 2],
    previous: Option<[f64; 2]>,
}

impl PidChannel {
    /// Torque for this step, then advances the integrator and difference state.
    pub fn step(&mut self, g: &PidGains, measured: [f64; 2], dt: f64) -> f64 {
        let derivative = match self.previous {
            None => [0.0; 2],
            Some(prev) => [(measured[0] - prev[0]) / dt, (measured[1] - prev[1]) / dt],
        };
        let torque = pid_control(g, measured, self.integral, derivative);
        self.integral[0] += measured[0] * dt;
        self.integral[1] += measured[1] * dt;
        self.previous = Some(measured);
        torque
    }

    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn control_law_is_the_weighted_sum() {
        let g = PidGains::preset_a();
        let u = pid_control(&g, [1.0, 0.01], [2.0, 0.1], [0.5, 0.05]);
        let by_hand = -0.1916 * 1.0 - 0.0767 * 2.0 - 0.0038 * 0.5 - 0.1916 * 0.05;
        assert_relative_eq!(u, by_hand, max_relative = 1e-12);
    }

    #[test]
    fn presets_differ_only_where_documented() {
        let a = PidGains::preset_a();
        let b = PidGains::preset_b();
        let c = PidGains::preset_c();
        assert_eq!(a.kp, b.kp);
        assert_eq!(a.kd, b.kd);
        assert_ne!(a.ki, b.ki);
        assert_eq!(b.ki, c.ki);
        assert_eq!(b.kd, c.kd);
        assert_relative_eq!(c.kp[0], 2.0 * b.kp[0], max_relative = 1e-12);
    }

    #[test]
    fn first_step_has_no_derivative_or_integral_action() {
        let g = PidGains {
            kp: [0.0; 2],
            ki: [1.0, 1.0],
            kd: [1.0, 1.0],
        };
        let mut ch = PidChannel::default();
        assert_eq!(ch.step(&g, [5.0, -3.0], 0.1), 0.0);
    }

    #[test]
    fn integral_lags_one_step_and_derivative_differences() {
        let g = PidGains {
            kp: [0.0; 2],
            ki: [1.0, 0.0],
            kd: [1.0, 0.0],
        };
        let mut ch = PidChannel::default();
        ch.step(&g, [2.0, 0.0], 0.5);
        // integral now holds 2.0·0.5; derivative sees (3-2)/0.5
        let u = ch.step(&g, [3.0, 0.0], 0.5);
        assert_relative_eq!(u, 1.0 + 2.0, max_relative = 1e-12);
    }

    #[test]
    fn reset_clears_accumulated_state() {
        let g = PidGains::preset_a();
        let mut ch = PidChannel::default();
        ch.step(&g, [1.0, 1.0], 0.1);
        ch.step(&g, [2.0, -1.0], 0.1);
        ch.reset();
        assert_eq!(ch.step(&g, [0.0, 0.0], 0.1), 0.0);
    }
}
