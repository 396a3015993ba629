//! Cycle-to-cycle learning of a periodic feed-forward torque.
//!
//! A single scalar amplitude multiplies a fixed periodic basis over the
//! roller phase. The amplitude is updated once per cycle from the terminal
//! registration error, so the learning acts across cycles while the basis
//! shapes the torque within a cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-constant periodic basis over one roller revolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisTable {
    values: Vec<f64>,
}

impl BasisTable {
    /// Discretized cosine: bin `b` of `steps` holds `cos` evaluated at the
    /// bin center.
    pub fn cosine(steps: usize) -> Self {
        assert!(steps >= 1, "basis needs at least one step");
        let tau = std::f64::consts::TAU;
        Self {
            values: (0..steps)
                .map(|b| (tau * (b as f64 + 0.5) / steps as f64).cos())
                .collect(),
        }
    }

    /// Arbitrary bin values, mostly useful for synthetic analyses.
    pub fn from_values(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "basis needs at least one step");
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Basis value for the bin containing `phase` (any real angle, rad).
    pub fn value_at(&self, phase: f64) -> f64 {
        let tau = std::f64::consts::TAU;
        let mut wrapped = phase % tau;
        if wrapped < 0.0 {
            wrapped += tau;
        }
        let n = self.values.len();
        let bin = ((wrapped / tau) * n as f64) as usize;
        self.values[bin.min(n - 1)]
    }
}

/// Learned feed-forward torque `xi · basis(phase)` with a scalar update law
/// `xi ← xi + gain · terminal_error` applied between cycles.
#[derive(Debug, Clone)]
pub struct StilcController {
    pub learning_gain: f64,
    /// Terminal registration error the learning drives toward (m).
    pub target: f64,
    basis: BasisTable,
    xi: f64,
}

impl StilcController {
    pub fn new(learning_gain: f64, basis: BasisTable, target: f64) -> Self {
        Self {
            learning_gain,
            target,
            basis,
            xi: 0.0,
        }
    }

    /// Current basis amplitude (N·m).
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn basis(&self) -> &BasisTable {
        &self.basis
    }

    /// Feed-forward torque (N·m) at the given roller phase.
    pub fn output(&self, phase: f64) -> f64 {
        self.xi * self.basis.value_at(phase)
    }

    /// One learning update from the measured terminal registration error;
    /// returns the applied amplitude increment.
    pub fn update(&mut self, terminal_error: f64) -> Result<f64> {
        if !terminal_error.is_finite() {
            return Err(Error::NonFinite {
                context: "terminal registration error",
            });
        }
        let increment = self.learning_gain * (terminal_error - self.target);
        self.xi += increment;
        if !self.xi.is_finite() {
            return Err(Error::NonFinite {
                context: "learned basis amplitude",
            });
        }
        Ok(increment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cosine_table_samples_bin_centers() {
        let b = BasisTable::cosine(20);
        assert_relative_eq!(
            b.value_at(0.0),
            (std::f64::consts::PI / 20.0).cos(),
            max_relative = 1e-12
        );
        assert_relative_eq!(b.value_at(0.0), 0.9876883405951378, max_relative = 1e-12);
    }

    #[test]
    fn bins_are_half_open_on_the_right() {
        let b = BasisTable::cosine(20);
        let width = std::f64::consts::TAU / 20.0;
        assert_eq!(b.value_at(width * 0.999999), b.value_at(0.0));
        assert_ne!(b.value_at(width), b.value_at(0.0));
        assert_eq!(b.value_at(width), b.value_at(width * 1.5));
    }

    #[test]
    fn basis_is_periodic_in_the_phase() {
        let b = BasisTable::cosine(7);
        let tau = std::f64::consts::TAU;
        for k in 0..40 {
            let th = -3.0 + 0.37 * k as f64;
            assert_eq!(b.value_at(th), b.value_at(th + tau));
            assert_eq!(b.value_at(th), b.value_at(th - 5.0 * tau));
        }
    }

    #[test]
    fn update_accumulates_gain_times_error() {
        let mut c = StilcController::new(5000.0, BasisTable::cosine(20), 0.0);
        assert_eq!(c.xi(), 0.0);
        let inc = c.update(2.0e-4).unwrap();
        assert_relative_eq!(inc, 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.xi(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(c.output(0.0), 0.9876883405951378, max_relative = 1e-12);
    }

    #[test]
    fn amplitude_is_the_left_fold_of_increments() {
        let mut c = StilcController::new(5000.0, BasisTable::cosine(20), 0.0);
        let errors = [2.0e-4, -1.3e-4, 4.4e-5, -9.0e-6, 1.1e-6];
        let mut folded = 0.0;
        for e in errors {
            c.update(e).unwrap();
            folded += 5000.0 * e;
        }
        assert_eq!(c.xi(), folded);
    }

    #[test]
    fn target_shifts_the_driven_error() {
        let mut c = StilcController::new(100.0, BasisTable::cosine(4), 1.0e-3);
        c.update(1.0e-3).unwrap();
        assert_eq!(c.xi(), 0.0);
    }

    #[test]
    fn update_rejects_non_finite_errors() {
        let mut c = StilcController::new(100.0, BasisTable::cosine(4), 0.0);
        assert!(c.update(f64::NAN).is_err());
    }
}
