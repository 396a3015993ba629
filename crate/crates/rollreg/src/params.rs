//! Physical parameters of a two-roller printing unit and its web spans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Geometry, inertia and reference operating point of one printing unit.
///
/// The unit consists of two driven print rollers ("up" = upstream,
/// "down" = downstream) and three web spans: the span entering the
/// upstream roller, the span between the two rollers, and the span
/// leaving the downstream roller. Reference tensions and speeds define
/// the operating point; dynamic states are perturbations around it.
///
/// The upstream roller may carry an eccentric print cylinder, modeled as
/// a phase-dependent effective radius `radius_up + eccentricity·cos(θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Web cross-section area (m²).
    pub cross_section: f64,
    /// Young's modulus of the web (Pa).
    pub youngs_modulus: f64,
    /// Nominal upstream roller radius (m).
    pub radius_up: f64,
    /// Nominal downstream roller radius (m).
    pub radius_down: f64,
    /// Upstream roller inertia (kg·m²).
    pub inertia_up: f64,
    /// Downstream roller inertia (kg·m²).
    pub inertia_down: f64,
    /// Upstream roller viscous friction coefficient.
    pub friction_up: f64,
    /// Downstream roller viscous friction coefficient.
    pub friction_down: f64,
    /// Upstream motor-to-roller gear ratio.
    pub gear_up: f64,
    /// Downstream motor-to-roller gear ratio.
    pub gear_down: f64,
    /// Length of the span entering the upstream roller (m).
    pub span_up: f64,
    /// Length of the span between the two rollers (m).
    pub span_mid: f64,
    /// Length of the span leaving the downstream roller (m).
    pub span_down: f64,
    /// Reference web speed at the upstream roller (m/s).
    pub speed_ref_up: f64,
    /// Reference web speed at the downstream roller (m/s).
    pub speed_ref_down: f64,
    /// Reference tension of the entering span (N).
    pub tension_ref_up: f64,
    /// Reference tension of the span between the rollers (N).
    pub tension_ref_mid: f64,
    /// Reference tension of the leaving span (N).
    pub tension_ref_down: f64,
    /// Transport delay between the two print nips at reference speed (s);
    /// equals one roller revolution under the matched-geometry assumption.
    pub period_ref: f64,
    /// Eccentricity of the upstream print cylinder (m).
    pub eccentricity: f64,
}

impl Default for SystemParams {
    /// Desk-scale unit used throughout the test suite.
    fn default() -> Self {
        Self {
            cross_section: 1.29e-5,
            youngs_modulus: 186.158e6,
            radius_up: 0.381,
            radius_down: 0.381,
            inertia_up: 0.146,
            inertia_down: 0.146,
            friction_up: 0.685,
            friction_down: 0.685,
            gear_up: 1.0,
            gear_down: 1.0,
            span_up: 2.4,
            span_mid: 2.4,
            span_down: 2.4,
            speed_ref_up: 0.16,
            speed_ref_down: 0.16,
            tension_ref_up: 20.0,
            tension_ref_mid: 20.0,
            tension_ref_down: 20.0,
            period_ref: 14.962,
            eccentricity: 1.0e-3,
        }
    }
}

impl SystemParams {
    /// Axial web stiffness A·E (N).
    pub fn ae(&self) -> f64 {
        self.cross_section * self.youngs_modulus
    }

    /// Checks positivity and the matched-geometry assumptions the
    /// registration model relies on: span lengths within 1% of the roller
    /// circumference and the transport delay within 0.5% of the mid-span
    /// transit time.
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 17] = [
            ("cross_section", self.cross_section),
            ("youngs_modulus", self.youngs_modulus),
            ("radius_up", self.radius_up),
            ("radius_down", self.radius_down),
            ("inertia_up", self.inertia_up),
            ("inertia_down", self.inertia_down),
            ("friction_up", self.friction_up),
            ("friction_down", self.friction_down),
            ("gear_up", self.gear_up),
            ("gear_down", self.gear_down),
            ("span_up", self.span_up),
            ("span_mid", self.span_mid),
            ("span_down", self.span_down),
            ("speed_ref_up", self.speed_ref_up),
            ("speed_ref_down", self.speed_ref_down),
            ("period_ref", self.period_ref),
            ("tension_ref_mid", self.tension_ref_mid),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        for (name, value) in [
            ("tension_ref_up", self.tension_ref_up),
            ("tension_ref_down", self.tension_ref_down),
            ("eccentricity", self.eccentricity),
        ] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be non-negative and finite, got {value}"),
                });
            }
        }
        if self.eccentricity >= self.radius_up {
            return Err(Error::InvalidParam {
                name: "eccentricity",
                reason: format!(
                    "must be smaller than radius_up ({}), got {}",
                    self.radius_up, self.eccentricity
                ),
            });
        }
        let circumference = std::f64::consts::TAU * self.radius_up;
        for (name, span) in [
            ("span_up", self.span_up),
            ("span_mid", self.span_mid),
            ("span_down", self.span_down),
        ] {
            if ((span - circumference) / span).abs() > 0.01 {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!(
                        "span ({span} m) must stay within 1% of the roller circumference \
                         ({circumference:.4} m) for the one-revolution delay model"
                    ),
                });
            }
        }
        let transit = self.span_mid / self.speed_ref_up;
        if ((self.period_ref - transit) / transit).abs() > 0.005 {
            return Err(Error::InvalidParam {
                name: "period_ref",
                reason: format!(
                    "delay ({} s) must stay within 0.5% of the mid-span transit time ({transit:.4} s)",
                    self.period_ref
                ),
            });
        }
        Ok(())
    }
}
