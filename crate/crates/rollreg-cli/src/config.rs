//! Experiment description file: one TOML document covering plant, controller,
//! simulation, analysis, and output settings.

use std::path::PathBuf;

use rollreg::lqr::LqrWeights;
use rollreg::pid::PidGains;
use rollreg::{BaselineSpec, ControllerSpec, SimConfig, StilcChannel, SystemParams};
use serde::{Deserialize, Serialize};

/// A complete experiment. Every section and every key is optional; unset
/// keys take the built-in defaults, so an empty file is a valid experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub controller: ControllerSection,
    pub sim: SimConfig,
    pub analysis: AnalysisSection,
    pub output: OutputSection,
}

/// Controller choice: a named preset plus optional piecewise overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerSection {
    /// One of the named presets (`rollreg --help` lists them).
    pub preset: String,
    pub learning_gain: Option<f64>,
    pub basis_steps: Option<usize>,
    pub target: Option<f64>,
    pub channel: Option<StilcChannel>,
    pub pid_up: Option<PidGains>,
    pub pid_down: Option<PidGains>,
    pub lqr: Option<LqrWeights>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            preset: "stilc-pid".to_string(),
            learning_gain: None,
            basis_steps: None,
            target: None,
            channel: None,
            pid_up: None,
            pid_down: None,
            lqr: None,
        }
    }
}

impl ControllerSection {
    /// Materializes the preset and layers the overrides on top. Overrides
    /// that do not apply to the chosen preset are rejected by key name.
    pub fn resolve(&self) -> Result<ControllerSpec, String> {
        let mut spec = ControllerSpec::preset(&self.preset).ok_or_else(|| {
            format!(
                "controller.preset: unknown preset `{}` (expected one of: {})",
                self.preset,
                ControllerSpec::preset_names().join(", ")
            )
        })?;

        if let Some(g) = self.pid_up {
            match &mut spec.baseline {
                BaselineSpec::Pid { up, .. } => *up = g,
                _ => return Err(self.reject("pid_up", "has no PID stage")),
            }
        }
        if let Some(g) = self.pid_down {
            match &mut spec.baseline {
                BaselineSpec::Pid { down, .. } => *down = g,
                _ => return Err(self.reject("pid_down", "has no PID stage")),
            }
        }
        if let Some(w) = self.lqr {
            match &mut spec.baseline {
                BaselineSpec::Lqr(dst) => *dst = w,
                _ => return Err(self.reject("lqr", "is not an LQR controller")),
            }
        }

        let learning = [
            ("learning_gain", self.learning_gain.is_some()),
            ("basis_steps", self.basis_steps.is_some()),
            ("target", self.target.is_some()),
            ("channel", self.channel.is_some()),
        ];
        for (key, set) in learning {
            if set && spec.stilc.is_none() {
                return Err(self.reject(key, "has no learning stage"));
            }
        }
        if let Some(stilc) = spec.stilc.as_mut() {
            if let Some(v) = self.learning_gain {
                stilc.learning_gain = v;
            }
            if let Some(v) = self.basis_steps {
                stilc.basis_steps = v;
            }
            if let Some(v) = self.target {
                stilc.target = v;
            }
            if let Some(v) = self.channel {
                stilc.channel = v;
            }
        }
        Ok(spec)
    }

    fn reject(&self, key: &str, why: &str) -> String {
        format!("controller.{key}: preset `{}` {why}", self.preset)
    }
}

/// Settings for the discretized closed-loop analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Angle bins per revolution.
    pub bins: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { bins: 360 }
    }
}

/// Where reports land.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Also write a line chart per run.
    pub svg: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            svg: false,
        }
    }
}

/// Parses the file at `path`, reporting the offending key on failure.
pub fn load(path: &std::path::Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}
