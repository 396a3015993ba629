//! Simulation and convergence analysis for registration-error control in a
//! two-roller roll-to-roll printing unit.
//!
//! The plant is a perturbation model of two driven rollers coupled by three
//! web spans. Roller eccentricity enters as a periodic disturbance; the
//! registration error integrates the resulting tension transients, once
//! directly and once through the span transport delay.
//!
//! Controllers combine a within-cycle feedback baseline (open loop, PID per
//! roller, or LQR with tension integrators) with an optional cycle-to-cycle
//! learned feed-forward torque. The [`analysis`] module predicts the
//! cycle-domain behavior of that learning loop from a periodically sampled
//! discretization of the closed loop, without running the simulator.

pub mod analysis;
pub mod controller;
pub mod delay;
pub mod engine;
pub mod error;
pub mod lqr;
pub mod params;
pub mod pid;
pub mod plant;
pub mod stilc;

pub use controller::{BaselineSpec, Controller, ControllerSpec, StilcChannel, StilcSpec};
pub use engine::{run_experiment, ExperimentOutcome, IterationRecord, SimConfig, TraceRow};
pub use error::{Error, Result};
pub use params::SystemParams;
pub use plant::{PlantState, Roller};
