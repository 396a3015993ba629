//! Cycle-domain convergence analysis of the learning loop.
//!
//! The closed loop (plant plus feedback baseline) is sampled over one
//! roller revolution into per-bin zero-order-hold transitions, giving a
//! linear time-varying cycle model. Running its sensitivity recursions
//! yields two scalars Ω₁ and Ω₂ that govern the cycle-to-cycle recurrence
//! of the registration increment; its characteristic roots predict whether
//! the learning converges, and in what style, without running the
//! simulator.
//!
//! Sign conventions: the current-cycle output row acts on the mid-span
//! tension, the delayed row on the entering-span tension, both scaled so
//! that angle sums weighted by the bin width equal time integrals.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::controller::{BaselineSpec, ControllerSpec, StilcChannel};
use crate::error::{Error, Result};
use crate::lqr;
use crate::params::SystemParams;
use crate::pid::PidGains;
use crate::plant;
use crate::stilc::BasisTable;

/// Severity threshold for the per-bin stability gate on the continuous
/// closed loop. Pure integrators sit exactly on the axis and must pass.
const STABILITY_MARGIN: f64 = 1e-9;

/// Distance from the unit circle below which a root is considered
/// marginal rather than convergent or divergent.
const MARGINAL_BAND: f64 = 1e-9;

/// Per-bin zero-order-hold discretization of the closed loop over one
/// revolution, with the learned-input and disturbance channels kept apart.
#[derive(Debug, Clone)]
pub struct LtvProfile {
    /// Bin width (rad).
    pub dtheta: f64,
    /// Time equivalent of one bin at the nominal transport rate (s).
    pub dtau: f64,
    /// State transition over each bin.
    pub a_step: Vec<DMatrix<f64>>,
    /// Input vector per bin for the learned feed-forward channel.
    pub b_phi: Vec<DVector<f64>>,
    /// Input vector per bin for the equivalent disturbance channel.
    pub b_dist: Vec<DVector<f64>>,
    /// Basis sample at each bin center.
    pub phi: Vec<f64>,
    /// Equivalent input disturbance at each bin center (N·m).
    pub u_dist: Vec<f64>,
    /// Output row for the current cycle (acts on the mid-span tension).
    pub c_now: DVector<f64>,
    /// Output row for the previous cycle (acts on the entering-span tension).
    pub c_prev: DVector<f64>,
}

impl LtvProfile {
    pub fn n_bins(&self) -> usize {
        self.a_step.len()
    }

    pub fn dim(&self) -> usize {
        self.c_now.len()
    }
}

/// Sensitivity recursions along one cycle, indexed 0..=N: the state after
/// bin `k` is `G(k)·x₀ + H(k)·Ξ + H_d(k)` by superposition.
#[derive(Debug, Clone)]
pub struct Recursions {
    /// Sensitivity to the cycle-start state.
    pub g: Vec<DMatrix<f64>>,
    /// Sensitivity to the learned amplitude.
    pub h: Vec<DVector<f64>>,
    /// Accumulated response to the disturbance.
    pub h_d: Vec<DVector<f64>>,
}

/// Builds the per-bin closed-loop transitions for a controller
/// configuration. Bins sample the upstream roller angle at their centers;
/// the angle-to-time rate is held at its nominal value. When the
/// configuration carries no learning loop, the default basis and channel
/// are analyzed.
///
/// Fails with [`Error::UnstablePreset`] if the continuous closed loop has
/// a strictly unstable eigenvalue at any bin.
pub fn discretize_closed_loop(
    p: &SystemParams,
    spec: &ControllerSpec,
    n_bins: usize,
) -> Result<LtvProfile> {
    if n_bins == 0 {
        return Err(Error::InvalidParam {
            name: "bins",
            reason: "need at least one angle bin".into(),
        });
    }
    p.validate()?;
    let stilc = spec.stilc.unwrap_or_default();
    let basis = BasisTable::cosine(stilc.basis_steps);
    let dtheta = std::f64::consts::TAU / n_bins as f64;
    let dtau = dtheta * p.radius_up / p.speed_ref_up;

    let (a5_nom, _, c2) = lqr::nominal_matrices(p);
    let baseline = FoldedBaseline::build(p, &spec.baseline)?;
    let n = baseline.dim();

    // output rows: current cycle reads the mid-span tension, previous cycle
    // the entering-span tension, both converted from rates to angle sums
    let mut c_now = DVector::zeros(n);
    c_now[1] = (p.speed_ref_down / p.ae()) * (p.radius_up / p.speed_ref_up);
    let mut c_prev = DVector::zeros(n);
    c_prev[0] = -p.radius_up / p.ae();

    let mut a_step = Vec::with_capacity(n_bins);
    let mut b_phi = Vec::with_capacity(n_bins);
    let mut b_dist = Vec::with_capacity(n_bins);
    let mut phi = Vec::with_capacity(n_bins);
    let mut u_dist = Vec::with_capacity(n_bins);

    for k in 0..n_bins {
        let theta = (k as f64 + 0.5) * dtheta;
        let r_up = plant::effective_radius(p, theta);
        if r_up <= 0.0 {
            return Err(Error::NonPositiveRadius { theta });
        }

        // eccentricity enters the upstream torque-balance row only
        let mut a5 = a5_nom.clone();
        a5[(3, 0)] = -r_up * r_up / p.inertia_up;
        a5[(3, 1)] = r_up * r_up / p.inertia_up;
        let mut b5 = DMatrix::zeros(5, 2);
        b5[(3, 0)] = p.gear_up * r_up / p.inertia_up;
        b5[(4, 1)] = p.gear_down * p.radius_down / p.inertia_down;

        let b_up = b5.column(0).into_owned();
        let b_learn = match stilc.channel {
            StilcChannel::Upstream => b5.column(0).into_owned(),
            StilcChannel::Downstream => b5.column(1).into_owned(),
            StilcChannel::Both => b5.column(0) + b5.column(1),
        };

        let (a_cl, b_phi_cl, b_dist_cl) = baseline.close(&a5, &b5, &c2, &b_learn, &b_up);
        if a_cl
            .complex_eigenvalues()
            .iter()
            .any(|ev| ev.re > STABILITY_MARGIN)
        {
            return Err(Error::UnstablePreset { bin: k });
        }

        let (ad, bd_phi, bd_dist) = zoh_step(&a_cl, &b_phi_cl, &b_dist_cl, dtau);
        a_step.push(ad);
        b_phi.push(bd_phi);
        b_dist.push(bd_dist);
        phi.push(basis.value_at(theta));
        u_dist.push(plant::input_disturbance(p, theta)?);
    }

    Ok(LtvProfile {
        dtheta,
        dtau,
        a_step,
        b_phi,
        b_dist,
        phi,
        u_dist,
        c_now,
        c_prev,
    })
}

/// Feedback baseline folded into state-space form, ready to close around
/// the per-bin plant matrices.
enum FoldedBaseline {
    Open,
    Pid {
        m: DMatrix<f64>,
        kp: DMatrix<f64>,
        ki: DMatrix<f64>,
        kd: DMatrix<f64>,
    },
    Lqr {
        kx: DMatrix<f64>,
        kz: DMatrix<f64>,
    },
}

impl FoldedBaseline {
    fn build(p: &SystemParams, baseline: &BaselineSpec) -> Result<Self> {
        Ok(match baseline {
            BaselineSpec::OpenLoop => Self::Open,
            BaselineSpec::Pid { up, down } => {
                // measurements stack as [T_up, V_up, T_mid, V_down]
                let mut m = DMatrix::zeros(4, 5);
                m[(0, 0)] = 1.0;
                m[(1, 3)] = 1.0;
                m[(2, 1)] = 1.0;
                m[(3, 4)] = 1.0;
                let pack = |sel: fn(&PidGains) -> [f64; 2]| {
                    let (u, d) = (sel(up), sel(down));
                    DMatrix::from_row_slice(
                        2,
                        4,
                        &[u[0], u[1], 0.0, 0.0, 0.0, 0.0, d[0], d[1]],
                    )
                };
                Self::Pid {
                    m,
                    kp: pack(|g| g.kp),
                    ki: pack(|g| g.ki),
                    kd: pack(|g| g.kd),
                }
            }
            BaselineSpec::Lqr(w) => {
                let k = lqr::design_gain(p, w)?;
                Self::Lqr {
                    kx: k.columns(0, 5).into_owned(),
                    kz: k.columns(5, 2).into_owned(),
                }
            }
        })
    }

    fn dim(&self) -> usize {
        match self {
            Self::Open => 5,
            Self::Pid { .. } => 9,
            Self::Lqr { .. } => 7,
        }
    }

    /// Closes the loop around the bin's plant matrices. Returns the
    /// closed-loop state matrix and the two input vectors lifted to the
    /// closed-loop state dimension.
    fn close(
        &self,
        a5: &DMatrix<f64>,
        b5: &DMatrix<f64>,
        c2: &DMatrix<f64>,
        b_learn: &DVector<f64>,
        b_up: &DVector<f64>,
    ) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
        match self {
            Self::Open => (a5.clone(), b_learn.clone(), b_up.clone()),
            Self::Pid { m, kp, ki, kd } => {
                // derivative action resolved algebraically:
                // ẋ = A x + B(K_P m + K_I q + K_D ṁ) + w  with m = M x
                // (I − B K_D M) ẋ = (A + B K_P M) x + B K_I q + w
                let s = (DMatrix::identity(5, 5) - b5 * kd * m)
                    .try_inverse()
                    .expect("derivative feedback keeps unit diagonal dominance");
                let mut a_cl = DMatrix::zeros(9, 9);
                a_cl.view_mut((0, 0), (5, 5)).copy_from(&(&s * (a5 + b5 * kp * m)));
                a_cl.view_mut((0, 5), (5, 4)).copy_from(&(&s * b5 * ki));
                a_cl.view_mut((5, 0), (4, 5)).copy_from(m);
                let lift = |b: &DVector<f64>| {
                    let mut v = DVector::zeros(9);
                    v.rows_mut(0, 5).copy_from(&(&s * b));
                    v
                };
                (a_cl, lift(b_learn), lift(b_up))
            }
            Self::Lqr { kx, kz } => {
                let mut a_cl = DMatrix::zeros(7, 7);
                a_cl.view_mut((0, 0), (5, 5)).copy_from(&(a5 - b5 * kx));
                a_cl.view_mut((0, 5), (5, 2)).copy_from(&(-(b5 * kz)));
                a_cl.view_mut((5, 0), (2, 5)).copy_from(&(-c2));
                let lift = |b: &DVector<f64>| {
                    let mut v = DVector::zeros(7);
                    v.rows_mut(0, 5).copy_from(b);
                    v
                };
                (a_cl, lift(b_learn), lift(b_up))
            }
        }
    }
}

/// Exact zero-order-hold transition over `dtau` for both input vectors,
/// via one augmented matrix exponential.
fn zoh_step(
    a: &DMatrix<f64>,
    b1: &DVector<f64>,
    b2: &DVector<f64>,
    dtau: f64,
) -> (DMatrix<f64>, DVector<f64>, DVector<f64>) {
    let n = a.nrows();
    let mut big = DMatrix::zeros(n + 2, n + 2);
    big.view_mut((0, 0), (n, n)).copy_from(&(a * dtau));
    big.view_mut((0, n), (n, 1)).copy_from(&(b1 * dtau));
    big.view_mut((0, n + 1), (n, 1)).copy_from(&(b2 * dtau));
    let e = big.exp();
    (
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, 1)).column(0).into_owned(),
        e.view((0, n + 1), (n, 1)).column(0).into_owned(),
    )
}

/// Runs the cycle sensitivity recursions
/// `G(k+1) = A(k)G(k)`, `H(k+1) = A(k)H(k) + Bφ(k)·φ(k)`,
/// `H_d(k+1) = A(k)H_d(k) + Bd(k)·u_d(k)` from `G(0)=I`, `H(0)=H_d(0)=0`.
pub fn run_recursions(profile: &LtvProfile) -> Recursions {
    let n = profile.dim();
    let nb = profile.n_bins();
    let mut g = Vec::with_capacity(nb + 1);
    let mut h = Vec::with_capacity(nb + 1);
    let mut h_d = Vec::with_capacity(nb + 1);
    g.push(DMatrix::identity(n, n));
    h.push(DVector::zeros(n));
    h_d.push(DVector::zeros(n));
    for k in 0..nb {
        let a = &profile.a_step[k];
        g.push(a * &g[k]);
        h.push(a * &h[k] + &profile.b_phi[k] * profile.phi[k]);
        h_d.push(a * &h_d[k] + &profile.b_dist[k] * profile.u_dist[k]);
    }
    Recursions { g, h, h_d }
}

/// The two scalars that govern the cycle-to-cycle recurrence, plus the
/// gain-independent sensitivities they were built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaCoefficients {
    pub omega1: f64,
    pub omega2: f64,
    /// Current-cycle output response to a unit learned amplitude.
    pub self_sensitivity: f64,
    /// Combined current-plus-delayed output response to a unit amplitude.
    pub total_sensitivity: f64,
    /// Cycle output with zero amplitude: disturbance plus any start-state
    /// contribution.
    pub forcing: f64,
}

/// Angle-weighted output sums over one cycle. `x0` adds the contribution
/// of a cycle-start state assumed to repeat from cycle to cycle; without
/// it the cycle is taken to start at the reference point.
pub fn compute_omegas(
    profile: &LtvProfile,
    rec: &Recursions,
    learning_gain: f64,
    x0: Option<&DVector<f64>>,
) -> OmegaCoefficients {
    let nb = profile.n_bins();
    let c_both = &profile.c_now + &profile.c_prev;
    let mut self_sum = 0.0;
    let mut total_sum = 0.0;
    let mut forcing = 0.0;
    for k in 1..=nb {
        self_sum += profile.c_now.dot(&rec.h[k]);
        total_sum += c_both.dot(&rec.h[k]);
        forcing += c_both.dot(&rec.h_d[k]);
        if let Some(x0) = x0 {
            forcing += c_both.dot(&(&rec.g[k] * x0));
        }
    }
    let self_sensitivity = profile.dtheta * self_sum;
    let total_sensitivity = profile.dtheta * total_sum;
    OmegaCoefficients {
        omega1: learning_gain * self_sensitivity,
        omega2: learning_gain * total_sensitivity,
        self_sensitivity,
        total_sensitivity,
        forcing: profile.dtheta * forcing,
    }
}

/// Roots of `λ² − (Ω₁+1)λ + (Ω₁−Ω₂) = 0`, the characteristic equation of
/// the cycle recurrence. Ordered by descending modulus; a complex pair
/// puts the positive imaginary part first.
pub fn characteristic_roots(omega1: f64, omega2: f64) -> (Complex64, Complex64) {
    recurrence_roots(omega1 + 1.0, omega2 - omega1)
}

/// Roots of `λ² − αλ − β = 0` for the recurrence `E_{j+1} = αE_j + βE_{j−1}`.
pub fn recurrence_roots(alpha: f64, beta: f64) -> (Complex64, Complex64) {
    let disc = alpha * alpha + 4.0 * beta;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let r1 = Complex64::new((alpha + sq) / 2.0, 0.0);
        let r2 = Complex64::new((alpha - sq) / 2.0, 0.0);
        if r1.norm() >= r2.norm() {
            (r1, r2)
        } else {
            (r2, r1)
        }
    } else {
        let im = (-disc).sqrt() / 2.0;
        (
            Complex64::new(alpha / 2.0, im),
            Complex64::new(alpha / 2.0, -im),
        )
    }
}

/// Predicted cycle-domain behavior of the learning loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Both characteristic roots strictly inside the unit circle.
    Converges,
    /// A root within numerical distance of the unit circle.
    Marginal,
    /// A root strictly outside the unit circle.
    Diverges,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Converges => "converges",
            Verdict::Marginal => "marginal",
            Verdict::Diverges => "diverges",
        })
    }
}

pub fn convergence_verdict(omega1: f64, omega2: f64) -> Verdict {
    let (l1, l2) = characteristic_roots(omega1, omega2);
    let m = l1.norm().max(l2.norm());
    if (l1.norm() - 1.0).abs() < MARGINAL_BAND || (l2.norm() - 1.0).abs() < MARGINAL_BAND {
        Verdict::Marginal
    } else if m < 1.0 {
        Verdict::Converges
    } else {
        Verdict::Diverges
    }
}

/// Closed-form convergence region in the (Ω₁, Ω₂) plane, equivalent to
/// both characteristic roots lying strictly inside the unit circle.
///
/// Real-root half (discriminant ≥ 0): the quadratic must be positive at
/// ±1 and centered inside, giving `Ω₂ < 0`, `2Ω₁ − Ω₂ + 2 > 0` and
/// `−3 < Ω₁ < 1`. Complex half: the squared modulus is the constant term,
/// so `Ω₁ − Ω₂ < 1`.
pub fn region_converges(omega1: f64, omega2: f64) -> bool {
    let disc = (omega1 - 1.0) * (omega1 - 1.0) + 4.0 * omega2;
    if disc >= 0.0 {
        omega2 < 0.0 && 2.0 * omega1 - omega2 + 2.0 > 0.0 && omega1 > -3.0 && omega1 < 1.0
    } else {
        omega1 - omega2 < 1.0
    }
}

/// Learning gain that puts the recurrence exactly at critical damping
/// (vanishing discriminant), from the gain-independent sensitivities:
/// with `a` the self part and `b` the total part,
/// `a²𝓛² + (4b − 2a)𝓛 + 1 = 0`; of the real solutions the one with the
/// smaller magnitude is returned.
pub fn critical_gain_from_sensitivities(self_s: f64, total_s: f64) -> Result<f64> {
    let a = self_s;
    let c1 = 4.0 * total_s - 2.0 * a;
    if a.abs() <= 1e-12 * total_s.abs() {
        if c1.abs() < 1e-300 {
            return Err(Error::NoCriticalGain);
        }
        return Ok(-1.0 / c1);
    }
    let c2 = a * a;
    let disc = c1 * c1 - 4.0 * c2;
    if disc < 0.0 {
        return Err(Error::NoCriticalGain);
    }
    // numerically stable quadratic: avoid cancellation in the small root
    let q = -(c1 + c1.signum() * disc.sqrt()) / 2.0;
    if q == 0.0 {
        return Err(Error::NoCriticalGain);
    }
    let r1 = q / c2;
    let r2 = 1.0 / q;
    Ok(if r1.abs() <= r2.abs() { r1 } else { r2 })
}

/// Critical learning gain for an analyzed loop.
pub fn critical_gain(profile: &LtvProfile, rec: &Recursions) -> Result<f64> {
    let om = compute_omegas(profile, rec, 1.0, None);
    critical_gain_from_sensitivities(om.self_sensitivity, om.total_sensitivity)
}

/// Whether the learned basis couples into the cycle output at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Net angle-weighted coupling of a unit amplitude into the output.
    pub coupling: f64,
    /// Magnitude scale of the per-bin couplings, for the relative test.
    pub scale: f64,
}

/// A loop is compensable only if the basis produces a nonzero net output
/// over a cycle; exact per-bin cancellation leaves the learning blind.
pub fn compensation_feasibility(profile: &LtvProfile, rec: &Recursions) -> Feasibility {
    let nb = profile.n_bins();
    let c_both = &profile.c_now + &profile.c_prev;
    let mut net = 0.0;
    let mut scale = 0.0;
    for k in 1..=nb {
        let term = c_both.dot(&rec.h[k]);
        net += term;
        scale += term.abs();
    }
    let coupling = profile.dtheta * net;
    let scale = profile.dtheta * scale;
    Feasibility {
        feasible: coupling.abs() > 1e-12 * scale,
        coupling,
        scale,
    }
}

/// Closed-form solution of `E_{j+1} = (Ω₁+1)E_j − (Ω₁−Ω₂)E_{j−1}` fixed
/// by the first two values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RecurrenceClosedForm {
    Distinct {
        l1: Complex64,
        l2: Complex64,
        xi1: Complex64,
        xi2: Complex64,
    },
    Repeated {
        l0: Complex64,
        xi1: Complex64,
        xi2: Complex64,
    },
    /// Both roots at zero: the sequence is `e0, e1, 0, 0, …`.
    DoubleZero { e0: f64, e1: f64 },
}

pub fn recurrence_closed_form(omega1: f64, omega2: f64, e0: f64, e1: f64) -> RecurrenceClosedForm {
    let (l1, l2) = characteristic_roots(omega1, omega2);
    let e0c = Complex64::new(e0, 0.0);
    let e1c = Complex64::new(e1, 0.0);
    if (l1 - l2).norm() < 1e-10 * l1.norm().max(1.0) {
        let l0 = (l1 + l2) / 2.0;
        if l0.norm() < 1e-150 {
            return RecurrenceClosedForm::DoubleZero { e0, e1 };
        }
        let xi1 = e0c;
        let xi2 = e1c / l0 - e0c;
        RecurrenceClosedForm::Repeated { l0, xi1, xi2 }
    } else {
        let xi2 = (e1c - l1 * e0c) / (l2 - l1);
        let xi1 = e0c - xi2;
        RecurrenceClosedForm::Distinct { l1, l2, xi1, xi2 }
    }
}

impl RecurrenceClosedForm {
    pub fn eval(&self, j: usize) -> f64 {
        match self {
            Self::Distinct { l1, l2, xi1, xi2 } => {
                (xi1 * l1.powu(j as u32) + xi2 * l2.powu(j as u32)).re
            }
            Self::Repeated { l0, xi1, xi2 } => {
                ((xi1 + xi2 * j as f64) * l0.powu(j as u32)).re
            }
            Self::DoubleZero { e0, e1 } => match j {
                0 => *e0,
                1 => *e1,
                _ => 0.0,
            },
        }
    }
}

/// Directly iterates `E_{j+1} = (Ω₁+1)E_j + (Ω₂−Ω₁)E_{j−1}`.
pub fn iterate_recurrence(omega1: f64, omega2: f64, e0: f64, e1: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    if len >= 1 {
        out.push(e0);
    }
    if len >= 2 {
        out.push(e1);
    }
    for j in 2..len {
        let next = (omega1 + 1.0) * out[j - 1] + (omega2 - omega1) * out[j - 2];
        out.push(next);
    }
    out
}

/// Least-squares fit of `E_{j+1} = αE_j + βE_{j−1}` to a measured series.
/// Needs at least six samples and two independent modes; a constant,
/// purely geometric or identically zero series is rejected as degenerate.
pub fn estimate_recurrence_coefficients(series: &[f64]) -> Result<(f64, f64)> {
    if series.len() < 6 {
        return Err(Error::DegenerateSeries {
            reason: "needs at least six samples",
        });
    }
    let (mut s11, mut s12, mut s22, mut t1, mut t2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 1..series.len() - 1 {
        let (prev, cur, next) = (series[j - 1], series[j], series[j + 1]);
        s11 += cur * cur;
        s12 += cur * prev;
        s22 += prev * prev;
        t1 += cur * next;
        t2 += prev * next;
    }
    if s11 == 0.0 && s22 == 0.0 {
        return Err(Error::DegenerateSeries {
            reason: "series is identically zero",
        });
    }
    let det = s11 * s22 - s12 * s12;
    if det <= 1e-12 * s11 * s22 {
        return Err(Error::DegenerateSeries {
            reason: "series excites only one mode",
        });
    }
    let alpha = (t1 * s22 - t2 * s12) / det;
    let beta = (s11 * t2 - s12 * t1) / det;
    Ok((alpha, beta))
}

/// Steps the discretized model through one cycle from `x0` with learned
/// amplitude `xi`, returning the N+1 states along the cycle.
pub fn simulate_profile(profile: &LtvProfile, x0: &DVector<f64>, xi: f64) -> Vec<DVector<f64>> {
    let nb = profile.n_bins();
    let mut states = Vec::with_capacity(nb + 1);
    states.push(x0.clone());
    for k in 0..nb {
        let next = &profile.a_step[k] * &states[k]
            + &profile.b_phi[k] * (xi * profile.phi[k])
            + &profile.b_dist[k] * profile.u_dist[k];
        states.push(next);
    }
    states
}

/// Angle-weighted cycle output: the current cycle read through the
/// mid-span row plus the previous cycle read through the delayed row.
pub fn terminal_output(profile: &LtvProfile, now: &[DVector<f64>], prev: &[DVector<f64>]) -> f64 {
    let nb = profile.n_bins();
    assert_eq!(now.len(), nb + 1);
    assert_eq!(prev.len(), nb + 1);
    let mut sum = 0.0;
    for k in 1..=nb {
        sum += profile.c_now.dot(&now[k]) + profile.c_prev.dot(&prev[k]);
    }
    profile.dtheta * sum
}
