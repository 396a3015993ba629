//! State-feedback regulator design for the two-roller unit.
//!
//! The design works on the linearized perturbation model around the
//! reference point, augmented with integrators on the two measured span
//! tensions so the regulator rejects constant tension offsets. The Riccati
//! equation is solved by Newton iteration on Lyapunov equations, seeded
//! with a gain that is stabilizing by construction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Diagonal weights for the augmented regulator: five plant states
/// (three span tensions, two roller speeds) plus two tension integrators,
/// and the two torque inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqrWeights {
    pub q_diag: [f64; 7],
    pub r_diag: [f64; 2],
}

impl Default for LqrWeights {
    fn default() -> Self {
        Self {
            q_diag: [10.0, 10.0, 1.0, 1.0, 1.0, 100.0, 100.0],
            r_diag: [5.0, 5.0],
        }
    }
}

/// Linearized perturbation model `(A, B, C)` with state
/// `[tension_up, tension_mid, tension_down, speed_up, speed_down]`,
/// inputs `[torque_up, torque_down]` and measured outputs
/// `[tension_up, tension_mid]`.
pub fn nominal_matrices(p: &SystemParams) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let ae = p.ae();
    let mut a = DMatrix::zeros(5, 5);

    a[(0, 0)] = -p.speed_ref_up / p.span_up;
    a[(0, 3)] = (ae - p.tension_ref_up) / p.span_up;

    a[(1, 0)] = p.speed_ref_up / p.span_mid;
    a[(1, 1)] = -p.speed_ref_down / p.span_mid;
    a[(1, 3)] = (p.tension_ref_up - ae) / p.span_mid;
    a[(1, 4)] = (ae - p.tension_ref_mid) / p.span_mid;

    a[(2, 1)] = p.speed_ref_down / p.span_down;
    a[(2, 2)] = -p.speed_ref_down / p.span_down;
    a[(2, 4)] = (p.tension_ref_mid - ae) / p.span_down;

    a[(3, 0)] = -p.radius_up * p.radius_up / p.inertia_up;
    a[(3, 1)] = p.radius_up * p.radius_up / p.inertia_up;
    a[(3, 3)] = -p.friction_up / p.inertia_up;

    a[(4, 1)] = -p.radius_down * p.radius_down / p.inertia_down;
    a[(4, 2)] = p.radius_down * p.radius_down / p.inertia_down;
    a[(4, 4)] = -p.friction_down / p.inertia_down;

    let mut b = DMatrix::zeros(5, 2);
    b[(3, 0)] = p.gear_up * p.radius_up / p.inertia_up;
    b[(4, 1)] = p.gear_down * p.radius_down / p.inertia_down;

    let mut c = DMatrix::zeros(2, 5);
    c[(0, 0)] = 1.0;
    c[(1, 1)] = 1.0;

    (a, b, c)
}

/// Plant model with tension integrators appended:
/// `d/dt [x; z] = [[A, 0], [-C, 0]] [x; z] + [[B], [0]] u`.
pub fn augmented_matrices(p: &SystemParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let (a, b, c) = nominal_matrices(p);
    let mut aa = DMatrix::zeros(7, 7);
    aa.view_mut((0, 0), (5, 5)).copy_from(&a);
    aa.view_mut((5, 0), (2, 5)).copy_from(&(-c));
    let mut ba = DMatrix::zeros(7, 2);
    ba.view_mut((0, 0), (5, 2)).copy_from(&b);
    (aa, ba)
}

/// Solves `Aᵀ X + X A + Q = 0` for symmetric `X` by direct solve of the
/// vectorized system `(I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X) = vec(-Q)`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(q.shape(), (n, n));
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let op = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DVector::from_column_slice((-q).as_slice());
    let x = op.lu().solve(&rhs).ok_or(Error::NotStabilizable)?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Frobenius norm of `Aᵀ P + P A - P B R⁻¹ Bᵀ P + Q`.
pub fn riccati_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> f64 {
    let r_inv = r.clone().try_inverse().expect("input weight is invertible");
    (a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q).norm()
}

/// A gain `K` with `A - B K` Hurwitz, built from one Lyapunov solve:
/// shift `A` by `β` so every shifted eigenvalue has positive real part,
/// solve `(A+βI) W + W (A+βI)ᵀ = 2 B Bᵀ`, take `K = Bᵀ W⁻¹`. Then
/// `(A-BK) W + W (A-BK)ᵀ = -2βW`, so `W ≻ 0` is the Lyapunov certificate.
/// The shift is kept near the minimum workable value: over-shifting drives
/// `W` toward the rank-deficient `B Bᵀ / β`.
pub fn stabilizing_gain(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let max_abs_re = a
        .complex_eigenvalues()
        .iter()
        .map(|ev| ev.re.abs())
        .fold(0.0, f64::max);
    let beta = 1.0 + max_abs_re;
    let shifted = a + DMatrix::<f64>::identity(n, n) * beta;
    let rhs = b * b.transpose() * -2.0;
    let w = solve_lyapunov(&shifted.transpose(), &rhs)?;
    let w_inv = w.try_inverse().ok_or(Error::NotStabilizable)?;
    let k = b.transpose() * w_inv;
    if !is_hurwitz(&(a - b * &k)) {
        return Err(Error::NotStabilizable);
    }
    Ok(k)
}

/// All eigenvalues strictly in the open left half plane.
pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    m.complex_eigenvalues().iter().all(|ev| ev.re < 0.0)
}

/// Stabilizing solution of `Aᵀ P + P A - P B R⁻¹ Bᵀ P + Q = 0` by Newton
/// iteration: each step solves the Lyapunov equation of the current
/// closed loop and re-derives the gain from its solution.
pub fn solve_riccati(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    const MAX_ITERS: usize = 60;
    let r_inv = r.clone().try_inverse().ok_or(Error::InvalidParam {
        name: "r_diag",
        reason: "input weight must be invertible".into(),
    })?;
    let mut k = stabilizing_gain(a, b)?;
    let mut p_prev: Option<DMatrix<f64>> = None;
    for _ in 0..MAX_ITERS {
        let a_cl = a - b * &k;
        let q_cl = q + k.transpose() * r * &k;
        let p = solve_lyapunov(&a_cl, &q_cl)?;
        k = &r_inv * b.transpose() * &p;
        let done = p_prev
            .as_ref()
            .is_some_and(|prev| (&p - prev).norm() <= 1e-13 * p.norm().max(1.0));
        p_prev = Some(p);
        if done {
            let p = p_prev.as_ref().unwrap();
            let scale = 1.0 + p.norm() + q.norm();
            if riccati_residual(a, b, q, r, p) > 1e-10 * scale {
                return Err(Error::NoConvergence {
                    what: "riccati iteration",
                    iterations: MAX_ITERS,
                });
            }
            return Ok(p_prev.unwrap());
        }
    }
    Err(Error::NoConvergence {
        what: "riccati iteration",
        iterations: MAX_ITERS,
    })
}

/// Optimal feedback gain (2×7) for the tension-integrator regulator:
/// `u = -K [x; z]` with `ż = -C x`.
pub fn design_gain(p: &SystemParams, w: &LqrWeights) -> Result<DMatrix<f64>> {
    for (i, qv) in w.q_diag.iter().enumerate() {
        if !qv.is_finite() || *qv < 0.0 {
            return Err(Error::InvalidParam {
                name: "q_diag",
                reason: format!("entry {i} must be finite and non-negative, got {qv}"),
            });
        }
    }
    for (i, rv) in w.r_diag.iter().enumerate() {
        if !rv.is_finite() || *rv <= 0.0 {
            return Err(Error::InvalidParam {
                name: "r_diag",
                reason: format!("entry {i} must be finite and positive, got {rv}"),
            });
        }
    }
    let (aa, ba) = augmented_matrices(p);
    let q = DMatrix::from_diagonal(&DVector::from_column_slice(&w.q_diag));
    let r = DMatrix::from_diagonal(&DVector::from_column_slice(&w.r_diag));
    let sol = solve_riccati(&aa, &ba, &q, &r)?;
    let r_inv = r.try_inverse().expect("positive diagonal");
    let k = r_inv * ba.transpose() * sol;
    if !is_hurwitz(&(&aa - &ba * &k)) {
        return Err(Error::NotStabilizable);
    }
    Ok(k)
}
