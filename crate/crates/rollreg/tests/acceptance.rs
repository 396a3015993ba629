//! Acceptance suite: one check per qualitative contract of the library,
//! printed as a PASS/FAIL line each. Run with `--nocapture` to see every
//! line; any failure also reproduces the full table in the panic message.

use std::f64::consts::TAU;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rollreg::analysis::{
    characteristic_roots, compute_omegas, convergence_verdict, critical_gain,
    discretize_closed_loop, estimate_recurrence_coefficients, recurrence_closed_form,
    recurrence_roots, run_recursions, simulate_profile, LtvProfile, Verdict,
};
use rollreg::lqr::{augmented_matrices, is_hurwitz, riccati_residual, solve_riccati, LqrWeights};
use rollreg::{run_experiment, ControllerSpec, SimConfig, SystemParams};

/// Terminal-error series for `preset` at eccentricity `e` over `iterations`
/// cycles, with optional learning-gain override.
fn series(preset: &str, e: f64, iterations: usize, gain: Option<f64>) -> Vec<f64> {
    let mut p = SystemParams::default();
    p.eccentricity = e;
    let mut spec = ControllerSpec::preset(preset).expect("known preset");
    if let Some(g) = gain {
        spec.stilc.as_mut().expect("learning preset").learning_gain = g;
    }
    let cfg = SimConfig {
        iterations,
        ..SimConfig::default()
    };
    run_experiment(&p, &cfg, &spec)
        .expect("simulation completes")
        .records
        .iter()
        .map(|r| r.terminal_re)
        .collect()
}

fn peak(series: &[f64]) -> f64 {
    series.iter().fold(0.0f64, |m, e| m.max(e.abs()))
}

/// First 1-based index from which every iterate stays below 1% of the peak.
fn settle_index(series: &[f64]) -> Option<usize> {
    let threshold = 0.01 * peak(series);
    (0..series.len())
        .find(|&i| series[i..].iter().all(|e| e.abs() < threshold))
        .map(|i| i + 1)
}

/// Plateau check: the last iterate moves by less than 1e-3 of itself from
/// cycle 30 on, and sits above 5% of the series peak.
fn plateau(series: &[f64]) -> Result<f64, String> {
    let last = *series.last().expect("nonempty");
    if last == 0.0 {
        return Err("plateau is exactly zero".to_string());
    }
    for j in 30..series.len() {
        let step = (series[j] - series[j - 1]).abs();
        if step >= 1e-3 * last.abs() {
            return Err(format!(
                "still moving at cycle {}: step {step:e} vs plateau {last:e}",
                j + 1
            ));
        }
    }
    if last.abs() <= 0.05 * peak(series) {
        return Err(format!(
            "plateau {last:e} is below 5% of the peak {:e}",
            peak(series)
        ));
    }
    Ok(last)
}

fn check_equilibrium_null() -> Result<String, String> {
    let t0 = Instant::now();
    let es = series("open-loop", 0.0, 20, None);
    let elapsed = t0.elapsed().as_secs_f64();
    let worst = peak(&es);
    if worst >= 1e-9 {
        return Err(format!("registration drifts to {worst:e} m with no eccentricity"));
    }
    if elapsed >= 10.0 {
        return Err(format!("20 cycles took {elapsed:.1} s"));
    }
    Ok(format!("max |E| = {worst:e} m in {elapsed:.2} s"))
}

fn check_open_loop_accumulation() -> Result<String, String> {
    let es = series("open-loop", 1e-3, 30, None);
    for j in 1..10 {
        if es[j].abs() <= es[j - 1].abs() {
            return Err(format!(
                "|E_{}| = {:e} did not grow past |E_{}| = {:e}",
                j + 1,
                es[j].abs(),
                j,
                es[j - 1].abs()
            ));
        }
    }
    Ok(format!("|E_1| = {:e} m grows to |E_10| = {:e} m", es[0].abs(), es[9].abs()))
}

fn check_pid_plateaus(runs: &[(String, Vec<f64>)]) -> Result<String, String> {
    let mut plateaus = Vec::new();
    for (name, es) in runs {
        let p = plateau(es).map_err(|e| format!("{name}: {e}"))?;
        plateaus.push(p.abs());
    }
    let (a, b, c) = (plateaus[0], plateaus[1], plateaus[2]);
    if !(c < b && b <= a) {
        return Err(format!("plateaus not ordered C < B <= A: {a:e}, {b:e}, {c:e}"));
    }
    Ok(format!("plateaus A/B/C = {a:e}/{b:e}/{c:e} m"))
}

fn check_learning_reaches_zero(runs: &[(String, Vec<f64>)]) -> Result<String, String> {
    let mut settles = Vec::new();
    for (name, es) in runs {
        match settle_index(es) {
            Some(j) if j <= 20 => settles.push(j),
            Some(j) => return Err(format!("{name} settles only at cycle {j}")),
            None => return Err(format!("{name} never stays below 1% of its peak")),
        }
    }
    Ok(format!("below 1% of peak from cycles {settles:?}"))
}

fn check_gain_sweep(runs: &[(f64, Vec<f64>)]) -> Result<String, String> {
    let diverging = &runs[0].1;
    if diverging[29].abs() <= diverging[4].abs() {
        return Err(format!(
            "gain {} did not diverge: |E_30| = {:e} <= |E_5| = {:e}",
            runs[0].0,
            diverging[29].abs(),
            diverging[4].abs()
        ));
    }

    let mut overshoots = Vec::new();
    for (gain, es) in &runs[1..] {
        let settle = settle_index(es)
            .ok_or_else(|| format!("gain {gain} never stays below 1% of its peak"))?;
        if settle > 40 {
            return Err(format!("gain {gain} settles only at cycle {settle}"));
        }
        // Overshoot: largest magnitude after the series first changes sign.
        let first = es[0];
        let flip = (1..es.len()).find(|&i| es[i] != 0.0 && es[i].signum() != first.signum());
        let overshoot = flip
            .map(|i| es[i..].iter().fold(0.0f64, |m, e| m.max(e.abs())))
            .unwrap_or(0.0);
        overshoots.push(overshoot);
    }
    if !(overshoots[2] > overshoots[1] && overshoots[1] > overshoots[0]) {
        return Err(format!("overshoots not ordered 7000 > 5000 > 3000: {overshoots:?}"));
    }

    // The smallest converging gain decays monotonically from its peak down
    // to the 1% reporting band.
    let es = &runs[1].1;
    let m = (0..es.len())
        .max_by(|&i, &j| es[i].abs().total_cmp(&es[j].abs()))
        .expect("nonempty");
    let floor = 0.01 * peak(es);
    for j in m..es.len() - 1 {
        if es[j + 1].abs() < floor {
            break;
        }
        if es[j + 1].abs() > es[j].abs() {
            return Err(format!(
                "gain {} rebounds at cycle {}: {:e} -> {:e}",
                runs[1].0,
                j + 2,
                es[j].abs(),
                es[j + 1].abs()
            ));
        }
    }
    Ok(format!("overshoots {:e}/{:e}/{:e} m for 3000/5000/7000", overshoots[0], overshoots[1], overshoots[2]))
}

fn check_critical_gain(profile: &LtvProfile) -> Result<String, String> {
    let rec = run_recursions(profile);
    let g = critical_gain(profile, &rec).map_err(|e| e.to_string())?;
    if !(3500.0..=6500.0).contains(&g) {
        return Err(format!("critical gain {g:.1} outside [3500, 6500]"));
    }
    Ok(format!("critical gain = {g:.1}"))
}

fn check_lqr_parity(lqr_series: &[f64]) -> Result<String, String> {
    let p = SystemParams::default();
    let w = LqrWeights::default();
    let (a, b) = augmented_matrices(&p);
    let q = DMatrix::from_diagonal(&DVector::from_row_slice(&w.q_diag));
    let r = DMatrix::from_diagonal(&DVector::from_row_slice(&w.r_diag));
    let sol = solve_riccati(&a, &b, &q, &r).map_err(|e| e.to_string())?;
    let residual = riccati_residual(&a, &b, &q, &r, &sol);
    if residual >= 1e-8 {
        return Err(format!("Riccati residual {residual:e}"));
    }
    let r_inv = r.clone().try_inverse().expect("diagonal");
    let k = r_inv * b.transpose() * &sol;
    if !is_hurwitz(&(&a - &b * &k)) {
        return Err("closed loop is not Hurwitz".to_string());
    }

    let lqr_plateau = plateau(lqr_series).map_err(|e| format!("lqr: {e}"))?;

    let es = series("stilc-lqr", 1e-3, 80, None);
    let settle = settle_index(&es)
        .ok_or_else(|| "stilc-lqr never stays below 1% of its peak".to_string())?;
    Ok(format!(
        "residual {residual:e}; lqr plateau {lqr_plateau:e} m; learning settles at cycle {settle}"
    ))
}

fn check_analysis_matches_simulation(
    profile: &LtvProfile,
    runs: &[(f64, Vec<f64>)],
) -> Result<String, String> {
    let rec = run_recursions(profile);
    let mut moduli = Vec::new();
    for (gain, es) in runs {
        let om = compute_omegas(profile, &rec, *gain, None);
        let verdict = convergence_verdict(om.omega1, om.omega2);
        let simulated_converges = settle_index(es).is_some_and(|j| j <= 40);
        let expected = if simulated_converges {
            Verdict::Converges
        } else {
            Verdict::Diverges
        };
        if verdict != expected {
            return Err(format!("gain {gain}: verdict {verdict} but simulation says {expected}"));
        }

        let (alpha, beta) = estimate_recurrence_coefficients(es).map_err(|e| e.to_string())?;
        let fitted = recurrence_roots(alpha, beta).0.norm();
        let analytic = characteristic_roots(om.omega1, om.omega2).0.norm();
        if (fitted < 1.0) != (analytic < 1.0) {
            return Err(format!(
                "gain {gain}: fitted |root| {fitted:.4} and analytic |root| {analytic:.4} straddle 1"
            ));
        }
        moduli.push((*gain, fitted, analytic));
    }
    let summary: Vec<String> = moduli
        .iter()
        .map(|(g, f, a)| format!("{g}: fit {f:.3} / analytic {a:.3}"))
        .collect();
    Ok(summary.join("; "))
}

fn check_recurrence_closed_form() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(20260818);
    let mut tried = 0usize;
    let mut accepted = 0usize;
    while accepted < 200 {
        tried += 1;
        if tried > 20000 {
            return Err("sampling could not find 200 stable pairs".to_string());
        }
        let omega1 = rng.gen_range(-2.5..0.95);
        let omega2 = rng.gen_range(-1.5..0.5);
        let (l1, _) = characteristic_roots(omega1, omega2);
        if l1.norm() >= 0.99 {
            continue;
        }
        accepted += 1;
        let e0 = rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let e1 = rng.gen_range(0.1..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let closed = recurrence_closed_form(omega1, omega2, e0, e1);
        let direct = rollreg::analysis::iterate_recurrence(omega1, omega2, e0, e1, 51);
        let scale = direct.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        for (j, &d) in direct.iter().enumerate() {
            let c = closed.eval(j);
            if (c - d).abs() > 1e-10 * scale {
                return Err(format!(
                    "pair ({omega1:.3}, {omega2:.3}) diverges from closed form at j={j}: {c:e} vs {d:e}"
                ));
            }
        }
    }
    Ok(format!("200 stable pairs match over 50 cycles ({tried} sampled)"))
}

/// Random one-cycle profile with contractive steps, `n_bins` bins, state
/// dimension 3.
fn random_profile(rng: &mut ChaCha8Rng, n_bins: usize) -> LtvProfile {
    let dim = 3;
    fn mat(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
        let m = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let scale = 0.9 / m.norm().max(1e-6);
        m * scale
    }
    fn vecr(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
        DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))
    }
    let mut a_step = Vec::with_capacity(n_bins);
    let mut b_phi = Vec::with_capacity(n_bins);
    let mut b_dist = Vec::with_capacity(n_bins);
    let mut phi = Vec::with_capacity(n_bins);
    let mut u_dist = Vec::with_capacity(n_bins);
    for _ in 0..n_bins {
        a_step.push(mat(rng, dim));
        b_phi.push(vecr(rng, dim));
        b_dist.push(vecr(rng, dim));
        phi.push(rng.gen_range(-1.0..1.0));
        u_dist.push(rng.gen_range(-1.0..1.0));
    }
    LtvProfile {
        dtheta: TAU / n_bins as f64,
        dtau: 0.01,
        a_step,
        b_phi,
        b_dist,
        phi,
        u_dist,
        c_now: vecr(rng, dim),
        c_prev: vecr(rng, dim),
    }
}

fn check_transition_reconstruction() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..50 {
        let profile = random_profile(&mut rng, 32);
        let rec = run_recursions(&profile);
        let x0 = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let xi = rng.gen_range(-2.0..2.0);
        let stepped = simulate_profile(&profile, &x0, xi);
        for k in 0..=32 {
            let rebuilt = &rec.g[k] * &x0 + &rec.h[k] * xi + &rec.h_d[k];
            let err = (&rebuilt - &stepped[k]).norm();
            let scale = stepped[k].norm().max(1.0);
            if err > 1e-12 * scale {
                return Err(format!(
                    "profile {case}: reconstruction drifts at bin {k} by {err:e} (scale {scale:e})"
                ));
            }
        }
    }
    Ok("50 random profiles rebuild exactly over 32 bins".to_string())
}

#[test]
fn acceptance() {
    let t0 = Instant::now();

    let pid_runs: Vec<(String, Vec<f64>)> = ["pid-a", "pid-b", "pid-c"]
        .iter()
        .map(|name| (name.to_string(), series(name, 1e-3, 40, None)))
        .collect();
    let stilc_runs: Vec<(String, Vec<f64>)> = ["stilc-pid-a", "stilc-pid-b", "stilc-pid-c"]
        .iter()
        .map(|name| (name.to_string(), series(name, 1e-3, 40, None)))
        .collect();
    let sweep_runs: Vec<(f64, Vec<f64>)> = [-100.0, 3000.0, 5000.0, 7000.0]
        .iter()
        .map(|&g| (g, series("stilc-pid", 1e-3, 40, Some(g))))
        .collect();
    let lqr_series = series("lqr", 1e-3, 40, None);
    let profile = discretize_closed_loop(
        &SystemParams::default(),
        &ControllerSpec::preset("stilc-pid").expect("known preset"),
        360,
    )
    .expect("stabilizing preset");

    let checks: Vec<(&str, Result<String, String>)> = vec![
        ("01 equilibrium stays registered", check_equilibrium_null()),
        ("02 open-loop error accumulates", check_open_loop_accumulation()),
        ("03 pid settles to nonzero plateaus", check_pid_plateaus(&pid_runs)),
        ("04 learning drives the error to zero", check_learning_reaches_zero(&stilc_runs)),
        ("05 gain sweep shapes", check_gain_sweep(&sweep_runs)),
        ("06 critical gain bracket", check_critical_gain(&profile)),
        ("07 lqr parity", check_lqr_parity(&lqr_series)),
        (
            "08 analysis agrees with simulation",
            check_analysis_matches_simulation(&profile, &sweep_runs),
        ),
        ("09 recurrence closed form", check_recurrence_closed_form()),
        ("10 transition reconstruction", check_transition_reconstruction()),
    ];

    let mut lines = Vec::new();
    let mut failures = 0usize;
    for (name, outcome) in &checks {
        let line = match outcome {
            Ok(detail) => format!("criterion {name}: PASS ({detail})"),
            Err(detail) => {
                failures += 1;
                format!("criterion {name}: FAIL ({detail})")
            }
        };
        println!("{line}");
        lines.push(line);
    }

    let elapsed = t0.elapsed().as_secs_f64();
    let runtime_line = if elapsed < 300.0 {
        format!("criterion 11 suite runtime: PASS ({elapsed:.1} s)")
    } else {
        failures += 1;
        format!("criterion 11 suite runtime: FAIL ({elapsed:.1} s)")
    };
    println!("{runtime_line}");
    lines.push(runtime_line);

    assert!(failures == 0, "{failures} criteria failed:\n{}", lines.join("\n"));
}
