//! Experiment harness: configures registration-error experiments from a TOML
//! file plus command-line overrides, runs them, and writes deterministic CSV
//! reports (optionally with SVG line charts).

mod config;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use clap::{Args, Parser, Subcommand};
use rollreg::analysis::{
    compensation_feasibility, compute_omegas, convergence_verdict, critical_gain,
    discretize_closed_loop, run_recursions, LtvProfile, Recursions, Verdict,
};
use rollreg::{run_experiment, ControllerSpec, Error, IterationRecord, StilcSpec, TraceRow};

use config::ExperimentConfig;

const EXIT_CONFIG: u8 = 2;
const EXIT_SIM: u8 = 3;
const EXIT_UNSTABLE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "rollreg",
    version,
    about = "Registration-error experiments on a two-roller printing unit: \
             simulation runs, learning-gain sweeps, and convergence reports"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Cmd,
}

/// Flags that override the config file; all accept scientific notation.
#[derive(Args)]
struct Overrides {
    /// Experiment description file (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Controller preset: open-loop, pid-a/b/c, lqr, stilc-pid[-a/b/c], stilc-lqr.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,
    /// Upstream-roller eccentricity in metres.
    #[arg(long, global = true, value_name = "METERS", allow_hyphen_values = true)]
    eccentricity: Option<f64>,
    /// Learning gain of the terminal update.
    #[arg(long, global = true, value_name = "VALUE", allow_hyphen_values = true)]
    learning_gain: Option<f64>,
    /// Basis bins per roller revolution.
    #[arg(long, global = true, value_name = "N")]
    basis_steps: Option<usize>,
    /// Learning cycles to simulate.
    #[arg(long, global = true, value_name = "N")]
    iterations: Option<usize>,
    /// Integrator step in seconds.
    #[arg(long, global = true, value_name = "SECONDS")]
    dt: Option<f64>,
    /// Output directory for reports.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write a line chart of the terminal error per iteration.
    #[arg(long, global = true)]
    svg: bool,
    /// Record the full state trace alongside the iteration summary.
    #[arg(long, global = true)]
    trace: bool,
    /// Worker threads for sweeps and comparisons.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(name) = &self.preset {
            cfg.controller.preset = name.clone();
        }
        if let Some(e) = self.eccentricity {
            cfg.system.eccentricity = e;
        }
        if let Some(g) = self.learning_gain {
            cfg.controller.learning_gain = Some(g);
        }
        if let Some(n) = self.basis_steps {
            cfg.controller.basis_steps = Some(n);
        }
        if let Some(n) = self.iterations {
            cfg.sim.iterations = n;
        }
        if let Some(dt) = self.dt {
            cfg.sim.time_step = dt;
        }
        if let Some(dir) = &self.out {
            cfg.output.dir = dir.clone();
        }
        if self.svg {
            cfg.output.svg = true;
        }
        if self.trace {
            cfg.sim.record_trace = true;
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write iterations.csv.
    Simulate,
    /// Re-run the experiment at each learning gain and write sweep.csv.
    SweepGain {
        /// Comma-separated learning gains.
        #[arg(
            long,
            value_name = "G1,G2,...",
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        gains: Vec<f64>,
    },
    /// Discretize the closed loop and write a convergence report.
    Analyze {
        /// Evaluate a whole gain range and write gain_grid.csv as well.
        #[arg(long, value_name = "START:END:COUNT", allow_hyphen_values = true)]
        gain_grid: Option<String>,
    },
    /// Run several presets on the same plant and write compare.csv.
    Compare {
        /// Comma-separated preset names (at least two).
        #[arg(long, value_name = "NAME,NAME,...", value_delimiter = ',', required = true)]
        scenarios: Vec<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.overrides.config {
        Some(path) => config::load(path).map_err(|m| fail(EXIT_CONFIG, m))?,
        None => ExperimentConfig::default(),
    };
    cli.overrides.apply(&mut cfg);

    cfg.system
        .validate()
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    cfg.sim
        .validate(&cfg.system)
        .map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
    let spec = cfg.controller.resolve().map_err(|m| fail(EXIT_CONFIG, m))?;
    fs::create_dir_all(&cfg.output.dir).map_err(|e| {
        fail(
            EXIT_CONFIG,
            format!("output.dir {}: {e}", cfg.output.dir.display()),
        )
    })?;
    let jobs = cli.overrides.jobs.unwrap_or(1).max(1);

    match &cli.command {
        Cmd::Simulate => cmd_simulate(&cfg, &spec),
        Cmd::SweepGain { gains } => cmd_sweep_gain(&cfg, &spec, gains, jobs),
        Cmd::Analyze { gain_grid } => cmd_analyze(&cfg, &spec, gain_grid.as_deref()),
        Cmd::Compare { scenarios } => cmd_compare(&cfg, scenarios, jobs),
    }
}

fn cmd_simulate(cfg: &ExperimentConfig, spec: &ControllerSpec) -> Result<(), Failure> {
    let outcome = run_experiment(&cfg.system, &cfg.sim, spec)
        .map_err(|e| fail(EXIT_SIM, e.to_string()))?;
    write_iterations(&cfg.output.dir.join("iterations.csv"), &outcome.records)?;
    if let Some(trace) = &outcome.trace {
        write_trace(&cfg.output.dir.join("trace.csv"), trace)?;
    }
    if cfg.output.svg {
        let series = vec![(
            cfg.controller.preset.clone(),
            outcome.records.iter().map(|r| r.terminal_re).collect(),
        )];
        write_file(
            &cfg.output.dir.join("plot.svg"),
            &svg::line_chart("terminal registration error (m)", &series),
        )?;
    }
    Ok(())
}

fn write_iterations(path: &Path, records: &[IterationRecord]) -> Result<(), Failure> {
    let mut text =
        String::from("iteration,terminal_re_m,terminal_time_s,max_abs_tension_N,max_abs_speed_mps,xi\n");
    for r in records {
        text.push_str(&format!(
            "{},{:e},{},{},{},{:e}\n",
            r.iteration, r.terminal_re, r.terminal_time, r.max_abs_tension, r.max_abs_speed, r.xi
        ));
    }
    write_file(path, &text)
}

fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), Failure> {
    let mut text = String::from(
        "time_s,tension_up_N,tension_mid_N,tension_down_N,speed_up_mps,speed_down_mps,re_m\n",
    );
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{:e}\n",
            r.time, r.tension_up, r.tension_mid, r.tension_down, r.speed_up, r.speed_down,
            r.reg_error
        ));
    }
    write_file(path, &text)
}

struct SweepRow {
    gain: f64,
    converged: bool,
    overshoot_ratio: f64,
    iterations_to_1pct: Option<usize>,
    series: Vec<f64>,
}

fn cmd_sweep_gain(
    cfg: &ExperimentConfig,
    base: &ControllerSpec,
    gains: &[f64],
    jobs: usize,
) -> Result<(), Failure> {
    if base.stilc.is_none() {
        return Err(fail(
            EXIT_CONFIG,
            format!(
                "controller.preset: `{}` has no learning stage to sweep",
                cfg.controller.preset
            ),
        ));
    }
    let results = parallel_map(gains, jobs, |&gain| -> Result<SweepRow, Error> {
        let mut spec = base.clone();
        spec.stilc.as_mut().expect("checked above").learning_gain = gain;
        let outcome = run_experiment(&cfg.system, &cfg.sim, &spec)?;
        let series: Vec<f64> = outcome.records.iter().map(|r| r.terminal_re).collect();
        Ok(summarize_sweep(gain, series))
    });

    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r.map_err(|e| fail(EXIT_SIM, e.to_string()))?);
    }

    let mut text = String::from("gain,converged,overshoot_ratio,iterations_to_1pct\n");
    for row in &rows {
        let to_1pct = row
            .iterations_to_1pct
            .map(|j| j.to_string())
            .unwrap_or_default();
        text.push_str(&format!(
            "{},{},{:e},{}\n",
            row.gain, row.converged, row.overshoot_ratio, to_1pct
        ));
    }
    write_file(&cfg.output.dir.join("sweep.csv"), &text)?;

    if cfg.output.svg {
        let series: Vec<(String, Vec<f64>)> = rows
            .iter()
            .map(|r| (format!("gain {}", r.gain), r.series.clone()))
            .collect();
        write_file(
            &cfg.output.dir.join("plot.svg"),
            &svg::line_chart("terminal registration error (m)", &series),
        )?;
    }
    Ok(())
}

/// Reduces one gain's error series to the sweep-report row. Convergence
/// means the last iterate sits below 1% of the series' peak magnitude;
/// the overshoot ratio compares the post-sign-change peak to the first
/// iterate.
fn summarize_sweep(gain: f64, series: Vec<f64>) -> SweepRow {
    let peak = series.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    if peak == 0.0 {
        return SweepRow {
            gain,
            converged: true,
            overshoot_ratio: 0.0,
            iterations_to_1pct: Some(1),
            series,
        };
    }
    let threshold = 0.01 * peak;
    let converged = series.last().is_some_and(|e| e.abs() < threshold);
    let iterations_to_1pct = (0..series.len())
        .find(|&i| series[i..].iter().all(|e| e.abs() < threshold))
        .map(|i| i + 1);
    let first = series[0];
    let flip = (1..series.len()).find(|&i| series[i] != 0.0 && series[i].signum() != first.signum());
    let overshoot_ratio = match flip {
        Some(i) if first != 0.0 => {
            series[i..].iter().fold(0.0f64, |m, e| m.max(e.abs())) / first.abs()
        }
        _ => 0.0,
    };
    SweepRow {
        gain,
        converged,
        overshoot_ratio,
        iterations_to_1pct,
        series,
    }
}

fn cmd_analyze(
    cfg: &ExperimentConfig,
    spec: &ControllerSpec,
    gain_grid: Option<&str>,
) -> Result<(), Failure> {
    let profile = discretize_closed_loop(&cfg.system, spec, cfg.analysis.bins).map_err(|e| {
        let code = match e {
            Error::UnstablePreset { .. } => EXIT_UNSTABLE,
            _ => EXIT_SIM,
        };
        fail(code, e.to_string())
    })?;
    let rec = run_recursions(&profile);
    let stilc = spec.stilc.unwrap_or_else(StilcSpec::default);
    write_file(
        &cfg.output.dir.join("analysis.txt"),
        &analysis_report(cfg, &profile, &rec, stilc.learning_gain),
    )?;
    if let Some(grid) = gain_grid {
        let gains = parse_grid(grid).map_err(|m| fail(EXIT_CONFIG, m))?;
        write_gain_grid(&cfg.output.dir.join("gain_grid.csv"), &profile, &rec, &gains)?;
    }
    Ok(())
}

fn analysis_report(
    cfg: &ExperimentConfig,
    profile: &LtvProfile,
    rec: &Recursions,
    gain: f64,
) -> String {
    let om = compute_omegas(profile, rec, gain, None);
    let (l1, l2) = rollreg::analysis::characteristic_roots(om.omega1, om.omega2);
    let verdict = convergence_verdict(om.omega1, om.omega2);
    let feas = compensation_feasibility(profile, rec);
    let u_dist_max = profile.u_dist.iter().fold(0.0f64, |m, u| m.max(u.abs()));

    let mut text = String::new();
    text.push_str(&format!("preset: {}\n", cfg.controller.preset));
    text.push_str(&format!("bins: {}\n", profile.n_bins()));
    text.push_str(&format!("learning_gain: {gain}\n"));
    text.push_str(&format!("u_dist_max: {u_dist_max:e}\n"));
    text.push_str(&format!("omega1: {:e}\n", om.omega1));
    text.push_str(&format!("omega2: {:e}\n", om.omega2));
    text.push_str(&format!("forcing: {:e}\n", om.forcing));
    text.push_str(&format!("lambda1_re: {:e}\n", l1.re));
    text.push_str(&format!("lambda1_im: {:e}\n", l1.im));
    text.push_str(&format!("lambda2_re: {:e}\n", l2.re));
    text.push_str(&format!("lambda2_im: {:e}\n", l2.im));
    text.push_str(&format!("verdict: {verdict}\n"));
    match critical_gain(profile, rec) {
        Ok(g) => text.push_str(&format!("critical_gain: {g:e}\n")),
        Err(e) => text.push_str(&format!("critical_gain: none ({e})\n")),
    }
    text.push_str(&format!("feasible: {}\n", feas.feasible));
    text.push_str(&format!("coupling: {:e}\n", feas.coupling));
    text
}

/// Parses a `START:END:COUNT` range into evenly spaced gains (inclusive).
fn parse_grid(grid: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = grid.split(':').collect();
    let bad = |why: &str| format!("--gain-grid: {why} (expected START:END:COUNT, got `{grid}`)");
    let [start, end, count] = parts[..] else {
        return Err(bad("wrong number of fields"));
    };
    let start: f64 = start.parse().map_err(|_| bad("START is not a number"))?;
    let end: f64 = end.parse().map_err(|_| bad("END is not a number"))?;
    let count: usize = count.parse().map_err(|_| bad("COUNT is not an integer"))?;
    if count < 2 {
        return Err(bad("COUNT must be at least 2"));
    }
    Ok((0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn write_gain_grid(
    path: &Path,
    profile: &LtvProfile,
    rec: &Recursions,
    gains: &[f64],
) -> Result<(), Failure> {
    let mut text = String::from(
        "gain,omega1,omega2,lambda1_re,lambda1_im,lambda2_re,lambda2_im,converges,marginal\n",
    );
    for &gain in gains {
        let om = compute_omegas(profile, rec, gain, None);
        let (l1, l2) = rollreg::analysis::characteristic_roots(om.omega1, om.omega2);
        let verdict = convergence_verdict(om.omega1, om.omega2);
        text.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}\n",
            gain,
            om.omega1,
            om.omega2,
            l1.re,
            l1.im,
            l2.re,
            l2.im,
            verdict == Verdict::Converges,
            verdict == Verdict::Marginal
        ));
    }
    write_file(path, &text)
}

fn cmd_compare(cfg: &ExperimentConfig, scenarios: &[String], jobs: usize) -> Result<(), Failure> {
    if scenarios.len() < 2 {
        return Err(fail(EXIT_CONFIG, "compare needs at least two --scenarios"));
    }
    let mut order: Vec<usize> = (0..scenarios.len()).collect();
    order.sort_by(|&a, &b| scenarios[a].cmp(&scenarios[b]).then(a.cmp(&b)));

    let specs: Vec<(String, ControllerSpec)> = order
        .iter()
        .map(|&i| {
            let name = &scenarios[i];
            ControllerSpec::preset(name)
                .map(|spec| (name.clone(), spec))
                .ok_or_else(|| {
                    fail(
                        EXIT_CONFIG,
                        format!(
                            "--scenarios: unknown preset `{name}` (expected one of: {})",
                            ControllerSpec::preset_names().join(", ")
                        ),
                    )
                })
        })
        .collect::<Result<_, _>>()?;

    let results = parallel_map(&specs, jobs, |(_, spec)| {
        run_experiment(&cfg.system, &cfg.sim, spec)
    });

    let mut text = String::from("scenario,iteration,terminal_re_m\n");
    let mut series = Vec::with_capacity(specs.len());
    for ((name, _), result) in specs.iter().zip(results) {
        let outcome = result.map_err(|e| fail(EXIT_SIM, format!("{name}: {e}")))?;
        for r in &outcome.records {
            text.push_str(&format!("{name},{},{:e}\n", r.iteration, r.terminal_re));
        }
        series.push((
            name.clone(),
            outcome.records.iter().map(|r| r.terminal_re).collect(),
        ));
    }
    write_file(&cfg.output.dir.join("compare.csv"), &text)?;

    if cfg.output.svg {
        write_file(
            &cfg.output.dir.join("plot.svg"),
            &svg::line_chart("terminal registration error (m)", &series),
        )?;
    }
    Ok(())
}

/// Applies `f` to every item, fanning out over `jobs` worker threads, and
/// returns results in input order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let jobs = jobs.min(items.len()).max(1);
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let mut out: Vec<Option<R>> = Vec::new();
    out.resize_with(items.len(), || None);
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            let tx = tx.clone();
            let f = &f;
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                if tx.send((i, f(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            out[i] = Some(r);
        }
    });
    out.into_iter().map(|r| r.expect("every index sent")).collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| fail(1, format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parse_is_inclusive_and_even() {
        let gains = parse_grid("-100:7000:5").unwrap();
        assert_eq!(gains, vec![-100.0, 1675.0, 3450.0, 5225.0, 7000.0]);
    }

    #[test]
    fn grid_parse_rejects_malformed_ranges() {
        assert!(parse_grid("1:2").unwrap_err().contains("START:END:COUNT"));
        assert!(parse_grid("a:2:3").unwrap_err().contains("START"));
        assert!(parse_grid("1:2:1").unwrap_err().contains("COUNT"));
    }

    #[test]
    fn sweep_summary_flags_a_decaying_series_with_a_sign_flip() {
        let row = summarize_sweep(5.0, vec![10.0, 4.0, -0.5, 0.2, 0.05, 0.04]);
        assert!(row.converged);
        assert_eq!(row.overshoot_ratio, 0.05);
        assert_eq!(row.iterations_to_1pct, Some(5));
    }

    #[test]
    fn sweep_summary_flags_a_growing_series_as_not_converged() {
        let row = summarize_sweep(-1.0, vec![1.0, 2.0, 3.0]);
        assert!(!row.converged);
        assert_eq!(row.overshoot_ratio, 0.0);
        assert_eq!(row.iterations_to_1pct, None);
    }

    #[test]
    fn parallel_map_preserves_input_order() {
        let items: Vec<usize> = (0..97).collect();
        let doubled = parallel_map(&items, 8, |&i| 2 * i);
        assert_eq!(doubled, items.iter().map(|i| 2 * i).collect::<Vec<_>>());
    }
}
