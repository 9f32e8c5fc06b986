use std::path::{Path, PathBuf};
use std::time::Instant;

use klflow_core::analysis::{
    classify_rate, estimate_limit, predicted_regime, rate_reference, LimitSetEstimate, PredictedRegime, RateEstimate,
    Regime,
};
use klflow_core::monitors::{kl_grid, kl_inequality_check};
use klflow_core::objective::validate_oracles;
use klflow_core::{integrate, ConvexMode, DynamicsParams, MonitorSummary, ObjectiveSpec, Termination, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checks::{default_checks, evaluate, CheckOutcome};
use crate::config::ExperimentConfig;
use crate::output::{fmt_f64, gnuplot_script, trajectory_csv, write_file};
use crate::{CliError, ExitCode};

/// Fraction of trailing samples over which the limit cluster is measured.
const LIMIT_WINDOW: f64 = 0.1;

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub problem: String,
    pub problem_label: String,
    pub mode: ConvexMode,
    pub dim: usize,
    pub lambda: f64,
    pub step: f64,
    pub x0: Vec<f64>,
    pub v0_from_hint: bool,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub sample_count: usize,
    pub final_time: f64,
    pub known_theta: Option<f64>,
    pub predicted: Option<PredictedRegime>,
    pub limit: Option<LimitSetEstimate>,
    pub rate: Option<RateEstimate>,
    pub rate_note: Option<String>,
    pub summary: MonitorSummary,
    pub checks: Vec<CheckOutcome>,
    pub notes: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn exit_code(&self) -> ExitCode {
        if self.termination == Termination::Diverged {
            ExitCode::Diverged
        } else if self.checks.iter().any(CheckOutcome::failed) {
            ExitCode::CheckFailed
        } else {
            ExitCode::Ok
        }
    }
}

/// The subset of a report read back by `rates`.
#[derive(Clone, Debug, Deserialize)]
pub struct ReportDigest {
    pub problem_label: String,
    #[serde(default)]
    pub known_theta: Option<f64>,
    #[serde(default)]
    pub rate: Option<RateEstimate>,
}

pub fn problem_label(config: &ExperimentConfig) -> String {
    let p = &config.problem;
    let params: Vec<String> = p.params.iter().map(|v| v.to_string()).collect();
    let mut label = format!("{}[{}]", p.name, params.join(";"));
    if let Some(ConvexMode::Prox) = p.mode {
        label.push_str("/prox");
    }
    label
}

/// Integrates one start and evaluates the configured checks. Artifacts go to
/// `dir` when given.
pub fn run_cell(
    config: &ExperimentConfig,
    spec: &ObjectiveSpec,
    params: &DynamicsParams,
    x0: &Vector,
    dir: Option<&Path>,
) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let traj = integrate(spec, params, x0, None).map_err(|e| CliError::Run(e.to_string()))?;
    log::info!(
        "{}: {:?} after {} steps (t = {})",
        spec.name,
        traj.termination,
        traj.accepted_steps,
        traj.last().t
    );

    let mut notes = Vec::new();
    let limit = estimate_limit(&traj, LIMIT_WINDOW).ok();
    let (rate, rate_note) = match &limit {
        Some(l) => {
            let (x_ref, v_ref) = rate_reference(&traj, l);
            match classify_rate(&traj, &x_ref, &v_ref) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
        None => (None, Some("trajectory diverged".to_string())),
    };
    if spec.mode() == ConvexMode::Smooth {
        notes.push(
            "the finite-time regime (θ < ½) needs a nonsmooth convex term and is exercised in prox mode only"
                .to_string(),
        );
    }
    let known_theta = spec.kl_profile.as_ref().map(|p| config.kl.theta.unwrap_or(p.theta));
    let predicted = known_theta.and_then(|t| predicted_regime(t).ok());

    let check_list = config.checks.clone().unwrap_or_else(|| default_checks(spec.mode()));
    let checks = check_list
        .iter()
        .map(|c| evaluate(c, &traj, limit.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;

    let report = RunReport {
        config: config.clone(),
        problem: spec.name.clone(),
        problem_label: problem_label(config),
        mode: spec.mode(),
        dim: spec.dim(),
        lambda: params.lambda,
        step: params.step,
        x0: x0.as_slice().to_vec(),
        v0_from_hint: traj.v0_from_hint,
        termination: traj.termination,
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        sample_count: traj.samples.len(),
        final_time: traj.last().t,
        known_theta,
        predicted,
        limit,
        rate,
        rate_note,
        summary: traj.summary.clone(),
        checks,
        notes,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };

    if let Some(dir) = dir {
        let outputs = &config.outputs;
        if outputs.trajectory_csv {
            write_file(&dir.join("trajectory.csv"), &trajectory_csv(&traj))?;
            if outputs.gnuplot {
                write_file(&dir.join("plot.gp"), &gnuplot_script("trajectory.csv", spec.dim()))?;
            }
        }
        if outputs.report_json {
            let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
            write_file(&dir.join("report.json"), &json)?;
        }
    }
    Ok(report)
}

fn out_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| config.outputs.dir.clone())
}

pub fn cmd_run(config: ExperimentConfig, out: Option<&Path>) -> Result<(ExitCode, Vec<RunReport>), CliError> {
    let spec = config.build_spec()?;
    let points = config.initial_points()?;
    let dir = out_dir(&config, out);
    let mut reports = Vec::with_capacity(points.len());
    for (k, x0) in points.iter().enumerate() {
        let cell_dir = if points.len() == 1 {
            dir.clone()
        } else {
            dir.join(format!("start_{k:04}"))
        };
        reports.push(run_cell(&config, &spec, &config.dynamics, x0, Some(&cell_dir))?);
    }
    for r in &reports {
        print_report_line(r);
    }
    let code = reports.iter().map(RunReport::exit_code).max().unwrap_or(ExitCode::Ok);
    Ok((code, reports))
}

fn print_report_line(r: &RunReport) {
    let regime = r.rate.as_ref().map_or(Regime::Undetermined, |e| e.regime);
    let failed: Vec<&str> = r.checks.iter().filter(|c| c.failed()).map(|c| c.name.as_str()).collect();
    println!(
        "{} x0={:?} termination={:?} steps={} regime={} checks={}",
        r.problem_label,
        r.x0,
        r.termination,
        r.accepted_steps,
        regime,
        if failed.is_empty() {
            "pass".to_string()
        } else {
            format!("FAIL({})", failed.join(","))
        }
    );
}

#[derive(Clone, Debug)]
pub struct SweepCell {
    pub index: usize,
    pub lambda: f64,
    pub step: f64,
    pub start: usize,
    pub x0: Vector,
}

pub fn sweep_cells(config: &ExperimentConfig) -> Result<Vec<SweepCell>, CliError> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a \"sweep\" section".into()))?;
    let axis = |name: &str, values: &Option<Vec<f64>>, default: f64| -> Result<Vec<f64>, CliError> {
        match values {
            None => Ok(vec![default]),
            Some(v) if v.is_empty() => Err(CliError::Config(format!("sweep axis {name} is empty"))),
            Some(v) => Ok(v.clone()),
        }
    };
    let lambdas = axis("lambda", &sweep.lambda, config.dynamics.lambda)?;
    let steps = axis("step", &sweep.step, config.dynamics.step)?;
    if sweep.starts == Some(0) {
        return Err(CliError::Config("sweep axis starts is empty".into()));
    }
    let points = config.initial_points()?;
    let mut cells = Vec::new();
    for &lambda in &lambdas {
        for &step in &steps {
            let params = DynamicsParams {
                lambda,
                step,
                ..config.dynamics.clone()
            };
            params.validate().map_err(|e| CliError::Config(e.to_string()))?;
            for (start, x0) in points.iter().enumerate() {
                cells.push(SweepCell {
                    index: cells.len(),
                    lambda,
                    step,
                    start,
                    x0: x0.clone(),
                });
            }
        }
    }
    Ok(cells)
}

pub fn cmd_sweep(config: ExperimentConfig, out: Option<&Path>) -> Result<(ExitCode, Vec<Result<RunReport, CliError>>), CliError> {
    let spec = config.build_spec()?;
    let cells = sweep_cells(&config)?;
    let dir = out_dir(&config, out);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Run(e.to_string()))?;
    log::info!("sweep: {} cells on {} workers", cells.len(), config.workers);
    let results: Vec<Result<RunReport, CliError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let params = DynamicsParams {
                    lambda: cell.lambda,
                    step: cell.step,
                    ..config.dynamics.clone()
                };
                let cell_dir = dir.join(format!("cell_{:04}", cell.index));
                run_cell(&config, &spec, &params, &cell.x0, Some(&cell_dir))
            })
            .collect()
    });
    write_file(&dir.join("sweep.csv"), &aggregate_csv(&cells, &results, spec.dim()))?;

    let mut code = ExitCode::Ok;
    for (cell, result) in cells.iter().zip(&results) {
        match result {
            Ok(r) => {
                print_report_line(r);
                code = code.max(r.exit_code());
            }
            Err(e) => {
                eprintln!("cell {}: {e}", cell.index);
                code = code.max(e.exit_code());
            }
        }
    }
    Ok((code, results))
}

/// One row per cell in cell order; contains nothing time-dependent.
pub fn aggregate_csv(cells: &[SweepCell], results: &[Result<RunReport, CliError>], n: usize) -> String {
    let mut header = vec!["cell".to_string(), "lambda".into(), "step".into(), "start".into()];
    header.extend((0..n).map(|i| format!("x0_{i}")));
    header.push("termination".into());
    header.extend((0..n).map(|i| format!("x_bar_{i}")));
    header.extend(
        [
            "objective_value",
            "stationarity",
            "cluster_radius",
            "regime",
            "coef_a",
            "coef_b",
            "theta_implied",
            "fit_r2",
            "checks_passed",
        ]
        .map(String::from),
    );
    let mut out = header.join(",");
    out.push('\n');
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for (cell, result) in cells.iter().zip(results) {
        let mut row = vec![
            cell.index.to_string(),
            fmt_f64(cell.lambda),
            fmt_f64(cell.step),
            cell.start.to_string(),
        ];
        row.extend(cell.x0.iter().map(|&v| fmt_f64(v)));
        match result {
            Ok(r) => {
                row.push(serde_json::to_value(r.termination).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default());
                match &r.limit {
                    Some(l) => {
                        row.extend(l.x_bar.iter().map(|&v| fmt_f64(v)));
                        row.push(fmt_f64(l.objective_value));
                        row.push(fmt_f64(l.stationarity));
                        row.push(fmt_f64(l.cluster_radius));
                    }
                    None => row.extend(std::iter::repeat_n(String::new(), n + 3)),
                }
                let rate = r.rate.as_ref();
                row.push(rate.map_or(Regime::Undetermined, |e| e.regime).to_string());
                row.push(opt(rate.and_then(|e| e.coefficients).map(|c| c.a)));
                row.push(opt(rate.and_then(|e| e.coefficients).map(|c| c.b)));
                row.push(opt(rate.and_then(|e| e.theta_implied)));
                row.push(opt(rate.map(|e| e.fit_r2)));
                row.push((!r.checks.iter().any(CheckOutcome::failed)).to_string());
            }
            Err(_) => {
                row.push("ERROR".into());
                row.extend(std::iter::repeat_n(String::new(), n + 8));
                row.push("false".into());
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn cmd_check(config: ExperimentConfig) -> Result<ExitCode, CliError> {
    let spec = config.build_spec()?;
    let report = validate_oracles(&spec, config.validation.samples, config.validation.seed);
    let mut ok = report.passed();
    println!("oracle checks for {} (n = {}, {} mode)", spec.name, spec.dim(), spec.mode());
    for c in &report.checks {
        println!(
            "  {:<24} worst {:>12.4e}  tol {:>9.1e}  {}",
            c.name,
            c.max_violation,
            c.tolerance,
            if c.passed() { "pass" } else { "FAIL" }
        );
    }
    println!(
        "  observed Lipschitz ratio {:.6e} (declared {:.6e})",
        report.observed_lipschitz,
        spec.lipschitz()
    );
    match &spec.kl_profile {
        None => println!("no KL profile for {}; KL grid check skipped", spec.name),
        Some(_) if spec.mode() == ConvexMode::Prox => {
            println!("KL grid check needs gradients; skipped in prox mode")
        }
        Some(profile) => {
            let mut profile = profile.clone();
            if let Some(theta) = config.kl.theta {
                profile.theta = theta;
            }
            let grid = kl_grid(&profile, config.kl.grid_points, config.kl.seed);
            let kl = kl_inequality_check(&spec, &profile, &grid).map_err(|e| CliError::Run(e.to_string()))?;
            println!(
                "KL inequality θ = {}, C = {:.6e}: {} of {} points checked, {} violations, worst {:.4e}, smallest valid C {:.6e}",
                kl.theta, kl.constant, kl.points_checked, kl.grid_points, kl.violations, kl.max_violation, kl.min_constant
            );
            ok &= kl.passed();
        }
    }
    Ok(if ok { ExitCode::Ok } else { ExitCode::CheckFailed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub problem: String,
    pub known_theta: Option<f64>,
    pub predicted_regime: Option<Regime>,
    pub predicted_exponent: Option<f64>,
    pub observed_regime: Regime,
    pub observed_exponent: Option<f64>,
    pub relative_error: Option<f64>,
    pub flagged: bool,
}

pub fn rate_row(digest: &ReportDigest) -> RateRow {
    let predicted = digest.known_theta.and_then(|t| predicted_regime(t).ok());
    let observed = digest.rate.as_ref().map_or(Regime::Undetermined, |r| r.regime);
    let observed_exponent = digest.rate.as_ref().and_then(RateEstimate::exponent);
    let predicted_exponent = predicted.and_then(|p| p.exponent);
    let relative_error = match (predicted_exponent, observed_exponent) {
        (Some(p), Some(o)) => Some((o - p).abs() / p),
        _ => None,
    };
    let flagged = observed == Regime::Undetermined || predicted.is_some_and(|p| p.regime != observed);
    RateRow {
        problem: digest.problem_label.clone(),
        known_theta: digest.known_theta,
        predicted_regime: predicted.map(|p| p.regime),
        predicted_exponent,
        observed_regime: observed,
        observed_exponent,
        relative_error,
        flagged,
    }
}

pub fn rates_csv(rows: &[RateRow]) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = String::from(
        "problem,known_theta,predicted_regime,predicted_exponent,observed_regime,observed_exponent,relative_error,flagged\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.problem,
            opt(r.known_theta),
            r.predicted_regime.map(|g| g.to_string()).unwrap_or_default(),
            opt(r.predicted_exponent),
            r.observed_regime,
            opt(r.observed_exponent),
            opt(r.relative_error),
            r.flagged
        ));
    }
    out
}

pub fn rates_table(rows: &[RateRow]) -> String {
    let short = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.problem.clone(),
                short(r.known_theta),
                r.predicted_regime.map(|g| g.to_string()).unwrap_or_else(|| "-".into()),
                short(r.predicted_exponent),
                r.observed_regime.to_string(),
                short(r.observed_exponent),
                r.relative_error.map(|e| format!("{:.2}%", 100.0 * e)).unwrap_or_else(|| "-".into()),
                if r.flagged { "*".into() } else { String::new() },
            ]
        })
        .collect();
    let header = ["problem", "theta", "predicted", "pred_q", "observed", "obs_q", "rel_err", "flag"].map(String::from);
    let mut widths = header.clone().map(|h| h.len());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String; 8]| {
        row.iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header);
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

pub fn cmd_rates(reports: &[PathBuf], out: Option<&Path>) -> Result<(ExitCode, Vec<RateRow>), CliError> {
    if reports.is_empty() {
        return Err(CliError::Config("rates needs at least one report".into()));
    }
    let rows = reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let digest: ReportDigest =
                serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(rate_row(&digest))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = rates_table(&rows);
    print!("{table}");
    if let Some(dir) = out {
        write_file(&dir.join("rates.csv"), &rates_csv(&rows))?;
        write_file(&dir.join("rates.txt"), &table)?;
    }
    Ok((ExitCode::Ok, rows))
}
