//! One function per mode, each producing a CSV table and a report.

use fracmix::analysis::fit_decay;
use fracmix::fraccalc::TimeGrid;
use fracmix::fracode::{solve_l1, solve_spectral, FracOdeProblem, SpectralDensity};
use fracmix::mlfunc::{mittag_leffler_real, MLParams};
use fracmix::pde1d::{decay_run, modal_oracle, picard_solve, solve_mixed_l1, DecayMethod, ModalTimes};

use crate::config::ExperimentConfig;
use crate::output::{Csv, Report};
use crate::problems::{mixed_problem, order_spec};
use crate::CliError;

/// Longest horizon the L1 stepper is asked to cover in a decay run.
pub const STEPPER_HORIZON: f64 = 200.0;

/// Relative difference that counts as agreement between two solvers.
pub const AGREEMENT_TOL: f64 = 1e-3;

/// Artifacts of a finished mode plus the number of failed checks, which
/// only `verify` counts; other modes record verdicts in the report.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: Csv,
    pub report: Report,
    pub failures: usize,
}

fn positive_count(cfg: &ExperimentConfig, key: &str) -> Result<usize, CliError> {
    match cfg.count(key)? {
        0 => Err(CliError::Config(format!("{key}: must be positive"))),
        n => Ok(n),
    }
}

fn grid_for(horizon: f64, steps_per_unit: usize) -> Result<TimeGrid, CliError> {
    Ok(TimeGrid::with_step(horizon, steps_per_unit)?)
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Indices `0, stride, 2·stride, …` plus the last one.
fn strided(len: usize, stride: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).step_by(stride).collect();
    if idx.last() != Some(&(len - 1)) {
        idx.push(len - 1);
    }
    idx
}

pub fn ml_eval(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let params = MLParams::new(cfg.real("alpha")?, cfg.real("gamma")?)?.with_tol(cfg.real("tol")?)?;
    let (x_min, x_max) = (cfg.real("x_min")?, cfg.real("x_max")?);
    let points = cfg.count("points")?;
    if points < 2 || !(x_max > x_min) {
        return Err(CliError::Config("need x_min < x_max and at least two points".into()));
    }
    let span = (points - 1) as f64;
    let xs: Vec<f64> = match cfg.choice("spacing", &["linear", "log"])? {
        "linear" => (0..points).map(|i| x_min + (x_max - x_min) * i as f64 / span).collect(),
        _ => {
            if !(x_min > 0.0) {
                return Err(CliError::Config("spacing = log needs x_min > 0".into()));
            }
            let r = (x_max / x_min).ln();
            (0..points).map(|i| x_min * (r * i as f64 / span).exp()).collect()
        }
    };
    let values = xs.iter().map(|&x| mittag_leffler_real(&params, -x)).collect::<Result<Vec<_>, _>>()?;

    let resolved = cfg.resolved();
    let mut csv = Csv::new(&resolved, &["x", "value"]);
    for (x, v) in xs.iter().zip(&values) {
        csv.row(&[*x, *v]);
    }
    let sector = xs
        .iter()
        .zip(&values)
        .filter(|(&x, _)| x >= 0.0)
        .map(|(&x, &v)| (1.0 + x) * v.abs())
        .fold(0.0, f64::max);
    let mut report = Report::new(&resolved);
    report.text("points", points);
    report.real("min_value", values.iter().copied().fold(f64::INFINITY, f64::min));
    report.real("max_value", values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    report.text("nonincreasing", values.windows(2).all(|w| w[1] <= w[0]));
    report.real("sector_constant", sector);
    Ok(Artifacts { csv, report, failures: 0 })
}

pub fn ode(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let spec = order_spec(cfg)?;
    let lambda = cfg.real("lambda")?;
    let v0 = cfg.real("v0")?;
    let horizon = cfg.real("horizon")?;
    let forcing = cfg.real("forcing")?;
    let method = cfg.choice("method", &["l1", "spectral", "both"])?;
    let stride = positive_count(cfg, "output_stride")?;
    let grid = grid_for(horizon, positive_count(cfg, "steps_per_unit")?)?;
    let idx = strided(grid.points().len(), stride);
    let times: Vec<f64> = idx.iter().map(|&i| grid.points()[i]).collect();

    let stepped = if method != "spectral" {
        let mut problem = FracOdeProblem::new(spec.clone(), lambda, v0, grid.t_end())?;
        if forcing != 0.0 {
            problem = problem.with_forcing(move |_| forcing);
        }
        let v = solve_l1(&problem, &grid)?.scalar_values()?;
        Some(idx.iter().map(|&i| v[i]).collect::<Vec<f64>>())
    } else {
        None
    };
    let spectral = if method != "l1" {
        if forcing != 0.0 {
            return Err(CliError::Config("the spectral solver needs forcing = 0".into()));
        }
        let t_min = times.get(1).copied().unwrap_or(grid.t_end());
        let sd = SpectralDensity::from_spec(&spec, lambda)?.covering(t_min);
        let v = solve_spectral(&sd, v0, &times[1..])?.scalar_values()?;
        Some(std::iter::once(v0).chain(v).collect::<Vec<f64>>())
    } else {
        None
    };

    let resolved = cfg.resolved();
    let mut report = Report::new(&resolved);
    report.text("method", method);
    report.text("n_steps", grid.n_steps());
    let csv = match (&stepped, &spectral) {
        (Some(a), Some(b)) => {
            let mut csv = Csv::new(&resolved, &["t", "v_l1", "v_spectral", "rel_diff"]);
            let mut worst: f64 = 0.0;
            for ((t, x), y) in times.iter().zip(a).zip(b) {
                let r = rel_diff(*x, *y);
                csv.row(&[*t, *x, *y, r]);
                if *t >= 0.1 {
                    worst = worst.max(r);
                }
            }
            report.real("final_l1", a[a.len() - 1]);
            report.real("final_spectral", b[b.len() - 1]);
            report.real("max_rel_diff", worst);
            report.text("within_tolerance", worst <= AGREEMENT_TOL);
            csv
        }
        (Some(v), None) | (None, Some(v)) => {
            let name = if stepped.is_some() { "v_l1" } else { "v_spectral" };
            let mut csv = Csv::new(&resolved, &["t", name]);
            for (t, x) in times.iter().zip(v) {
                csv.row(&[*t, *x]);
            }
            report.real("final_value", v[v.len() - 1]);
            csv
        }
        (None, None) => unreachable!("method selects at least one solver"),
    };
    Ok(Artifacts { csv, report, failures: 0 })
}

pub fn pde(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let grid = grid_for(cfg.real("horizon")?, positive_count(cfg, "steps_per_unit")?)?;
    let problem = mixed_problem(cfg, grid.t_end(), cfg.real("source")?)?;
    let method = cfg.choice("method", &["l1", "modal", "picard"])?;
    let stride = positive_count(cfg, "output_stride")?;
    let resolved = cfg.resolved();
    let mut report = Report::new(&resolved);
    report.text("method", method);
    report.text("n_steps", grid.n_steps());
    report.real("lambda1", problem.op.eigenvalues()[0]);
    let traj = match method {
        "l1" => solve_mixed_l1(&problem, &grid)?,
        "modal" => modal_oracle(&problem, &ModalTimes::Grid(grid.clone()))?,
        _ => {
            let (traj, picard) = picard_solve(&problem, &grid, positive_count(cfg, "picard_max_iter")?, cfg.real("picard_tol")?)?;
            report.text("picard_iterations", picard.iterations);
            report.real("picard_residual", picard.residual);
            if let Some(&c) = picard.contraction.last() {
                report.real("picard_last_contraction", c);
            }
            traj
        }
    };
    let mut csv = Csv::new(&resolved, &["t", "norm"]);
    for i in strided(traj.len(), stride) {
        csv.row(&[traj.times()[i], traj.norms()[i]]);
    }
    report.real("final_norm", traj.norms()[traj.len() - 1]);
    Ok(Artifacts { csv, report, failures: 0 })
}

/// Slope tolerance around `-α` for a decay fit.
pub const SLOPE_TOL: f64 = 0.05;

pub fn decay(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (t_min, t_max) = (cfg.real("t_min")?, cfg.real("t_max")?);
    let points = cfg.count("points")?;
    if points < 2 || !(t_min > 0.0 && t_max > t_min) {
        return Err(CliError::Config("need 0 < t_min < t_max and at least two points".into()));
    }
    let r = (t_max / t_min).ln();
    let mut t_points: Vec<f64> = (0..points).map(|i| t_min * (r * i as f64 / (points - 1) as f64).exp()).collect();
    t_points[points - 1] = t_max;
    let problem = mixed_problem(cfg, t_max, 0.0)?.in_decay_mode();
    let modal = problem.spec.is_constant() && problem.spec.terms().len() <= 1;
    if !modal && t_max > STEPPER_HORIZON {
        return Err(CliError::Config(format!(
            "this problem needs the L1 stepper, which is limited to t_max <= {STEPPER_HORIZON}"
        )));
    }
    let (traj, run) = decay_run(&problem, &t_points, positive_count(cfg, "steps_per_unit")?)?;
    let fit = fit_decay(traj.times(), traj.norms(), (cfg.real("window_min")?, cfg.real("window_max")?))?;

    let resolved = cfg.resolved();
    let mut csv = Csv::new(&resolved, &["t", "norm", "ratio"]);
    for ((t, n), q) in traj.times().iter().zip(traj.norms()).zip(&run.ratios) {
        csv.row(&[*t, *n, *q]);
    }
    let mut report = Report::new(&resolved);
    report.text("method", if run.method == DecayMethod::Modal { "modal" } else { "stepper" });
    report.real("lambda1", problem.op.eigenvalues()[0]);
    report.real("fitted_slope", fit.slope);
    report.real("fit_intercept", fit.intercept);
    report.real("fit_rms_residual", fit.rms_residual);
    report.text("fit_points", fit.n_points);
    report.text("power_law", fit.looks_like_power_law());
    if let Some(alpha) = problem.spec.lowest_order() {
        let err = (fit.slope + alpha).abs();
        report.real("expected_slope", -alpha);
        report.real("slope_error", err);
        report.text("slope_within_tolerance", err <= SLOPE_TOL);
    }
    if let Some(c) = &run.constants {
        report.real("c_upper", c.c_upper);
        report.real("c_lower", c.c_lower);
        report.real("t0", c.t0);
        report.text("upper_violations", run.upper_violations.len());
    }
    Ok(Artifacts { csv, report, failures: 0 })
}

pub fn compare(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let grid = grid_for(cfg.real("horizon")?, positive_count(cfg, "steps_per_unit")?)?;
    let problem = mixed_problem(cfg, grid.t_end(), 0.0)?;
    let t_cmp = cfg.real("t_compare_min")?;
    let stride = positive_count(cfg, "output_stride")?;
    let stepped = solve_mixed_l1(&problem, &grid)?;
    // the oracle costs one spectral integral per mode and time, so it only
    // runs at the output rows
    let rows = strided(grid.points().len(), stride);
    let times: Vec<f64> = rows.iter().map(|&i| grid.points()[i]).collect();
    let modal = modal_oracle(&problem, &ModalTimes::Points(times.clone()))?;

    let resolved = cfg.resolved();
    let mut csv = Csv::new(&resolved, &["t", "norm_l1", "norm_modal", "rel_diff"]);
    let (mut worst, mut at) = (0.0, t_cmp);
    for ((&i, &t), &b) in rows.iter().zip(&times).zip(modal.norms()) {
        let a = stepped.norms()[i];
        let r = rel_diff(a, b);
        csv.row(&[t, a, b, r]);
        if t >= t_cmp && r > worst {
            (worst, at) = (r, t);
        }
    }
    let mut report = Report::new(&resolved);
    report.text("n_steps", grid.n_steps());
    report.real("max_rel_diff", worst);
    report.real("max_rel_diff_at", at);
    report.text("within_tolerance", worst <= AGREEMENT_TOL);
    Ok(Artifacts { csv, report, failures: 0 })
}
