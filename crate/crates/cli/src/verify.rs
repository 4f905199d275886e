//! Seeded invariant suite behind `fracmix verify`.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`; check
//! number `k` (0-based, in [`CHECKS`] order) reads stream `k`, so adding a
//! check never perturbs the draws of the others.

use std::f64::consts::PI;

use fracmix::analysis::{fit_decay, gronwall_envelope};
use fracmix::fraccalc::{caputo_l1, caputo_of_power, coercivity_gap, L1Weights, OrderSpec, TimeGrid};
use fracmix::fracode::{
    frac_derivative_sign_check, max_principle_check, solve_l1, solve_spectral, FracOdeProblem, SpectralDensity,
};
use fracmix::mlfunc::{exponential_kernel_integral, mittag_leffler_real, negative_axis_integral, MLParams};
use fracmix::pde1d::{build_operator, picard_solve, solve_mixed_l1, MixedProblem, Reaction};
use fracmix::quadrature::adaptive;
use fracmix::special::rgamma;
use fracmix::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::output::{num, Csv, Report};
use crate::CliError;

/// One case: whether it passed and the metric it was judged on.
type Outcome = Result<(bool, f64)>;

/// A named property, the share of `cases` it runs (divisor) and its body.
pub struct Check {
    pub name: &'static str,
    pub divisor: usize,
    pub run: fn(&mut ChaCha8Rng) -> Outcome,
}

pub const CHECKS: &[Check] = &[
    Check { name: "l1_affine_exact", divisor: 1, run: l1_affine_exact },
    Check { name: "l1_weights_decrease", divisor: 1, run: l1_weights_decrease },
    Check { name: "ml_completely_monotone", divisor: 1, run: ml_completely_monotone },
    Check { name: "ml_series_matches_integral", divisor: 1, run: ml_series_matches_integral },
    Check { name: "kernel_identity", divisor: 1, run: kernel_identity },
    Check { name: "spectral_density_enveloped", divisor: 1, run: spectral_density_enveloped },
    Check { name: "spectral_matches_l1", divisor: 5, run: spectral_matches_l1 },
    Check { name: "coercivity", divisor: 1, run: coercivity },
    Check { name: "max_principle", divisor: 2, run: max_principle },
    Check { name: "sign_lemma", divisor: 2, run: sign_lemma },
    Check { name: "eigen_orthonormal", divisor: 2, run: eigen_orthonormal },
    Check { name: "single_mode_reduction", divisor: 4, run: single_mode_reduction },
    Check { name: "norm_monotone", divisor: 4, run: norm_monotone },
    Check { name: "comparison_principle", divisor: 4, run: comparison_principle },
    Check { name: "picard_contracts", divisor: 4, run: picard_contracts },
    Check { name: "fit_scale_equivariant", divisor: 1, run: fit_scale_equivariant },
    Check { name: "gronwall_monotone", divisor: 2, run: gronwall_monotone },
];

pub fn verify(cfg: &ExperimentConfig) -> std::result::Result<crate::modes::Artifacts, CliError> {
    let cases = cfg.count("cases")?;
    if cases == 0 {
        return Err(CliError::Config("cases: must be positive".into()));
    }
    let resolved = cfg.resolved();
    let mut csv = Csv::new(&resolved, &["check", "case", "passed", "metric"]);
    let mut report = Report::new(&resolved);
    let (mut failed_checks, mut failed_cases, mut total_cases) = (0, 0, 0);
    for (k, check) in CHECKS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
        rng.set_stream(k as u64);
        let n = (cases / check.divisor).max(1);
        let mut passed = 0;
        for case in 0..n {
            let (ok, metric) = (check.run)(&mut rng).unwrap_or((false, f64::NAN));
            passed += usize::from(ok);
            csv.raw_row(&[check.name.to_string(), case.to_string(), ok.to_string(), num(metric)]);
        }
        report.text(&format!("check.{}", check.name), format!("{passed}/{n}"));
        total_cases += n;
        failed_cases += n - passed;
        failed_checks += usize::from(passed < n);
    }
    report.text("checks_total", CHECKS.len());
    report.text("checks_failed", failed_checks);
    report.text("cases_total", total_cases);
    report.text("cases_failed", failed_cases);
    report.text("status", if failed_checks == 0 { "pass" } else { "fail" });
    Ok(crate::modes::Artifacts { csv, report, failures: failed_checks })
}

fn sine_series(rng: &mut ChaCha8Rng, terms: usize) -> Vec<(f64, f64)> {
    (1..=terms).map(|k| (rng.gen_range(-1.0..1.0), k as f64 * rng.gen_range(0.5..1.5))).collect()
}

fn l1_affine_exact(rng: &mut ChaCha8Rng) -> Outcome {
    let alpha = rng.gen_range(0.05..0.95);
    let (a, b) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let grid = TimeGrid::uniform(rng.gen_range(0.5..3.0), rng.gen_range(16..128))?;
    let values: Vec<f64> = grid.points().iter().map(|t| a + b * t).collect();
    let d = caputo_l1(&grid, &values, alpha)?;
    let err = grid
        .points()
        .iter()
        .zip(&d)
        .map(|(&t, &v)| (v - b * caputo_of_power(1.0, alpha, t)).abs())
        .fold(0.0, f64::max);
    Ok((err <= 1e-11 * (1.0 + b.abs()), err))
}

fn l1_weights_decrease(rng: &mut ChaCha8Rng) -> Outcome {
    let w = L1Weights::new(rng.gen_range(0.01..0.99), rng.gen_range(1e-4..1.0), 2000)?;
    let w = w.as_slice();
    let ok = w.iter().all(|&b| b > 0.0) && w.windows(2).all(|p| p[1] < p[0]);
    Ok((ok, w[w.len() - 1]))
}

fn ml_completely_monotone(rng: &mut ChaCha8Rng) -> Outcome {
    let alpha = rng.gen_range(0.1..1.0);
    let params = MLParams::new(alpha, 1.0)?;
    let values = (0..200)
        .map(|i| mittag_leffler_real(&params, -0.25 * i as f64))
        .collect::<Result<Vec<_>>>()?;
    let ok = values.iter().all(|&v| v > 0.0) && values.windows(2).all(|p| p[1] <= p[0]);
    Ok((ok, values[values.len() - 1]))
}

fn ml_series_matches_integral(rng: &mut ChaCha8Rng) -> Outcome {
    let params = MLParams::new(rng.gen_range(0.2..0.95), rng.gen_range(0.5..1.5))?;
    let x = rng.gen_range(0.5..4.5);
    let err = (mittag_leffler_real(&params, -x)? - negative_axis_integral(&params, x)?).abs();
    Ok((err <= 1e-9, err))
}

/// Oracle for the kernel identity: substitute `u = (t - τ)^{1-β}` to remove
/// the endpoint singularity, then integrate adaptively.
fn kernel_identity(rng: &mut ChaCha8Rng) -> Outcome {
    let beta: f64 = rng.gen_range(0.0..0.9);
    let lambda = rng.gen_range(0.1..5.0);
    let s: f64 = rng.gen_range(0.0..2.0);
    let t = s + rng.gen_range(0.01..3.0);
    let p = 1.0 - beta;
    let top = (t - s).powf(p);
    let integrand = |u: f64| (-lambda * (t - u.powf(1.0 / p) - s)).exp();
    let oracle = adaptive(integrand, 0.0, top, 1e-14, 1e-13)?.value * rgamma(1.0 - beta) / p;
    let err = (exponential_kernel_integral(beta, lambda, s, t)? - oracle).abs();
    Ok((err <= 1e-8, err))
}

fn spectral_density_enveloped(rng: &mut ChaCha8Rng) -> Outcome {
    let sd = SpectralDensity::new(rng.gen_range(0.1..0.9), rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0))?;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for i in 0..60 {
        let r: f64 = 1e-6 * 10f64.powf(i as f64 / 6.0);
        let (d, e) = (sd.density(r), sd.envelope(r));
        ok &= d >= 0.0 && d <= e * (1.0 + 1e-12);
        worst = worst.max(d / e);
    }
    Ok((ok, worst))
}

fn spectral_matches_l1(rng: &mut ChaCha8Rng) -> Outcome {
    let (alpha, q, lambda) = (rng.gen_range(0.2..0.8), rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
    let grid = TimeGrid::uniform(2.0, 2048)?;
    let stepped = solve_l1(&FracOdeProblem::new(OrderSpec::single(alpha, q)?, lambda, 1.0, 2.0)?, &grid)?.scalar_values()?;
    let times = [0.5, 1.0, 2.0];
    let sd = SpectralDensity::new(alpha, q, lambda)?.covering(0.5);
    let exact = solve_spectral(&sd, 1.0, &times)?.scalar_values()?;
    let worst = times
        .iter()
        .zip(&exact)
        .map(|(&t, &e)| (stepped[(t * 1024.0) as usize] - e).abs() / e)
        .fold(0.0, f64::max);
    Ok((worst <= 1e-3, worst))
}

fn coercivity(rng: &mut ChaCha8Rng) -> Outcome {
    let alpha = rng.gen_range(0.1..0.9);
    let grid = TimeGrid::uniform(1.0, 256)?;
    let comps: Vec<Vec<(f64, f64)>> = (0..3).map(|_| sine_series(rng, 4)).collect();
    let traj: Vec<Vec<f64>> = grid
        .points()
        .iter()
        .map(|&t| comps.iter().map(|c| c.iter().map(|(a, w)| a * (w * t).sin() + a).sum()).collect())
        .collect();
    let gap = coercivity_gap(&grid, &traj, alpha)?;
    let min = gap.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min >= -1e-10, min))
}

fn random_scalar(rng: &mut ChaCha8Rng) -> Result<(OrderSpec, f64)> {
    let spec = OrderSpec::single(rng.gen_range(0.1..0.9), rng.gen_range(0.2..2.0))?;
    Ok((spec, rng.gen_range(0.1..2.0)))
}

fn max_principle(rng: &mut ChaCha8Rng) -> Outcome {
    let (spec, lambda) = random_scalar(rng)?;
    let v0 = -rng.gen_range(0.0..1.0);
    let f = -rng.gen_range(0.0..0.5);
    let grid = TimeGrid::uniform(2.0, 256)?;
    let w = solve_l1(&FracOdeProblem::new(spec.clone(), lambda, v0, 2.0)?.with_forcing(move |_| f), &grid)?;
    let history = w.scalar_values()?.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let report = max_principle_check(&w, &spec, lambda, 1e-6 * (1.0 + history))?;
    Ok((report.hypothesis_holds && report.verdict.passed(), report.max_value))
}

fn sign_lemma(rng: &mut ChaCha8Rng) -> Outcome {
    let (spec, lambda) = random_scalar(rng)?;
    let v0 = rng.gen_range(0.0..1.0);
    let grid = TimeGrid::uniform(2.0, 256)?;
    let z = solve_l1(&FracOdeProblem::new(spec.clone(), lambda, v0, 2.0)?, &grid)?;
    let verdict = frac_derivative_sign_check(&z, &spec, lambda, 1e-6 * (1.0 + v0))?;
    Ok((verdict.passed(), v0))
}

fn eigen_orthonormal(rng: &mut ChaCha8Rng) -> Outcome {
    let slope = rng.gen_range(0.0..1.0);
    let op = build_operator(PI, rng.gen_range(10..120), |x| 1.0 + slope * x, 1.0)?;
    let n = op.n_x();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in j..n {
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((op.inner(op.mode(j), op.mode(k)) - target).abs());
        }
    }
    Ok((worst <= 1e-10, worst))
}

fn small_problem(rng: &mut ChaCha8Rng) -> Result<MixedProblem> {
    let op = build_operator(PI, 30, |x| 1.0 + 0.2 * x, 1.0)?;
    let amps = sine_series(rng, 5);
    let spec = OrderSpec::single(rng.gen_range(0.2..0.8), rng.gen_range(0.2..2.0))?;
    let c = -rng.gen_range(0.0..1.0);
    Ok(MixedProblem::from_fn(op, spec, |x| amps.iter().map(|(a, w)| a * (w.round() * x).sin()).sum(), 2.0)?
        .with_reaction(Reaction::Constant(c))
        .in_decay_mode())
}

fn single_mode_reduction(rng: &mut ChaCha8Rng) -> Outcome {
    let op = build_operator(PI, 40, |_| 1.0, 1.0)?;
    let k = rng.gen_range(0..3);
    let (alpha, q) = (rng.gen_range(0.2..0.8), rng.gen_range(0.2..2.0));
    let spec = OrderSpec::single(alpha, q)?;
    let lambda = op.eigenvalues()[k];
    let p = MixedProblem::new(op.clone(), spec.clone(), op.mode(k).to_vec(), 1.0)?;
    let grid = TimeGrid::uniform(1.0, 256)?;
    let field = solve_mixed_l1(&p, &grid)?;
    let scalar = solve_l1(&FracOdeProblem::new(spec, lambda, 1.0, 1.0)?, &grid)?.scalar_values()?;
    let worst = field.norms().iter().zip(&scalar).map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    Ok((worst <= 1e-10, worst))
}

fn norm_monotone(rng: &mut ChaCha8Rng) -> Outcome {
    let p = small_problem(rng)?;
    let traj = solve_mixed_l1(&p, &TimeGrid::uniform(2.0, 256)?)?;
    let worst = traj.norms().windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok((worst <= 1e-14 * traj.norms()[0], worst))
}

fn comparison_principle(rng: &mut ChaCha8Rng) -> Outcome {
    let p = small_problem(rng)?;
    let c = p.reaction.constant_value().unwrap_or(0.0);
    let lower = p.clone().with_reaction(Reaction::Constant(c - rng.gen_range(0.1..1.0)));
    let grid = TimeGrid::uniform(2.0, 256)?;
    let (a, b) = (solve_mixed_l1(&p, &grid)?, solve_mixed_l1(&lower, &grid)?);
    let worst = b.norms().iter().zip(a.norms()).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
    Ok((worst <= 1e-14 * a.norms()[0], worst))
}

fn picard_contracts(rng: &mut ChaCha8Rng) -> Outcome {
    let mut p = small_problem(rng)?;
    p.horizon = 0.25;
    let (_, report) = picard_solve(&p, &TimeGrid::uniform(0.25, 32)?, 200, 1e-10)?;
    let worst = report.contraction.iter().copied().fold(0.0, f64::max);
    Ok((worst < 1.0, worst))
}

fn fit_scale_equivariant(rng: &mut ChaCha8Rng) -> Outcome {
    let slope = -rng.gen_range(0.1..1.5);
    let scale = rng.gen_range(0.01..100.0);
    let times: Vec<f64> = (0..30).map(|i| 100.0 * 10f64.powf(i as f64 / 14.5)).collect();
    let base: Vec<f64> = times.iter().map(|t| t.powf(slope) * (1.0 + 0.1 * (t.ln()).sin())).collect();
    let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
    let (a, b) = (fit_decay(&times, &base, (1e2, 1e4))?, fit_decay(&times, &scaled, (1e2, 1e4))?);
    let err = (a.slope - b.slope).abs().max((b.intercept - a.intercept - scale.ln()).abs());
    Ok((err <= 1e-10, err))
}

fn gronwall_monotone(rng: &mut ChaCha8Rng) -> Outcome {
    // keeps bΓ(β)T^β moderate; E_{β,·} grows like exp(z^{1/β})
    let grid = TimeGrid::uniform(rng.gen_range(0.5..2.0), 128)?;
    let beta = rng.gen_range(0.3..1.0);
    let b = rng.gen_range(0.0..1.0);
    let a0 = rng.gen_range(0.0..1.0);
    let a: Vec<f64> = grid.points().iter().map(|t| a0 + 0.3 * t).collect();
    let env = gronwall_envelope(&grid, &a, b, beta)?;
    let bigger = gronwall_envelope(&grid, &a, b + 0.5, beta)?;
    let ok = env.iter().zip(&a).all(|(e, a)| e >= a) && bigger.iter().zip(&env).all(|(x, y)| x >= y);
    let gap = env.iter().zip(&a).map(|(e, a)| e - a).fold(f64::INFINITY, f64::min);
    Ok((ok, gap))
}
