//! Core problem types built from configuration entries.

use std::f64::consts::PI;

use fracmix::fraccalc::{Coefficient, FracTerm, OrderSpec};
use fracmix::pde1d::{build_operator, EllipticOp1D, MixedProblem, Reaction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Memory terms `q_j(t) = q_j (1 + a sin(ωt))`. All-zero `q` gives no memory.
pub fn order_spec(cfg: &ExperimentConfig) -> Result<OrderSpec, CliError> {
    let alphas = cfg.reals("alpha")?;
    let qs = cfg.reals("q")?;
    if alphas.len() != qs.len() {
        return Err(CliError::Config(format!("alpha has {} entries but q has {}", alphas.len(), qs.len())));
    }
    if qs.iter().all(|&q| q == 0.0) {
        return Ok(OrderSpec::none());
    }
    let amp = cfg.real("q_amplitude")?;
    let freq = cfg.real("q_frequency")?;
    if !(amp.abs() < 1.0) {
        return Err(CliError::Config(format!("q_amplitude: need |a| < 1, got {amp}")));
    }
    let terms = alphas
        .iter()
        .zip(&qs)
        .map(|(&alpha, &q)| {
            let coeff = if amp == 0.0 {
                Coefficient::Constant(q)
            } else {
                Coefficient::varying(move |t| q * (1.0 + amp * (freq * t).sin()))
            };
            FracTerm::new(alpha, coeff)
        })
        .collect();
    let q_min = qs.iter().copied().fold(f64::INFINITY, f64::min);
    let q_max = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(OrderSpec::new(terms, q_min * (1.0 - amp.abs()), q_max * (1.0 + amp.abs()))?)
}

/// `A = -(a(x) u')'` with `a(x) = a0 + a1 x`; `nu = auto` takes `min a`.
pub fn operator(cfg: &ExperimentConfig) -> Result<EllipticOp1D, CliError> {
    let length = cfg.real("length")?;
    let a0 = cfg.real("a0")?;
    let a1 = cfg.real("a1")?;
    let nu = match cfg.text("nu") {
        "auto" => a0.min(a0 + a1 * length),
        _ => cfg.real("nu")?,
    };
    Ok(build_operator(length, cfg.count("n_x")?, move |x| a0 + a1 * x, nu)?)
}

/// Initial state: `parabola` x(L-x), `sine` sin(πx/L), `mode:k` the k-th
/// discrete eigenvector, or `random` (seeded sine series with 1/k decay).
pub fn initial_state(cfg: &ExperimentConfig, op: &EllipticOp1D) -> Result<Vec<f64>, CliError> {
    let l = op.length();
    let x = op.x_grid();
    let spec = cfg.text("u0");
    let values = match spec {
        "parabola" => x.iter().map(|&x| x * (l - x)).collect(),
        "sine" => x.iter().map(|&x| (PI * x / l).sin()).collect(),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
            let amps: Vec<f64> = (1..=8).map(|k| rng.gen_range(-1.0..1.0) / k as f64).collect();
            x.iter()
                .map(|&x| amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * PI * x / l).sin()).sum())
                .collect()
        }
        other => {
            let k = other
                .strip_prefix("mode:")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1 && k <= op.n_x())
                .ok_or_else(|| CliError::Config(format!("u0: expected parabola|sine|random|mode:<k>, got '{other}'")))?;
            op.mode(k - 1).to_vec()
        }
    };
    Ok(values)
}

/// Mixed problem from the space and memory keys, with constant `c` and an
/// optional constant source.
pub fn mixed_problem(cfg: &ExperimentConfig, horizon: f64, source: f64) -> Result<MixedProblem, CliError> {
    let op = operator(cfg)?;
    let u0 = initial_state(cfg, &op)?;
    let mut p = MixedProblem::new(op, order_spec(cfg)?, u0, horizon)?.with_reaction(Reaction::Constant(cfg.real("c")?));
    if source != 0.0 {
        p = p.with_source(move |_, _| source);
    }
    Ok(p)
}
