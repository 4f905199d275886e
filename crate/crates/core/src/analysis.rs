//! Post-processing that turns decay estimates and integral inequalities
//! into numbers: power-law fits, two-sided bound checks, the fractional
//! Grönwall envelope and discrete energy residuals.

use crate::error::{Error, Result};
use crate::fraccalc::{OrderSpec, TimeGrid};
use crate::fracode::{relaxation_residuals, DecayConstants};
use crate::mlfunc::{mittag_leffler_real, MLParams};
use crate::special::gamma;
use crate::trajectory::Trajectory;

/// Least-squares line through `(ln t, ln ‖u‖)` over a time window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub rms_residual: f64,
    pub n_points: usize,
}

impl DecayFit {
    /// Residual level below which the data are treated as a power law.
    pub const POWER_LAW_RMS: f64 = 1e-2;

    pub fn looks_like_power_law(&self) -> bool {
        self.rms_residual <= Self::POWER_LAW_RMS
    }
}

/// Default fitting window.
pub const DEFAULT_WINDOW: (f64, f64) = (1e2, 1e4);

/// Fit `ln ‖u(t)‖ ≈ intercept + slope · ln t` over `window`.
pub fn fit_decay(times: &[f64], norms: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if times.len() != norms.len() {
        return Err(Error::invalid("norms", "times and norms differ in length"));
    }
    if !(window.0 >= 1.0 && window.1 > window.0) {
        return Err(Error::invalid("window", format!("need 1 <= t_min < t_max, got {window:?}")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &n) in times.iter().zip(norms) {
        if t >= window.0 && t <= window.1 {
            if !(n > 0.0) {
                return Err(Error::invalid("norms", format!("nonpositive norm {n} at t = {t}")));
            }
            xs.push(t.ln());
            ys.push(n.ln());
        }
    }
    let n_points = xs.len();
    if n_points < 5 {
        return Err(Error::invalid("window", format!("need at least 5 points in the window, got {n_points}")));
    }
    let m = n_points as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(DecayFit { slope, intercept, window, rms_residual: (ss / m).sqrt(), n_points })
}

/// Result of [`sandwich_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub passed: bool,
    /// `min |v(t)| / (c_lower |v0| t^{-α})`; at least 1 on a pass.
    pub lower_margin: f64,
    /// `max |v(t)| / (c_upper |v0| t^{-α})`; at most 1 on a pass.
    pub upper_margin: f64,
    /// Indices where either bound fails.
    pub violations: Vec<usize>,
}

/// Check `c_lower |v0| t^{-α} ≤ |v(t)| ≤ c_upper |v0| t^{-α}` pointwise.
pub fn sandwich_check(times: &[f64], values: &[f64], constants: &DecayConstants, v0: f64) -> Result<SandwichReport> {
    if times.len() != values.len() {
        return Err(Error::invalid("values", "times and values differ in length"));
    }
    if let Some(&t) = times.iter().find(|&&t| !(t >= constants.t0)) {
        return Err(Error::invalid("times", format!("time {t} precedes t0 = {}", constants.t0)));
    }
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin: f64 = 0.0;
    let mut violations = Vec::new();
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        let scale = v0.abs() * t.powf(-constants.alpha);
        let lo = constants.c_lower * scale;
        let hi = constants.c_upper * scale;
        let a = v.abs();
        if scale > 0.0 {
            lower_margin = lower_margin.min(a / lo);
            upper_margin = upper_margin.max(a / hi);
        }
        if a < lo || a > hi {
            violations.push(i);
        }
    }
    Ok(SandwichReport { passed: violations.is_empty(), lower_margin, upper_margin, violations })
}

/// Envelope `a(t) + c ∫₀ᵗ (t-s)^{β-1} E_{β,β}(c (t-s)^β) a(s) ds`,
/// `c = bΓ(β)`, for any `v` with `v(t) ≤ a(t) + b ∫₀ᵗ (t-s)^{β-1} v(s) ds`.
///
/// `a` is interpolated linearly between nodes and integrated exactly
/// against the kernel through the moments
/// `∫₀^σ k = σ^β E_{β,β+1}(cσ^β)` and
/// `∫₀^σ u k(u) du = σ^{β+1} (E_{β,β+1} - E_{β,β+2})(cσ^β)`.
pub fn gronwall_envelope(grid: &TimeGrid, a: &[f64], b: f64, beta: f64) -> Result<Vec<f64>> {
    if a.len() != grid.points().len() {
        return Err(Error::invalid("a", "one value per grid node required"));
    }
    if let Some(&v) = a.iter().find(|&&v| !(v >= 0.0)) {
        return Err(Error::invalid("a", format!("need a >= 0, got {v}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::invalid("b", format!("need b >= 0, got {b}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid("beta", format!("need 0 < beta <= 1, got {beta}")));
    }
    if b == 0.0 {
        return Ok(a.to_vec());
    }
    let c = b * gamma(beta);
    let tau = grid.step();
    let n_steps = grid.n_steps();
    let p1 = MLParams::new(beta, beta + 1.0)?;
    let p2 = MLParams::new(beta, beta + 2.0)?;
    let mut k0 = vec![0.0; n_steps + 1];
    let mut k1 = vec![0.0; n_steps + 1];
    for m in 1..=n_steps {
        let s = m as f64 * tau;
        let z = c * s.powf(beta);
        let e1 = mittag_leffler_real(&p1, z)?;
        let e2 = mittag_leffler_real(&p2, z)?;
        k0[m] = s.powf(beta) * e1;
        k1[m] = s.powf(beta + 1.0) * (e1 - e2);
    }
    // lag-m cell σ ∈ [(m-1)τ, mτ]: left and right node weights
    let mut w_left = vec![0.0; n_steps + 1];
    let mut w_right = vec![0.0; n_steps + 1];
    for m in 1..=n_steps {
        let hi = m as f64 * tau;
        let d0 = k0[m] - k0[m - 1];
        let d1 = k1[m] - k1[m - 1];
        let slope_part = (hi * d0 - d1) / tau;
        w_left[m] = d0 - slope_part;
        w_right[m] = slope_part;
    }
    let mut out = a.to_vec();
    for n in 1..=n_steps {
        let mut acc = 0.0;
        for j in 0..n {
            // cell [t_j, t_{j+1}] sits at lag n - j
            let m = n - j;
            acc += w_left[m] * a[j] + w_right[m] * a[j + 1];
        }
        out[n] += c * acc;
    }
    Ok(out)
}

/// Discrete energy residuals
/// `D_t‖u^n‖ + Σ q_j(t_n) D^{α_j}‖u^n‖ + λ_1 ‖u^n‖` along a uniform-grid
/// trajectory (entry 0 is 0).
pub fn energy_residuals(traj: &Trajectory, spec: &OrderSpec, lambda1: f64) -> Result<Vec<f64>> {
    let grid = traj
        .grid()
        .ok_or_else(|| Error::invalid("trajectory", "energy residuals need a uniform-grid trajectory"))?;
    relaxation_residuals(traj.norms(), grid, spec, lambda1)
}
