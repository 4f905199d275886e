//! The two-parameter Mittag-Leffler function
//!
//! ```text
//! E_{α,γ}(z) = Σ_{k≥0} z^k / Γ(αk + γ)
//! ```
//!
//! evaluated by one of three routes:
//!
//! * the power series, when `|z| ≤ series_radius` and the largest term is
//!   small enough that cancellation cannot eat the tolerance (always on the
//!   positive real axis, where every term is positive);
//! * on the negative real axis with `0 < α < 1`, the positive-density
//!   representation obtained by collapsing the Hankel contour onto the cut,
//!
//!   ```text
//!   E_{α,γ}(-x) = 1/(απ) ∫₀^∞ χ^{(1-γ)/α} e^{-χ^{1/α}}
//!                 (χ sin(π(1-γ)) + x sin(π(1-γ+α))) / (χ² + 2χx cos(πα) + x²) dχ,
//!   ```
//!
//!   valid for `γ < 1 + α` (larger `γ` are brought into range by the
//!   recurrence `E_{α,γ}(z) = (E_{α,γ-α}(z) - 1/Γ(γ-α)) / z`). The endpoint
//!   weight `χ^{(1-γ)/α}` is integrated by a Gauss-Jacobi rule on a small
//!   singular cell, the rest adaptively;
//! * the algebraic asymptotic expansion `-Σ_{k≥1} z^{-k}/Γ(γ-αk)`, plus the
//!   exponential term inside `|arg z| < απ`, for large `|z|`.
//!
//! For `α = 1` on the negative axis the Kummer transformation
//! `E_{1,γ}(-x) = e^{-x}/Γ(γ) Σ_k (γ-1)/(γ-1+k) x^k/k!` gives a series of
//! positive terms.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Regime, Result};
use crate::fraccalc::{caputo_l1, TimeGrid};
use crate::quadrature::{adaptive, GaussJacobi};
use crate::special::{ln_gamma, rgamma};

const MAX_SERIES_TERMS: usize = 100_000;
const SINGULAR_CELL_NODES: usize = 64;

/// Parameters of one Mittag-Leffler evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Below this modulus the power series is preferred.
    pub series_radius: f64,
    /// Absolute error target.
    pub target_tol: f64,
}

impl MLParams {
    pub const DEFAULT_RADIUS: f64 = 5.0;
    pub const DEFAULT_TOL: f64 = 1e-13;

    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        let p = MLParams {
            alpha,
            gamma,
            series_radius: Self::DEFAULT_RADIUS,
            target_tol: Self::DEFAULT_TOL,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        self.target_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        self.series_radius = radius;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::invalid("alpha", format!("need 0 < alpha < 2, got {}", self.alpha)));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid("gamma", format!("need gamma > 0, got {}", self.gamma)));
        }
        if !(self.series_radius > 0.0 && self.series_radius.is_finite()) {
            return Err(Error::invalid("series_radius", "must be positive and finite"));
        }
        if !(self.target_tol > 0.0 && self.target_tol <= 1e-6) {
            return Err(Error::invalid(
                "target_tol",
                format!("need 0 < target_tol <= 1e-6, got {}", self.target_tol),
            ));
        }
        Ok(())
    }

    fn failure(&self, regime: Regime, z: Complex64, reason: impl Into<String>) -> Error {
        Error::Evaluation {
            regime,
            re: z.re,
            im: z.im,
            reason: reason.into(),
        }
    }
}

/// `E_{α,γ}(z)` to within `params.target_tol` (absolute).
pub fn mittag_leffler(params: &MLParams, z: Complex64) -> Result<Complex64> {
    params.validate()?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::invalid("z", "argument must be finite"));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(rgamma(params.gamma), 0.0));
    }
    if z.im == 0.0 {
        return mittag_leffler_real(params, z.re).map(|v| Complex64::new(v, 0.0));
    }
    let series = if z.norm() <= params.series_radius {
        Some(series_sum(params, z))
    } else {
        None
    };
    if let Some(Ok(v)) = series {
        return Ok(v);
    }
    match asymptotic(params, z) {
        Ok(v) => Ok(v),
        Err(e) => match series {
            Some(Err(se)) => Err(se),
            _ => Err(e),
        },
    }
}

/// Real-argument convenience wrapper around [`mittag_leffler`].
pub fn mittag_leffler_real(params: &MLParams, x: f64) -> Result<f64> {
    params.validate()?;
    if !x.is_finite() {
        return Err(Error::invalid("z", "argument must be finite"));
    }
    if x == 0.0 {
        return Ok(rgamma(params.gamma));
    }
    let z = Complex64::new(x, 0.0);
    if x > 0.0 {
        return series_sum(params, z).map(|v| v.re);
    }
    let magnitude = -x;
    if params.alpha == 1.0 {
        return exponential_order_negative(params, magnitude);
    }
    if magnitude <= params.series_radius {
        if let Ok(v) = series_sum(params, z) {
            return Ok(v.re);
        }
    }
    if params.alpha < 1.0 {
        return negative_axis_integral(params, magnitude);
    }
    asymptotic(params, z).map(|v| v.re)
}

/// Shorthand for real arguments with default radius and tolerance.
pub fn ml(alpha: f64, gamma: f64, x: f64) -> Result<f64> {
    mittag_leffler_real(&MLParams::new(alpha, gamma)?, x)
}

fn term_magnitude_ln(params: &MLParams, k: usize, ln_abs_z: f64) -> f64 {
    k as f64 * ln_abs_z - ln_gamma(params.alpha * k as f64 + params.gamma)
}

/// Power series with a remainder-based stop and a cancellation guard.
///
/// Stops once three consecutive non-increasing terms fall below
/// `target_tol / 10`. Fails if the largest term is so big that rounding alone
/// could exceed the tolerance.
pub fn series_sum(params: &MLParams, z: Complex64) -> Result<Complex64> {
    let ln_abs_z = z.norm().ln();
    let theta = z.arg();
    let threshold = params.target_tol / 10.0;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut max_term: f64 = 0.0;
    let mut small_run = 0;
    let mut prev_mag = f64::INFINITY;
    for k in 0..MAX_SERIES_TERMS {
        let arg = params.alpha * k as f64 + params.gamma;
        let ln_mag = term_magnitude_ln(params, k, ln_abs_z);
        if ln_mag > 700.0 {
            return Err(params.failure(Regime::Series, z, "series term overflow"));
        }
        let term = if k as f64 * ln_abs_z.abs() < 600.0 && arg < 170.0 {
            z.powu(k as u32) * rgamma(arg)
        } else {
            Complex64::from_polar(ln_mag.exp(), k as f64 * theta)
        };
        let mag = term.norm();
        sum += term;
        max_term = max_term.max(mag);
        if mag < threshold && mag <= prev_mag {
            small_run += 1;
            if small_run >= 3 {
                // absolute tolerance, relaxed to relative once |E| itself is large
                let rounding = max_term * f64::EPSILON * 8.0;
                if rounding > params.target_tol.max(sum.norm() * 1e-14) {
                    return Err(params.failure(
                        Regime::Series,
                        z,
                        format!("cancellation: largest term {max_term:e} swamps tolerance"),
                    ));
                }
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
        prev_mag = mag;
    }
    Err(params.failure(Regime::Series, z, "iteration cap reached"))
}

/// Negative-axis integral `E_{α,γ}(-x)` for `0 < α < 1`, `x > 0`.
pub fn negative_axis_integral(params: &MLParams, x: f64) -> Result<f64> {
    let (alpha, gamma) = (params.alpha, params.gamma);
    if !(alpha > 0.0 && alpha < 1.0) || !(x > 0.0) {
        return Err(Error::invalid("alpha", "negative-axis integral needs 0 < alpha < 1 and x > 0"));
    }
    if gamma >= 1.0 + alpha {
        // E_{α,γ}(z) = (E_{α,γ-α}(z) - 1/Γ(γ-α)) / z with z = -x
        let lower = MLParams {
            gamma: gamma - alpha,
            target_tol: params.target_tol * x.min(1.0),
            ..*params
        };
        let inner = negative_axis_integral(&lower, x)?;
        return Ok((rgamma(gamma - alpha) - inner) / x);
    }
    let p = (1.0 - gamma) / alpha;
    let s1 = (PI * (1.0 - gamma)).sin();
    let s2 = (PI * (1.0 - gamma + alpha)).sin();
    let c = (PI * alpha).cos();
    let inv_alpha = 1.0 / alpha;
    let pref = 1.0 / (alpha * PI);
    // integrand without the χ^p weight
    let smooth = |chi: f64| {
        let den = chi * chi + 2.0 * chi * x * c + x * x;
        pref * (-chi.powf(inv_alpha)).exp() * (chi * s1 + x * s2) / den
    };
    let u_max = 60.0 + 10.0 * (p * alpha).max(0.0);
    let chi_max = u_max.powf(alpha);
    let cell = 1e-8 * x.min(1.0);
    let rule = GaussJacobi::new(SINGULAR_CELL_NODES, 0.0, p)?;
    let head = rule.integrate_left_cell(cell, smooth);
    let tol = params.target_tol / 4.0;
    let body = adaptive(|chi| chi.powf(p) * smooth(chi), cell, chi_max, tol, 1e-15).map_err(|e| {
        params.failure(Regime::NegativeAxisIntegral, Complex64::new(-x, 0.0), e.to_string())
    })?;
    Ok(head + body.value)
}

// E_{1,γ}(-x), x > 0.
fn exponential_order_negative(params: &MLParams, x: f64) -> Result<f64> {
    let gamma = params.gamma;
    if gamma == 1.0 {
        return Ok((-x).exp());
    }
    if gamma < 1.0 {
        // E_{1,γ}(z) = 1/Γ(γ) + z E_{1,γ+1}(z)
        let upper = MLParams { gamma: gamma + 1.0, ..*params };
        return Ok(rgamma(gamma) - x * exponential_order_negative(&upper, x)?);
    }
    if x > 600.0 {
        return asymptotic(params, Complex64::new(-x, 0.0)).map(|v| v.re);
    }
    // Kummer: ₁F₁(1; γ; -x) = e^{-x} ₁F₁(γ-1; γ; x), all terms positive
    let g1 = gamma - 1.0;
    let mut power = 1.0; // x^k / k!
    let mut sum = 1.0;
    let mut k = 0usize;
    loop {
        k += 1;
        power *= x / k as f64;
        let term = power * g1 / (g1 + k as f64);
        sum += term;
        if k as f64 > x && term < sum * 1e-17 {
            break;
        }
        if k > MAX_SERIES_TERMS {
            return Err(params.failure(Regime::Series, Complex64::new(-x, 0.0), "Kummer series cap"));
        }
    }
    Ok((-x).exp() * sum * rgamma(gamma))
}

/// Asymptotic expansion for large `|z|`, truncated at the smallest term.
pub fn asymptotic(params: &MLParams, z: Complex64) -> Result<Complex64> {
    let (alpha, gamma) = (params.alpha, params.gamma);
    let mut sum = Complex64::new(0.0, 0.0);
    if z.arg().abs() < alpha * PI {
        let root = z.powf(1.0 / alpha);
        let e = root.exp();
        if !(e.re.is_finite() && e.im.is_finite()) {
            return Err(params.failure(Regime::Asymptotic, z, "exponential term overflow"));
        }
        sum += z.powf((1.0 - gamma) / alpha) * e / alpha;
    }
    // for α = 1 and integer γ the reciprocal gammas vanish from k = γ on
    let terminates_at = (alpha == 1.0 && gamma.fract() == 0.0).then_some(gamma as usize);
    let inv = 1.0 / z;
    let mut inv_pow = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut last = f64::INFINITY;
    for k in 1..400 {
        if terminates_at == Some(k) {
            return Ok(sum);
        }
        inv_pow *= inv;
        let term = inv_pow * rgamma(gamma - alpha * k as f64);
        let mag = term.norm();
        if mag > prev && mag > 0.0 {
            break;
        }
        sum -= term;
        if mag != 0.0 {
            prev = mag;
            last = mag;
        }
        if mag < params.target_tol / 10.0 && mag != 0.0 {
            return Ok(sum);
        }
    }
    if last <= params.target_tol {
        Ok(sum)
    } else {
        Err(params.failure(
            Regime::Asymptotic,
            z,
            format!("smallest asymptotic term {last:e} above tolerance"),
        ))
    }
}

/// Residuals of the two Mittag-Leffler derivative identities at `t`:
///
/// * `|d/dt E_{α,1}(-μt^α) + μ t^{α-1} E_{α,α}(-μt^α)|` with a central
///   difference of step `h`;
/// * `|∂ₜ^α E_{α,1}(-μt^α) + μ E_{α,1}(-μt^α)|` with the L1 Caputo scheme on
///   the uniform grid of step `h` over `[0, t]`.
pub fn ml_derivative_residuals(alpha: f64, mu: f64, t: f64, h: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("need 0 < alpha < 1, got {alpha}")));
    }
    if !(mu >= 0.0) {
        return Err(Error::invalid("mu", "must be non-negative"));
    }
    if !(h > 0.0 && t > h) {
        return Err(Error::invalid("t", format!("need t > h > 0, got t = {t}, h = {h}")));
    }
    let tol = 1e-14;
    let e1 = MLParams::new(alpha, 1.0)?.with_tol(tol)?;
    let ea = MLParams::new(alpha, alpha)?.with_tol(tol)?;
    let relax = |s: f64| mittag_leffler_real(&e1, -mu * s.powf(alpha));

    let derivative = (relax(t + h)? - relax(t - h)?) / (2.0 * h);
    let rhs = -mu * t.powf(alpha - 1.0) * mittag_leffler_real(&ea, -mu * t.powf(alpha))?;
    let first = (derivative - rhs).abs();

    let n_steps = (t / h).round().max(1.0) as usize;
    let grid = TimeGrid::new(0.0, t, n_steps)?;
    let values = grid
        .points()
        .iter()
        .map(|&s| relax(s))
        .collect::<Result<Vec<_>>>()?;
    let caputo = caputo_l1(&grid, &values, alpha)?;
    let second = (caputo[n_steps] + mu * values[n_steps]).abs();
    Ok((first, second))
}

/// Empirical constant `Ĉ = max (1 + x) |E_{α,γ}(-x)|` over `x` log-spaced in
/// `[x_min, x_max]`.
pub fn sector_bound_constant(alpha: f64, gamma: f64, x_min: f64, x_max: f64, samples: usize) -> Result<f64> {
    if !(x_min > 0.0 && x_max > x_min) || samples < 2 {
        return Err(Error::invalid("samples", "need 0 < x_min < x_max and at least two samples"));
    }
    let params = MLParams::new(alpha, gamma)?;
    let ratio = (x_max / x_min).ln();
    let mut best: f64 = 0.0;
    for i in 0..samples {
        let x = x_min * (ratio * i as f64 / (samples - 1) as f64).exp();
        let v = mittag_leffler_real(&params, -x)?;
        best = best.max((1.0 + x) * v.abs());
    }
    Ok(best)
}

/// Right-hand side of the exponential-kernel identity
/// `∫ₛᵗ (t-τ)^{-β}/Γ(1-β) e^{-λ(τ-s)} dτ = (t-s)^{1-β} E_{1,2-β}(-λ(t-s))`.
pub fn exponential_kernel_integral(beta: f64, lambda: f64, s: f64, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::invalid("beta", format!("need 0 <= beta < 1, got {beta}")));
    }
    if !(t >= s) {
        return Err(Error::invalid("t", "need s <= t"));
    }
    let width = t - s;
    if width == 0.0 {
        return Ok(0.0);
    }
    let params = MLParams::new(1.0, 2.0 - beta)?;
    Ok(width.powf(1.0 - beta) * mittag_leffler_real(&params, -lambda * width)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use approx::assert_abs_diff_eq;

    #[test]
    fn value_at_origin() {
        let p = MLParams::new(0.7, 1.3).unwrap();
        let v = mittag_leffler(&p, Complex64::new(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v.re, 1.0 / gamma(1.3), epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn exponential_case() {
        assert_abs_diff_eq!(ml(1.0, 1.0, -2.0).unwrap(), (-2.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(ml(1.0, 1.0, 3.0).unwrap(), 3.0f64.exp(), epsilon = 1e-12);
    }

    #[test]
    fn half_order_matches_erfc() {
        // E_{1/2,1}(-1) = e·erfc(1), frozen from a 40-digit evaluation
        assert_abs_diff_eq!(ml(0.5, 1.0, -1.0).unwrap(), 0.427_583_576_155_807_0, epsilon = 1e-13);
    }

    #[test]
    fn e_one_two_closed_form() {
        // E_{1,2}(z) = (e^z - 1)/z
        for x in [0.5f64, 3.0, 12.0, 80.0, 900.0] {
            let exact = (1.0 - (-x).exp()) / x;
            assert_abs_diff_eq!(ml(1.0, 2.0, -x).unwrap(), exact, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(ml(1.0, 2.0, 2.0).unwrap(), (2.0f64.exp() - 1.0) / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn integral_and_series_agree_near_switch() {
        for &(alpha, gamma) in &[(0.9, 1.0), (0.8, 1.0), (0.85, 0.85), (0.9, 1.5)] {
            // terms reach ~1e3 past the radius, so rounding alone is ~1e-12
            let p = MLParams::new(alpha, gamma).unwrap().with_tol(1e-11).unwrap();
            for &x in &[4.5, 5.5] {
                let s = series_sum(&p, Complex64::new(-x, 0.0)).unwrap().re;
                let q = negative_axis_integral(&p, x).unwrap();
                assert!((s - q).abs() <= 10.0 * p.target_tol, "{alpha} {gamma} {x}: {s} vs {q}");
            }
        }
    }

    #[test]
    fn series_refuses_when_cancellation_dominates() {
        let p = MLParams::new(0.25, 1.0).unwrap();
        let err = series_sum(&p, Complex64::new(-4.9, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Evaluation { regime: Regime::Series, .. }));
        // the dispatcher falls back to the integral
        assert!(ml(0.25, 1.0, -4.9).unwrap() > 0.0);
    }

    #[test]
    fn asymptotic_expansion_off_axis() {
        // E_{1,2}(z) = (e^z - 1)/z; the expansion terminates after one algebraic term
        let p = MLParams::new(1.0, 2.0).unwrap();
        let z = Complex64::from_polar(30.0, 0.8 * PI);
        let v = mittag_leffler(&p, z).unwrap();
        let exact = (z.exp() - 1.0) / z;
        assert!((v - exact).norm() < 1e-13);
        // on the negative axis the expansion agrees with the positive-density integral
        let p = MLParams::new(0.5, 1.0).unwrap();
        let ar = asymptotic(&p, Complex64::new(-30.0, 0.0)).unwrap().re;
        assert_abs_diff_eq!(ar, negative_axis_integral(&p, 30.0).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(MLParams::new(0.0, 1.0).is_err());
        assert!(MLParams::new(0.5, -1.0).is_err());
        assert!(MLParams::new(0.5, 1.0).unwrap().with_tol(1e-3).is_err());
        assert!(ml_derivative_residuals(0.5, 1.0, 0.1, 0.2).is_err());
    }

    #[test]
    fn derivative_residuals_vanish_for_zero_rate() {
        let (r1, r2) = ml_derivative_residuals(0.4, 0.0, 1.0, 0.01).unwrap();
        assert!(r1 < 1e-14 && r2 < 1e-14);
    }
    #[test]
    fn matches_high_precision_series() {
        // reference values from a 300+ digit evaluation of the power series
        let cases = [
            (0.25, 1.0, -5.0, 0.142_798_946_425_873_695),
            (0.75, 1.0, -3.0, 0.125_855_136_911_841_527),
            (0.5, 0.5, -2.0, 0.053_398_230_926_744_799),
            (0.3, 1.5, -7.0, 0.138_311_852_411_687_161),
            (0.9, 1.0, -20.0, 0.005_749_507_816_109_112_6),
            (0.6, 1.8, -12.0, 0.086_110_883_198_457_735),
            (0.5, 1.0, -30.0, 0.018_795_888_861_416_751),
            (1.0, 1.5, -25.0, 0.023_049_192_366_187_318),
            (1.0, 0.7, -40.0, -0.005_977_453_877_881_429_2),
            (0.8, 0.8, -100.0, 1.786_795_194_987_607e-5),
            (0.9, 1.0, -5.5, 0.029_515_085_110_855_624),
            (0.9, 1.0, -4.5, 0.041_095_646_312_693_470),
        ];
        for (a, g, x, want) in cases {
            let got = ml(a, g, x).unwrap();
            assert!((got - want).abs() <= 1e-12, "E_({a},{g})({x}) = {got}, want {want}");
        }
    }
}
