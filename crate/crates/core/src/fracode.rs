//! The scalar mixed-order relaxation equation
//! `v' + Σ_j q_j(t) ∂ₜ^{α_j} v + λ v = f`, `v(0) = v0`.
//!
//! Two solvers: implicit L1 stepping for any [`OrderSpec`], and for a single
//! constant-coefficient term the Laplace-inversion representation
//! `v(t) = v0 ∫₀^∞ e^{-rt} H(r) dr` with an explicit positive density `H`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fraccalc::{HistoryKernel, L1Weights, OrderSpec, TimeGrid};
use crate::quadrature::{adaptive, GaussJacobi};
use crate::special::{gamma, lower_incomplete_gamma};
use crate::trajectory::Trajectory;

/// Shared scalar function of time.
pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `v' + Σ q_j(t) ∂ₜ^{α_j} v + λ v = f(t)` on `(0, horizon]`, `v(0) = v0`.
#[derive(Clone)]
pub struct FracOdeProblem {
    pub spec: OrderSpec,
    pub lambda: f64,
    pub v0: f64,
    pub forcing: Option<TimeFn>,
    pub horizon: f64,
}

impl FracOdeProblem {
    pub fn new(spec: OrderSpec, lambda: f64, v0: f64, horizon: f64) -> Result<Self> {
        let p = FracOdeProblem { spec, lambda, v0, forcing: None, horizon };
        p.validate()?;
        Ok(p)
    }

    pub fn with_forcing<F: Fn(f64) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.forcing = Some(Arc::new(f));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("need lambda >= 0, got {}", self.lambda)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("need horizon > 0, got {}", self.horizon)));
        }
        if !self.v0.is_finite() {
            return Err(Error::invalid("v0", "initial value must be finite"));
        }
        Ok(())
    }

    fn forcing_at(&self, t: f64) -> f64 {
        self.forcing.as_ref().map_or(0.0, |f| f(t))
    }
}

impl fmt::Debug for FracOdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FracOdeProblem")
            .field("spec", &self.spec)
            .field("lambda", &self.lambda)
            .field("v0", &self.v0)
            .field("forcing", &self.forcing.as_ref().map(|_| ".."))
            .field("horizon", &self.horizon)
            .finish()
    }
}

pub(crate) fn check_covers(grid: &TimeGrid, horizon: f64) -> Result<()> {
    if grid.t_start() != 0.0 {
        return Err(Error::invalid("grid", "time grid must start at t = 0"));
    }
    if (grid.t_end() - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return Err(Error::invalid(
            "grid",
            format!("grid ends at {} but the horizon is {horizon}", grid.t_end()),
        ));
    }
    Ok(())
}

/// L1 weights and history kernel for each fractional term of `spec`.
pub(crate) fn term_kernels(spec: &OrderSpec, grid: &TimeGrid, dim: usize) -> Result<Vec<(f64, HistoryKernel)>> {
    spec.terms()
        .iter()
        .map(|term| {
            let w = L1Weights::new(term.alpha, grid.step(), grid.n_steps() + 1)?;
            Ok((w.b0(), HistoryKernel::new(w.into_vec(), dim)))
        })
        .collect()
}

/// Implicit L1 time stepping.
///
/// Step `n` solves
/// `(1/τ + Σ q_j(t_n) b_0^{(j)} + λ) v_n = v_{n-1}/τ + Σ q_j(t_n) (b_0^{(j)} v_{n-1} - h_n^{(j)}) + f(t_n)`,
/// where `h_n^{(j)}` is the L1 history of term `j`. The left coefficient is
/// positive, so every step is solvable.
pub fn solve_l1(problem: &FracOdeProblem, grid: &TimeGrid) -> Result<Trajectory> {
    problem.validate()?;
    check_covers(grid, problem.horizon)?;
    let t = grid.points();
    problem.spec.check_samples(t)?;
    let n_steps = grid.n_steps();
    let inv_tau = 1.0 / grid.step();
    let mut kernels = term_kernels(&problem.spec, grid, 1)?;
    let terms = problem.spec.terms();
    let mut values = vec![0.0; n_steps + 1];
    let mut diffs = vec![0.0; n_steps + 1];
    values[0] = problem.v0;
    let mut h = [0.0];
    for n in 1..=n_steps {
        let prev = values[n - 1];
        let mut lhs = inv_tau + problem.lambda;
        let mut rhs = prev * inv_tau + problem.forcing_at(t[n]);
        for (term, (b0, kernel)) in terms.iter().zip(kernels.iter_mut()) {
            let q = term.q.at(t[n]);
            kernel.history(n, &diffs, &mut h);
            lhs += q * *b0;
            rhs += q * (*b0 * prev - h[0]);
        }
        values[n] = rhs / lhs;
        diffs[n] = values[n] - prev;
    }
    Trajectory::from_scalars(t.to_vec(), values)?.with_grid(grid.clone())
}

/// Discrete residual `D_t v_n + Σ q_j(t_n) D^{α_j} v_n + λ v_n` with the
/// backward difference and the L1 scheme; entry 0 is 0.
pub fn relaxation_residuals(values: &[f64], grid: &TimeGrid, spec: &OrderSpec, lambda: f64) -> Result<Vec<f64>> {
    let mut r = crate::fraccalc::multi_term_apply(values, spec, grid)?;
    let inv_tau = 1.0 / grid.step();
    r[0] = 0.0;
    for n in 1..values.len() {
        r[n] += (values[n] - values[n - 1]) * inv_tau + lambda * values[n];
    }
    Ok(r)
}

/// Parameters of the positive density `H(r)` for a single constant
/// fractional term, with split point `δ` and truncation radius `r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensity {
    alpha: f64,
    q1: f64,
    lambda: f64,
    delta: f64,
    r_max: f64,
}

/// Tail budget relative to `|v0|`.
pub const TAIL_BUDGET: f64 = 1e-10;

/// Smallest evaluation time covered by the default truncation radius.
pub const DEFAULT_MIN_TIME: f64 = 1e-3;

const SINGULAR_CELL: f64 = 1e-13;
const JACOBI_NODES: usize = 64;
const MAX_JACOBI_NODES: usize = 1024;

impl SpectralDensity {
    /// `δ` is the root of `r + q₁ r^α = λ/2`; `r_max` covers
    /// [`DEFAULT_MIN_TIME`].
    pub fn new(alpha: f64, q1: f64, lambda: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("need 0 < alpha < 1, got {alpha}")));
        }
        if !(q1 > 0.0 && q1.is_finite()) {
            return Err(Error::invalid("q1", format!("need q1 > 0, got {q1}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("need lambda > 0, got {lambda}")));
        }
        let delta = split_point(alpha, q1, lambda);
        let mut p = SpectralDensity { alpha, q1, lambda, delta, r_max: f64::INFINITY };
        p.r_max = p.required_radius(DEFAULT_MIN_TIME);
        Ok(p)
    }

    /// Density for the single-term part of `spec` (validation error for
    /// anything but one constant term).
    pub fn from_spec(spec: &OrderSpec, lambda: f64) -> Result<Self> {
        match spec.terms() {
            [term] => match term.q.constant_value() {
                Some(q) => Self::new(term.alpha, q, lambda),
                None => Err(Error::invalid("q", "spectral representation needs a constant coefficient")),
            },
            _ => Err(Error::invalid("spec", "spectral representation needs exactly one fractional term")),
        }
    }

    /// Replace the split point; it must satisfy `λ - δ - q₁δ^α ≥ λ/2`.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= self.lambda) || !self.delta_condition_holds(delta) {
            return Err(Error::invalid(
                "delta",
                format!("delta = {delta} violates lambda - delta - q1 delta^alpha >= lambda/2"),
            ));
        }
        self.delta = delta;
        self.r_max = self.r_max.max(2.0 * delta);
        Ok(self)
    }

    pub fn with_r_max(mut self, r_max: f64) -> Result<Self> {
        if !(r_max > self.delta) {
            return Err(Error::invalid("r_max", format!("need r_max > delta = {}", self.delta)));
        }
        self.r_max = r_max;
        Ok(self)
    }

    /// Truncation radius large enough for every time `≥ t_min`.
    pub fn covering(mut self, t_min: f64) -> Self {
        self.r_max = self.r_max.max(self.required_radius(t_min));
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn q1(&self) -> f64 {
        self.q1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn delta_condition_holds(&self, delta: f64) -> bool {
        self.lambda - delta - self.q1 * delta.powf(self.alpha) >= 0.5 * self.lambda
    }

    /// `H(r)` without argument checks.
    pub fn density(&self, r: f64) -> f64 {
        r.powf(self.alpha - 1.0) * self.regular_part(r)
    }

    // H(r) / r^{α-1}
    fn regular_part(&self, r: f64) -> f64 {
        let (a, q, l) = (self.alpha, self.q1, self.lambda);
        let ra = r.powf(a);
        let d = l - r;
        let den = d * d + q * q * ra * ra + 2.0 * d * q * ra * (a * PI).cos();
        l * q * (a * PI).sin() / (PI * den)
    }

    /// Envelope `(1 + q₁ r^{α-1}) / (π q₁ sin(απ) δ^α)` of `H` on `[δ, ∞)`.
    pub fn envelope(&self, r: f64) -> f64 {
        (1.0 + self.q1 * r.powf(self.alpha - 1.0)) / self.envelope_denominator()
    }

    fn envelope_denominator(&self) -> f64 {
        PI * self.q1 * (self.alpha * PI).sin() * self.delta.powf(self.alpha)
    }

    /// Bound on `∫_R^∞ e^{-rt} H(r) dr` for `R ≥ δ`.
    pub fn tail_bound(&self, radius: f64, t: f64) -> f64 {
        self.envelope(radius) * (-radius * t).exp() / t
    }

    /// Smallest radius whose tail bound at `t` is within [`TAIL_BUDGET`].
    pub fn required_radius(&self, t: f64) -> f64 {
        let c = 1.0 / (self.envelope_denominator() * t * TAIL_BUDGET);
        let mut r = (2.0 * self.delta).max(1.0 / t);
        for _ in 0..100 {
            let next = ((c * (1.0 + self.q1 * r.powf(self.alpha - 1.0))).ln() / t).max(2.0 * self.delta);
            if (next - r).abs() <= 1e-12 * r {
                r = next;
                break;
            }
            r = next;
        }
        // the fixed point sits on the budget; step off it past rounding
        while self.tail_bound(r, t) > TAIL_BUDGET {
            r *= 1.0 + 1e-9;
        }
        r
    }
}

// largest δ in (0, λ] with δ + q₁δ^α ≤ λ/2
fn split_point(alpha: f64, q1: f64, lambda: f64) -> f64 {
    // same expression as the public condition, so rounding agrees
    let holds = |r: f64| lambda - r - q1 * r.powf(alpha) >= 0.5 * lambda;
    let (mut lo, mut hi) = (0.0, lambda);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    lo
}

/// `H(r)` for `r > 0`.
pub fn spectral_density(params: &SpectralDensity, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::invalid("r", format!("density needs r > 0, got {r}")));
    }
    Ok(params.density(r))
}

/// `v(t) = v0 ∫₀^∞ e^{-rt} H(r) dr` at each requested time.
///
/// `(0, δ]` is split into a tiny cell at the origin, integrated by
/// Gauss-Jacobi with weight `r^{α-1}`, and the rest, integrated adaptively
/// together with `[δ, r_max]`; the remainder beyond `r_max` is bounded by
/// [`SpectralDensity::tail_bound`].
pub fn solve_spectral(params: &SpectralDensity, v0: f64, times: &[f64]) -> Result<Trajectory> {
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("times", format!("evaluation times must be positive, got {t}")));
    }
    if !v0.is_finite() {
        return Err(Error::invalid("v0", "initial value must be finite"));
    }
    let values = if v0 == 0.0 {
        vec![0.0; times.len()]
    } else {
        if let Some(t_min) = times.iter().copied().reduce(f64::min) {
            let bound = params.tail_bound(params.r_max, t_min);
            if bound > TAIL_BUDGET {
                return Err(Error::Truncation { bound, budget: TAIL_BUDGET, r_max: params.r_max });
            }
        }
        let mut rules = Vec::new();
        times
            .iter()
            .map(|&t| laplace_integral(params, t, &mut rules).map(|v| v0 * v))
            .collect::<Result<Vec<_>>>()?
    };
    Trajectory::from_scalars(times.to_vec(), values)
}

fn laplace_integral(p: &SpectralDensity, t: f64, rules: &mut Vec<GaussJacobi>) -> Result<f64> {
    // g carries r^α terms, so the cell is shrunk until their share is negligible
    let cell = SINGULAR_CELL.powf(0.5 / p.alpha) * p.delta.min(1.0 / t);
    let regular = |r: f64| (-r * t).exp() * p.regular_part(r);
    let head = singular_cell(p, cell, &regular, rules)?;
    let weighted = |r: f64| r.powf(p.alpha - 1.0) * regular(r);
    let radius = p.r_max.min(p.required_radius(t)).max(p.delta);
    let body = adaptive(weighted, cell, p.delta, 1e-15, 1e-12)?;
    let tail = if radius > p.delta {
        adaptive(weighted, p.delta, radius, 1e-15, 1e-12)?.value
    } else {
        0.0
    };
    Ok(head + body.value + tail)
}

// ∫₀^c r^{α-1} g(r) dr; the node count doubles until the one-cell and
// two-half-cell estimates agree. `rules[k]` holds the rule with 64·2^k nodes.
fn singular_cell(p: &SpectralDensity, c: f64, g: &dyn Fn(f64) -> f64, rules: &mut Vec<GaussJacobi>) -> Result<f64> {
    let weighted = |r: f64| r.powf(p.alpha - 1.0) * g(r);
    let right_half = adaptive(weighted, 0.5 * c, c, 1e-300, 1e-14)?.value;
    let mut n = JACOBI_NODES;
    for k in 0.. {
        if rules.len() <= k {
            rules.push(GaussJacobi::new(n, 0.0, p.alpha - 1.0)?);
        }
        let rule = &rules[k];
        let whole = rule.integrate_left_cell(c, g);
        let split = rule.integrate_left_cell(0.5 * c, g) + right_half;
        let scale = whole.abs().max(1e-300);
        if (whole - split).abs() <= 1e-3 * TAIL_BUDGET * scale.max(1.0) || n >= MAX_JACOBI_NODES {
            if (whole - split).abs() > TAIL_BUDGET * scale.max(1.0) {
                return Err(Error::Quadrature { estimate: (whole - split).abs(), tolerance: TAIL_BUDGET });
            }
            return Ok(whole);
        }
        n *= 2;
    }
    unreachable!()
}

/// Constants of the two-sided decay estimate
/// `c_lower |v0| t^{-α} ≤ |v(t)| ≤ c_upper |v0| t^{-α}` for `t ≥ t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConstants {
    pub c_upper: f64,
    pub c_lower: f64,
    pub t0: f64,
    pub alpha: f64,
}

/// Upper constant `(2/π) q₁ sin(απ) Γ(α) + (t0^{α-1} + q₁Γ(α)) / (π q₁ sin(απ) δ^α)`
/// and lower constant `λ q₁ sin(απ) γ(α, t0) / (π (Λ + q₁)²)` with
/// `Λ = max(λ, 1 - λ)`, which bounds `|λ - r|` for `r ∈ [0, 1]`.
pub fn decay_constants(params: &SpectralDensity, t0: f64) -> Result<DecayConstants> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::invalid("t0", format!("need t0 > 0, got {t0}")));
    }
    if !params.delta_condition_holds(params.delta) {
        return Err(Error::invalid("delta", "split point violates the smallness condition"));
    }
    let (a, q, l) = (params.alpha, params.q1, params.lambda);
    let s = (a * PI).sin();
    let g = gamma(a);
    let c_upper = 2.0 / PI * q * s * g + (t0.powf(a - 1.0) + q * g) / (PI * q * s * params.delta.powf(a));
    let reach = l.max(1.0 - l);
    let c_lower = l * q * s / (PI * (reach + q).powi(2)) * lower_incomplete_gamma(a, t0);
    Ok(DecayConstants { c_upper, c_lower, t0, alpha: a })
}

/// Outcome of a discrete principle check.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail { index: usize, value: f64 },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// Report of [`max_principle_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPrincipleReport {
    pub verdict: Verdict,
    /// Whether residual ≤ tol everywhere and `w(0) ≤ tol`.
    pub hypothesis_holds: bool,
    pub max_residual: f64,
    pub max_value: f64,
    /// Amplification `1 + T (λ + Σ q_upper b_0^{(j)})`.
    pub kappa: f64,
}

fn scalar_on_grid(w: &Trajectory) -> Result<(Vec<f64>, TimeGrid)> {
    let grid = w
        .grid()
        .cloned()
        .ok_or_else(|| Error::invalid("trajectory", "principle checks need a uniform-grid trajectory"))?;
    Ok((w.scalar_values()?, grid))
}

/// Discrete maximum principle: if `D_t w + Σ q D^α w + λ w ≤ tol` at every
/// node and `w(0) ≤ tol`, then `max w ≤ tol·κ`. A trajectory violating the
/// hypothesis passes vacuously, with `hypothesis_holds = false`.
pub fn max_principle_check(w: &Trajectory, spec: &OrderSpec, lambda: f64, tol: f64) -> Result<MaxPrincipleReport> {
    let (values, grid) = scalar_on_grid(w)?;
    let residuals = relaxation_residuals(&values, &grid, spec, lambda)?;
    let max_residual = residuals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (index, max_value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let b0_sum: f64 = spec
        .terms()
        .iter()
        .map(|term| Ok(spec.q_upper() * L1Weights::new(term.alpha, grid.step(), 1)?.b0()))
        .sum::<Result<f64>>()?;
    let kappa = 1.0 + grid.t_end() * (lambda + b0_sum);
    let hypothesis_holds = max_residual <= tol && values[0] <= tol;
    let verdict = if !hypothesis_holds || max_value <= tol * kappa {
        Verdict::Pass
    } else {
        Verdict::Fail { index, value: max_value }
    };
    Ok(MaxPrincipleReport { verdict, hypothesis_holds, max_residual, max_value, kappa })
}

/// Sign of the fractional derivative: a nonnegative `z` with
/// `D_t z + Σ q D^α z + λ z ≤ tol` must have `D^{α_1} z ≤ tol` at every node
/// (`α_1` the lowest order). Needs `q_lower > 0` and `λ > 0`; a trajectory
/// violating the hypothesis gives [`Verdict::Inconclusive`].
pub fn frac_derivative_sign_check(z: &Trajectory, spec: &OrderSpec, lambda: f64, tol: f64) -> Result<Verdict> {
    if spec.is_empty() || !(spec.q_lower() > 0.0) {
        return Err(Error::invalid("q_lower", "the sign lemma needs q >= q_lower > 0"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("the sign lemma needs lambda > 0, got {lambda}")));
    }
    let (values, grid) = scalar_on_grid(z)?;
    if let Some(i) = values.iter().position(|&v| v < -tol) {
        return Ok(Verdict::Inconclusive { reason: format!("z({}) = {} is negative", grid.points()[i], values[i]) });
    }
    let residuals = relaxation_residuals(&values, &grid, spec, lambda)?;
    if let Some(i) = residuals.iter().position(|&r| r > tol) {
        return Ok(Verdict::Inconclusive {
            reason: format!("residual {} exceeds tol at t = {}", residuals[i], grid.points()[i]),
        });
    }
    let alpha = spec.terms()[0].alpha;
    let d = crate::fraccalc::caputo_l1(&grid, &values, alpha)?;
    Ok(match d.iter().position(|&v| v > tol) {
        Some(i) => Verdict::Fail { index: i, value: d[i] },
        None => Verdict::Pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn classical_relaxation() {
        let p = FracOdeProblem::new(OrderSpec::none(), 1.0, 1.0, 5.0).unwrap();
        let g = TimeGrid::uniform(5.0, 2560).unwrap();
        let tr = solve_l1(&p, &g).unwrap();
        let v = tr.scalar_values().unwrap();
        let err = g.points().iter().zip(&v).map(|(t, v)| (v - (-t).exp()).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "max error {err}");
        assert_eq!(v[0], 1.0);
    }

    #[test]
    fn density_at_lambda() {
        let p = SpectralDensity::new(0.5, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(spectral_density(&p, 1.0).unwrap(), 1.0 / PI, epsilon = 1e-15);
        assert!(spectral_density(&p, 0.0).is_err());
        assert!(spectral_density(&p, 4.0).unwrap() > 0.0);
    }

    #[test]
    fn split_point_meets_condition() {
        for &(a, q, l) in &[(0.25, 0.5, 0.5), (0.5, 1.0, 1.0), (0.75, 2.0, 2.0), (0.1, 10.0, 100.0)] {
            let p = SpectralDensity::new(a, q, l).unwrap();
            assert!(p.delta_condition_holds(p.delta()));
            assert!(p.delta() > 0.0 && p.delta() <= l);
            assert!(!p.delta_condition_holds(p.delta() * (1.0 + 1e-9)));
        }
        let p = SpectralDensity::new(0.5, 1.0, 1.0).unwrap();
        assert!(p.with_delta(0.9).is_err());
        assert!(p.with_delta(0.01).is_ok());
    }

    #[test]
    fn envelope_dominates_density() {
        for &(a, q, l) in &[(0.25, 0.5, 0.5), (0.5, 1.0, 1.0), (0.75, 2.0, 2.0), (0.75, 0.5, 2.0)] {
            let p = SpectralDensity::new(a, q, l).unwrap();
            for k in 0..200 {
                let r = p.delta() * 10f64.powf(k as f64 * 0.05);
                assert!(p.density(r) <= p.envelope(r), "{a} {q} {l} r={r}");
            }
        }
    }

    #[test]
    fn zero_initial_value_and_truncation() {
        let p = SpectralDensity::new(0.5, 1.0, 1.0).unwrap();
        let tr = solve_spectral(&p, 0.0, &[0.5, 1.0]).unwrap();
        assert!(tr.scalar_values().unwrap().iter().all(|&v| v == 0.0));
        let err = solve_spectral(&p, 1.0, &[1e-6]).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
        assert!(solve_spectral(&p.covering(1e-6), 1.0, &[1e-6]).is_ok());
        assert!(solve_spectral(&p, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn spectral_density_integrates_to_initial_value() {
        // v(0+) = v0: the density has unit mass
        let p = SpectralDensity::new(0.5, 1.0, 1.0).unwrap().covering(1e-7);
        let v = solve_spectral(&p, 1.0, &[1e-7]).unwrap().scalar_values().unwrap()[0];
        assert!(v < 1.0 && v > 0.999, "{v}");
    }

    #[test]
    fn lower_constant_limit() {
        let p = SpectralDensity::new(0.5, 1.0, 1.0).unwrap();
        let c = decay_constants(&p, 200.0).unwrap();
        let limit = 1.0 * (0.5 * PI).sin() / (PI * 4.0) * gamma(0.5);
        assert_abs_diff_eq!(c.c_lower, limit, epsilon = 1e-12);
        assert!(c.c_lower < c.c_upper);
        assert!(decay_constants(&p, 0.0).is_err());
    }

    #[test]
    fn multi_term_rejected_by_spectral() {
        let spec = OrderSpec::new(
            vec![
                crate::fraccalc::FracTerm::new(0.3, crate::fraccalc::Coefficient::Constant(1.0)),
                crate::fraccalc::FracTerm::new(0.6, crate::fraccalc::Coefficient::Constant(1.0)),
            ],
            1.0,
            1.0,
        )
        .unwrap();
        assert!(SpectralDensity::from_spec(&spec, 1.0).is_err());
        assert!(SpectralDensity::from_spec(&OrderSpec::single(0.5, 1.0).unwrap(), 1.0).is_ok());
    }

    #[test]
    fn sign_check_rejects_zero_coefficient() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let z = Trajectory::from_scalars(g.points().to_vec(), vec![0.0; 5]).unwrap().with_grid(g).unwrap();
        let spec = OrderSpec::single(0.5, 0.0).unwrap();
        assert!(frac_derivative_sign_check(&z, &spec, 1.0, 1e-6).is_err());
        let spec = OrderSpec::single(0.5, 1.0).unwrap();
        assert!(frac_derivative_sign_check(&z, &spec, 1.0, 1e-6).unwrap().passed());
        assert!(max_principle_check(&z, &spec, 1.0, 1e-6).unwrap().verdict.passed());
    }
}
