//! Discrete fractional calculus on uniform time grids: the L1 Caputo
//! derivative, the product-trapezoid Riemann-Liouville integral, the
//! coercivity gap of the Caputo derivative and multi-term sums.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::special::{gamma, rgamma};

/// Uniform grid `t_start = t_0 < t_1 < … < t_N = t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    points: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_start >= 0.0 && t_start.is_finite()) {
            return Err(Error::invalid("t_start", format!("need t_start >= 0, got {t_start}")));
        }
        if !(t_end > t_start && t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("need t_end > t_start, got {t_end}")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "need at least one step"));
        }
        let tau = (t_end - t_start) / n_steps as f64;
        let mut points: Vec<f64> = (0..=n_steps).map(|n| t_start + n as f64 * tau).collect();
        points[n_steps] = t_end;
        Ok(TimeGrid { t_start, t_end, n_steps, points })
    }

    /// Grid on `[0, horizon]` with `n_steps` steps.
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        Self::new(0.0, horizon, n_steps)
    }

    /// Grid on `[0, horizon]` with step `1/steps_per_unit` (horizon rounded
    /// to a whole number of steps).
    pub fn with_step(horizon: f64, steps_per_unit: usize) -> Result<Self> {
        let n = (horizon * steps_per_unit as f64).round() as usize;
        Self::new(0.0, n as f64 / steps_per_unit as f64, n)
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.n_steps as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of the node nearest to `t`, if `t` lies on the grid within
    /// `1e-9` of a step.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start) / self.step();
        let n = x.round();
        if (x - n).abs() <= 1e-9 && n >= 0.0 && n as usize <= self.n_steps {
            Some(n as usize)
        } else {
            None
        }
    }
}

/// L1 weights `b_k = ((k+1)^{1-α} - k^{1-α}) τ^{-α} / Γ(2-α)`, `k = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct L1Weights {
    alpha: f64,
    tau: f64,
    b: Vec<f64>,
}

impl L1Weights {
    pub fn new(alpha: f64, tau: f64, len: usize) -> Result<Self> {
        check_order(alpha)?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid("tau", format!("need tau > 0, got {tau}")));
        }
        let scale = tau.powf(-alpha) * rgamma(2.0 - alpha);
        let e = 1.0 - alpha;
        let b = (0..len)
            .map(|k| {
                if k == 0 {
                    scale
                } else {
                    // (k+1)^e - k^e without cancellation for large k
                    let kf = k as f64;
                    scale * kf.powf(e) * (e * (1.0 / kf).ln_1p()).exp_m1()
                }
            })
            .collect();
        Ok(L1Weights { alpha, tau, b })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.b
    }

    pub fn b0(&self) -> f64 {
        self.b[0]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.b
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("alpha", format!("fractional order must lie in (0, 1), got {alpha}")))
    }
}

/// Time-dependent coefficient `q(t)`.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Varying(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn varying<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Coefficient::Varying(Arc::new(f))
    }

    pub fn at(&self, t: f64) -> f64 {
        match self {
            Coefficient::Constant(q) => *q,
            Coefficient::Varying(f) => f(t),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(q) => Some(*q),
            Coefficient::Varying(_) => None,
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(q) => write!(f, "Constant({q})"),
            Coefficient::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

/// One fractional term `q(t) ∂ₜ^α`.
#[derive(Debug, Clone)]
pub struct FracTerm {
    pub alpha: f64,
    pub q: Coefficient,
}

impl FracTerm {
    pub fn new(alpha: f64, q: Coefficient) -> Self {
        FracTerm { alpha, q }
    }
}

/// The fractional part `Σ_j q_j(t) ∂ₜ^{α_j}` of a mixed-order operator, with
/// a declared envelope `q_lower ≤ q_j(t) ≤ q_upper`. The first-order term is
/// implicit.
#[derive(Debug, Clone)]
pub struct OrderSpec {
    terms: Vec<FracTerm>,
    q_lower: f64,
    q_upper: f64,
}

impl OrderSpec {
    pub fn new(terms: Vec<FracTerm>, q_lower: f64, q_upper: f64) -> Result<Self> {
        if !(q_lower >= 0.0 && q_upper >= q_lower && q_upper.is_finite()) {
            return Err(Error::invalid(
                "q_bounds",
                format!("need 0 <= q_lower <= q_upper, got [{q_lower}, {q_upper}]"),
            ));
        }
        for (j, term) in terms.iter().enumerate() {
            check_order(term.alpha)?;
            if j > 0 && term.alpha <= terms[j - 1].alpha {
                return Err(Error::invalid("alpha", "orders must be strictly increasing"));
            }
            if let Some(q) = term.q.constant_value() {
                if !(q >= q_lower && q <= q_upper) {
                    return Err(Error::invalid(
                        "q",
                        format!("constant coefficient {q} outside [{q_lower}, {q_upper}]"),
                    ));
                }
            }
        }
        Ok(OrderSpec { terms, q_lower, q_upper })
    }

    /// Single term with constant coefficient `q ≥ 0`.
    pub fn single(alpha: f64, q: f64) -> Result<Self> {
        Self::new(vec![FracTerm::new(alpha, Coefficient::Constant(q))], q, q)
    }

    /// No fractional term: the classical first-order equation.
    pub fn none() -> Self {
        OrderSpec { terms: Vec::new(), q_lower: 0.0, q_upper: 0.0 }
    }

    pub fn terms(&self) -> &[FracTerm] {
        &self.terms
    }

    pub fn q_lower(&self) -> f64 {
        self.q_lower
    }

    pub fn q_upper(&self) -> f64 {
        self.q_upper
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest fractional order, which sets the decay rate.
    pub fn lowest_order(&self) -> Option<f64> {
        self.terms.first().map(|t| t.alpha)
    }

    /// True when every coefficient is constant in time.
    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.q.constant_value().is_some())
    }

    /// Check every coefficient against the envelope at the given times.
    pub fn check_samples(&self, times: &[f64]) -> Result<()> {
        for term in &self.terms {
            for &t in times {
                let q = term.q.at(t);
                if !(q >= self.q_lower && q <= self.q_upper) {
                    return Err(Error::invalid(
                        "q",
                        format!("q({t}) = {q} outside [{}, {}]", self.q_lower, self.q_upper),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Blocked evaluation of L1 history sums `Σ_{m=1}^{n-1} b_{n-m} d_m` for a
/// stream of (possibly vector-valued) differences `d_m = y_m - y_{m-1}`.
///
/// When step `n` opens a block, contributions of all settled differences
/// to the next `block` steps are accumulated at once, so each stored row is
/// read once per block instead of once per step.
pub(crate) struct HistoryKernel {
    weights: Vec<f64>,
    dim: usize,
    block: usize,
    block_start: usize,
    partial: Vec<f64>,
}

impl HistoryKernel {
    /// `weights[k] = b_k` for `k = 0..=N`; `dim` is the state dimension.
    pub(crate) fn new(weights: Vec<f64>, dim: usize) -> Self {
        let block = if dim == 1 { 256 } else { 64 };
        HistoryKernel {
            weights,
            dim,
            block,
            block_start: 0,
            partial: vec![0.0; block * dim],
        }
    }

    /// Writes the history sum for step `n` into `out`. `diffs` stores rows
    /// `m = 0..n` flattened (row 0 is ignored).
    pub(crate) fn history(&mut self, n: usize, diffs: &[f64], out: &mut [f64]) {
        let dim = self.dim;
        debug_assert!(diffs.len() >= n * dim);
        if self.block_start == 0 || n < self.block_start || n >= self.block_start + self.block {
            self.open_block(n, diffs);
        }
        let j = n - self.block_start;
        out.copy_from_slice(&self.partial[j * dim..(j + 1) * dim]);
        for m in self.block_start..n {
            let w = self.weights[n - m];
            let row = &diffs[m * dim..(m + 1) * dim];
            for (o, d) in out.iter_mut().zip(row) {
                *o += w * d;
            }
        }
    }

    fn open_block(&mut self, n: usize, diffs: &[f64]) {
        let dim = self.dim;
        self.block_start = n;
        let span = self.block.min(self.weights.len().saturating_sub(n)).max(1);
        self.partial.iter_mut().for_each(|p| *p = 0.0);
        if dim == 1 {
            let partial = &mut self.partial[..span];
            for m in 1..n {
                let dm = diffs[m];
                let w = &self.weights[n - m..n - m + span];
                for (p, &wk) in partial.iter_mut().zip(w) {
                    *p += wk * dm;
                }
            }
        } else {
            for m in 1..n {
                let row = &diffs[m * dim..(m + 1) * dim];
                for j in 0..span {
                    let w = self.weights[n + j - m];
                    let acc = &mut self.partial[j * dim..(j + 1) * dim];
                    for (p, d) in acc.iter_mut().zip(row) {
                        *p += w * d;
                    }
                }
            }
        }
    }
}

fn check_grid_values(grid: &TimeGrid, len: usize) -> Result<()> {
    if len != grid.points().len() {
        return Err(Error::invalid(
            "values",
            format!("expected {} samples for the grid, got {len}", grid.points().len()),
        ));
    }
    Ok(())
}

/// L1 Caputo derivative of order `alpha` at every grid node.
///
/// Entry `n` is `Σ_{k=0}^{n-1} b_k (y_{n-k} - y_{n-k-1})`, the L1
/// approximation of `∂ₜ^α y(t_n)` based at `t_0`; entry 0 is the empty sum.
/// Exact for inputs affine in `t`.
pub fn caputo_l1(grid: &TimeGrid, values: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_grid_values(grid, values.len())?;
    let n_steps = grid.n_steps();
    let weights = L1Weights::new(alpha, grid.step(), n_steps + 1)?.into_vec();
    let b0 = weights[0];
    let mut diffs = vec![0.0; n_steps + 1];
    for m in 1..=n_steps {
        diffs[m] = values[m] - values[m - 1];
    }
    let mut kernel = HistoryKernel::new(weights, 1);
    let mut out = vec![0.0; n_steps + 1];
    let mut h = [0.0];
    for n in 1..=n_steps {
        kernel.history(n, &diffs, &mut h);
        out[n] = b0 * diffs[n] + h[0];
    }
    Ok(out)
}

/// L1 Caputo derivative of a vector-valued sequence.
pub fn caputo_l1_vectors(grid: &TimeGrid, values: &[Vec<f64>], alpha: f64) -> Result<Vec<Vec<f64>>> {
    check_grid_values(grid, values.len())?;
    let dim = values[0].len();
    if values.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("values", "state dimension changes along the trajectory"));
    }
    let n_steps = grid.n_steps();
    let weights = L1Weights::new(alpha, grid.step(), n_steps + 1)?.into_vec();
    let b0 = weights[0];
    let mut diffs = vec![0.0; (n_steps + 1) * dim];
    for m in 1..=n_steps {
        for i in 0..dim {
            diffs[m * dim + i] = values[m][i] - values[m - 1][i];
        }
    }
    let mut kernel = HistoryKernel::new(weights, dim);
    let mut out = vec![vec![0.0; dim]; n_steps + 1];
    let mut h = vec![0.0; dim];
    for n in 1..=n_steps {
        kernel.history(n, &diffs, &mut h);
        for i in 0..dim {
            out[n][i] = b0 * diffs[n * dim + i] + h[i];
        }
    }
    Ok(out)
}

/// Riemann-Liouville integral `J^γ y(t_n)` by the product trapezoid rule:
/// `y` is interpolated linearly on each cell and the kernel
/// `(t_n - s)^{γ-1}/Γ(γ)` is integrated exactly against it.
pub fn rl_integral(grid: &TimeGrid, values: &[f64], order: f64) -> Result<Vec<f64>> {
    if !(order > 0.0 && order.is_finite()) {
        return Err(Error::invalid("gamma", format!("integration order must be positive, got {order}")));
    }
    check_grid_values(grid, values.len())?;
    let n_steps = grid.n_steps();
    let g1 = order + 1.0;
    let scale = grid.step().powf(order) * rgamma(order + 2.0);
    // c[k] = (k+1)^{γ+1} - 2 k^{γ+1} + (k-1)^{γ+1}, the interior weight at lag k
    let pw: Vec<f64> = (0..=n_steps + 1).map(|k| (k as f64).powf(g1)).collect();
    let mut out = vec![0.0; n_steps + 1];
    for n in 1..=n_steps {
        let nf = n as f64;
        let mut acc = (pw[n - 1] - (nf - 1.0 - order) * nf.powf(order)) * values[0];
        for j in 1..n {
            let k = n - j;
            acc += (pw[k + 1] - 2.0 * pw[k] + pw[k - 1]) * values[j];
        }
        acc += values[n];
        out[n] = scale * acc;
    }
    Ok(out)
}

/// Coercivity gap `I_n = ⟨y_n, ∂ₜ^α y_n⟩ - ‖y_n‖ ∂ₜ^α‖y‖_n` with both
/// derivatives taken by the L1 scheme (Euclidean inner product). Where
/// `‖y_n‖ = 0` the second term is dropped.
pub fn coercivity_gap(grid: &TimeGrid, vectors: &[Vec<f64>], alpha: f64) -> Result<Vec<f64>> {
    let derivative = caputo_l1_vectors(grid, vectors, alpha)?;
    let norms: Vec<f64> = vectors.iter().map(|v| euclidean_norm(v)).collect();
    let norm_derivative = caputo_l1(grid, &norms, alpha)?;
    Ok(vectors
        .iter()
        .zip(&derivative)
        .zip(norms.iter().zip(&norm_derivative))
        .map(|((y, dy), (&ny, &dny))| {
            let inner: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
            if ny == 0.0 {
                inner
            } else {
                inner - ny * dny
            }
        })
        .collect())
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `Σ_j q_j(t_n) ∂ₜ^{α_j} y(t_n)` at every node.
pub fn multi_term_apply(values: &[f64], spec: &OrderSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    check_grid_values(grid, values.len())?;
    let mut out = vec![0.0; values.len()];
    for term in spec.terms() {
        let d = caputo_l1(grid, values, term.alpha)?;
        for ((o, di), &t) in out.iter_mut().zip(&d).zip(grid.points()) {
            *o += term.q.at(t) * di;
        }
    }
    Ok(out)
}

/// Exact Caputo derivative of `t^p` (`p > 0`) based at 0:
/// `Γ(p+1)/Γ(p+1-α) t^{p-α}`.
pub fn caputo_of_power(p: f64, alpha: f64, t: f64) -> f64 {
    gamma(p + 1.0) * rgamma(p + 1.0 - alpha) * t.powf(p - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_shape() {
        let g = TimeGrid::uniform(2.0, 8).unwrap();
        assert_eq!(g.points().len(), 9);
        assert_eq!(g.points()[8], 2.0);
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.index_of(1.5), Some(6));
        assert_eq!(g.index_of(1.3), None);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn weights_are_positive_and_decreasing() {
        for &alpha in &[0.05, 0.3, 0.5, 0.95] {
            let w = L1Weights::new(alpha, 0.01, 5000).unwrap();
            let b = w.as_slice();
            assert!(b.windows(2).all(|p| p[0] > p[1] && p[1] > 0.0));
            // telescoping: Σ b_k τ^α Γ(2-α) = n^{1-α}
            let s: f64 = b.iter().sum::<f64>() * 0.01f64.powf(alpha) * gamma(2.0 - alpha);
            assert_abs_diff_eq!(s, 5000f64.powf(1.0 - alpha), epsilon = 1e-9 * s);
        }
    }

    #[test]
    fn constant_input_has_zero_derivative() {
        let g = TimeGrid::uniform(1.0, 50).unwrap();
        let d = caputo_l1(&g, &vec![3.5; 51], 0.4).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_input_is_exact() {
        let g = TimeGrid::uniform(1.0, 64).unwrap();
        let y: Vec<f64> = g.points().to_vec();
        let d = caputo_l1(&g, &y, 0.5).unwrap();
        assert_abs_diff_eq!(d[64], std::f64::consts::FRAC_2_SQRT_PI, epsilon = 1e-13);
    }

    #[test]
    fn rejects_bad_orders() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert!(caputo_l1(&g, &[0.0; 5], 1.0).is_err());
        assert!(caputo_l1(&g, &[0.0; 5], 0.0).is_err());
        assert!(caputo_l1(&g, &[0.0; 4], 0.5).is_err());
        assert!(rl_integral(&g, &[0.0; 5], 0.0).is_err());
        assert!(OrderSpec::new(
            vec![
                FracTerm::new(0.6, Coefficient::Constant(1.0)),
                FracTerm::new(0.3, Coefficient::Constant(1.0))
            ],
            0.0,
            2.0
        )
        .is_err());
        assert!(OrderSpec::single(0.5, -1.0).is_err());
    }

    #[test]
    fn rl_integral_of_one() {
        let g = TimeGrid::uniform(1.0, 32).unwrap();
        let j = rl_integral(&g, &vec![1.0; 33], 0.5).unwrap();
        assert_abs_diff_eq!(j[32], std::f64::consts::FRAC_2_SQRT_PI, epsilon = 1e-13);
        let z = rl_integral(&g, &vec![0.0; 33], 0.7).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn blocked_history_matches_naive_sum() {
        let n_steps = 700;
        let g = TimeGrid::uniform(1.0, n_steps).unwrap();
        let y: Vec<f64> = g.points().iter().map(|t| (3.0 * t).sin() + t * t).collect();
        let fast = caputo_l1(&g, &y, 0.35).unwrap();
        let b = L1Weights::new(0.35, g.step(), n_steps + 1).unwrap();
        for n in [1, 2, 255, 256, 257, 511, 700] {
            let naive: f64 = (0..n).map(|k| b.as_slice()[k] * (y[n - k] - y[n - k - 1])).sum();
            assert_abs_diff_eq!(fast[n], naive, epsilon = 1e-12 * naive.abs().max(1.0));
        }
        let vecs: Vec<Vec<f64>> = y.iter().map(|&v| vec![v, -2.0 * v, 0.5]).collect();
        let dv = caputo_l1_vectors(&g, &vecs, 0.35).unwrap();
        for n in [1, 63, 64, 65, 700] {
            assert_abs_diff_eq!(dv[n][0], fast[n], epsilon = 1e-12);
            assert_abs_diff_eq!(dv[n][1], -2.0 * fast[n], epsilon = 1e-12);
            assert_eq!(dv[n][2], 0.0);
        }
    }

    #[test]
    fn coercivity_gap_vanishes_on_rays() {
        let g = TimeGrid::uniform(2.0, 100).unwrap();
        let y0 = [1.0, -2.0, 0.5];
        let ray: Vec<Vec<f64>> = g
            .points()
            .iter()
            .map(|t| y0.iter().map(|c| c * (1.0 + t * t)).collect())
            .collect();
        for gap in coercivity_gap(&g, &ray, 0.6).unwrap() {
            assert!(gap.abs() < 1e-11);
        }
        let fixed = vec![y0.to_vec(); 101];
        assert!(coercivity_gap(&g, &fixed, 0.6).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn multi_term_combines_closed_forms() {
        let g = TimeGrid::uniform(1.0, 16).unwrap();
        let y = g.points().to_vec();
        assert!(multi_term_apply(&y, &OrderSpec::none(), &g).unwrap().iter().all(|&v| v == 0.0));
        let spec = OrderSpec::new(
            vec![
                FracTerm::new(0.3, Coefficient::Constant(1.0)),
                FracTerm::new(0.7, Coefficient::Constant(2.0)),
            ],
            0.0,
            2.0,
        )
        .unwrap();
        let out = multi_term_apply(&y, &spec, &g).unwrap();
        // 1/Γ(1.7) + 2/Γ(1.3)
        assert_abs_diff_eq!(out[16], 1.100_547_405_523_665_7 + 2.0 * 1.114_242_508_547_301_9, epsilon = 1e-12);
    }
}
