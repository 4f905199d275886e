//! The Dirichlet problem on `(0, L)` for `A = -d/dx (a(x) d/dx)`:
//!
//! `∂ₜu + Σ_j q_j(t) ∂ₜ^{α_j} u = -Au + c(x,t) u + f(x,t)`, `u(0) = u0`.
//!
//! Space is discretized by the conservative three-point flux scheme on
//! `n_x` interior nodes. Time is handled three ways: implicit L1 stepping,
//! a modal oracle that reduces constant-coefficient problems to scalar
//! relaxation equations, and Picard iteration on `u = F + Ku`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fraccalc::{caputo_l1_vectors, OrderSpec, TimeGrid};
use crate::fracode::{
    check_covers, decay_constants, solve_l1, solve_spectral, term_kernels, DecayConstants, FracOdeProblem,
    SpectralDensity,
};
use crate::trajectory::Trajectory;
use crate::tridiag::{solve_tridiagonal, symmetric_tridiagonal_eigen};

/// Shared scalar field `(x, t) ↦ value`.
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Discretized `A` with its eigen-system.
///
/// Eigenvectors are orthonormal in the mesh inner product
/// `⟨u, v⟩ = h Σ u_i v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOp1D {
    length: f64,
    h: f64,
    nu: f64,
    x: Vec<f64>,
    a_mid: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
    eigenvalues: Vec<f64>,
    // mode-major, modes[k * n + i] = φ_k(x_i)
    modes: Vec<f64>,
}

/// Assemble the flux-form stiffness matrix and its eigen-decomposition.
///
/// Row `i` reads `(-a_{i-1/2} u_{i-1} + (a_{i-1/2} + a_{i+1/2}) u_i - a_{i+1/2} u_{i+1}) / h²`
/// with `h = L/(n_x + 1)` and boundary values eliminated.
pub fn build_operator<F: Fn(f64) -> f64>(length: f64, n_x: usize, a: F, nu: f64) -> Result<EllipticOp1D> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid("length", format!("need L > 0, got {length}")));
    }
    if n_x < 3 {
        return Err(Error::invalid("n_x", format!("need at least 3 interior nodes, got {n_x}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::invalid("nu", format!("need nu > 0, got {nu}")));
    }
    let h = length / (n_x + 1) as f64;
    let x: Vec<f64> = (1..=n_x).map(|i| i as f64 * h).collect();
    let mut a_mid = Vec::with_capacity(n_x + 1);
    for i in 0..=n_x {
        let xm = (i as f64 + 0.5) * h;
        let value = a(xm);
        if !(value >= nu) {
            return Err(Error::Ellipticity { x: xm, value, nu });
        }
        a_mid.push(value);
    }
    let inv_h2 = 1.0 / (h * h);
    let diag: Vec<f64> = (0..n_x).map(|i| (a_mid[i] + a_mid[i + 1]) * inv_h2).collect();
    let off: Vec<f64> = (1..n_x).map(|i| -a_mid[i] * inv_h2).collect();
    let eig = symmetric_tridiagonal_eigen(&diag, &off)?;
    let scale = 1.0 / h.sqrt();
    let mut modes = Vec::with_capacity(n_x * n_x);
    for v in &eig.vectors {
        // fix the sign so that the first nonzero component is positive
        let sign = v.iter().find(|c| c.abs() > 1e-12).map_or(1.0, |c| c.signum());
        modes.extend(v.iter().map(|c| sign * scale * c));
    }
    Ok(EllipticOp1D { length, h, nu, x, a_mid, diag, off, eigenvalues: eig.values, modes })
}

impl EllipticOp1D {
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn x_grid(&self) -> &[f64] {
        &self.x
    }

    /// Diffusivity at the cell midpoints `x_{i+1/2}`, `i = 0..=n_x`.
    pub fn a_values(&self) -> &[f64] {
        &self.a_mid
    }

    pub fn stiffness_diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn stiffness_off(&self) -> &[f64] {
        &self.off
    }

    /// Stiffness matrix entry `S_{ij}`.
    pub fn stiffness_entry(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    /// Ascending eigenvalues `λ_1 ≤ … ≤ λ_{n_x}`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvector `φ_k` (0-based `k`) at the interior nodes.
    pub fn mode(&self, k: usize) -> &[f64] {
        let n = self.n_x();
        &self.modes[k * n..(k + 1) * n]
    }

    /// `S w`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n_x();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * w[i];
                if i > 0 {
                    s += self.off[i - 1] * w[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * w[i + 1];
                }
                s
            })
            .collect()
    }

    /// Mesh inner product `h Σ u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Modal coefficients `⟨g, φ_k⟩`.
    pub fn project(&self, g: &[f64]) -> Vec<f64> {
        (0..self.n_x()).map(|k| self.inner(g, self.mode(k))).collect()
    }

    /// `Σ_k d_k φ_k`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n_x();
        let mut out = vec![0.0; n];
        for (k, &d) in coeffs.iter().enumerate() {
            if d != 0.0 {
                for (o, p) in out.iter_mut().zip(self.mode(k)) {
                    *o += d * p;
                }
            }
        }
        out
    }

    fn check_len(&self, v: &[f64], name: &'static str) -> Result<()> {
        if v.len() != self.n_x() {
            return Err(Error::invalid(name, format!("expected {} nodal values, got {}", self.n_x(), v.len())));
        }
        Ok(())
    }
}

/// `e^{-tA} g = Σ_k e^{-λ_k t} ⟨g, φ_k⟩ φ_k`.
pub fn semigroup_apply(op: &EllipticOp1D, t: f64, g: &[f64]) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("need t >= 0, got {t}")));
    }
    op.check_len(g, "g")?;
    if t == 0.0 {
        return Ok(g.to_vec());
    }
    let coeffs: Vec<f64> = op
        .project(g)
        .iter()
        .zip(op.eigenvalues())
        .map(|(d, l)| d * (-l * t).exp())
        .collect();
    Ok(op.synthesize(&coeffs))
}

/// Reaction coefficient `c(x, t)`.
#[derive(Clone)]
pub enum Reaction {
    Constant(f64),
    Field(FieldFn),
}

impl Reaction {
    pub fn field<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Reaction::Field(Arc::new(f))
    }

    pub fn at(&self, x: f64, t: f64) -> f64 {
        match self {
            Reaction::Constant(c) => *c,
            Reaction::Field(f) => f(x, t),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Reaction::Constant(c) => Some(*c),
            Reaction::Field(_) => None,
        }
    }
}

impl fmt::Debug for Reaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reaction::Constant(c) => write!(f, "Constant({c})"),
            Reaction::Field(_) => f.write_str("Field(..)"),
        }
    }
}

/// Initial-boundary value problem on the grid of `op`.
#[derive(Clone)]
pub struct MixedProblem {
    pub op: EllipticOp1D,
    pub spec: OrderSpec,
    pub reaction: Reaction,
    pub source: Option<FieldFn>,
    pub u0: Vec<f64>,
    pub horizon: f64,
    /// Require `f = 0` and `c ≤ 0`, the hypotheses of the decay estimate.
    pub decay_mode: bool,
}

impl fmt::Debug for MixedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixedProblem")
            .field("n_x", &self.op.n_x())
            .field("spec", &self.spec)
            .field("reaction", &self.reaction)
            .field("source", &self.source.as_ref().map(|_| ".."))
            .field("horizon", &self.horizon)
            .field("decay_mode", &self.decay_mode)
            .finish()
    }
}

impl MixedProblem {
    /// Problem with `c = 0` and no source.
    pub fn new(op: EllipticOp1D, spec: OrderSpec, u0: Vec<f64>, horizon: f64) -> Result<Self> {
        op.check_len(&u0, "u0")?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("need horizon > 0, got {horizon}")));
        }
        Ok(MixedProblem {
            op,
            spec,
            reaction: Reaction::Constant(0.0),
            source: None,
            u0,
            horizon,
            decay_mode: false,
        })
    }

    /// Initial state sampled from `u0(x)` at the interior nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(op: EllipticOp1D, spec: OrderSpec, u0: F, horizon: f64) -> Result<Self> {
        let values = op.x_grid().iter().map(|&x| u0(x)).collect();
        Self::new(op, spec, values, horizon)
    }

    pub fn with_reaction(mut self, reaction: Reaction) -> Self {
        self.reaction = reaction;
        self
    }

    pub fn with_source<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(mut self, f: F) -> Self {
        self.source = Some(Arc::new(f));
        self
    }

    pub fn in_decay_mode(mut self) -> Self {
        self.decay_mode = true;
        self
    }

    /// Check coefficient envelopes and, in decay mode, `f = 0` and `c ≤ 0`
    /// at every node and sample time.
    pub fn validate_on(&self, times: &[f64]) -> Result<()> {
        self.spec.check_samples(times)?;
        if self.decay_mode {
            if self.source.is_some() {
                return Err(Error::invalid("source", "decay mode requires f = 0"));
            }
            match &self.reaction {
                Reaction::Constant(c) if *c > 0.0 => {
                    return Err(Error::invalid("c", format!("decay mode requires c <= 0, got {c}")));
                }
                Reaction::Constant(_) => {}
                Reaction::Field(f) => {
                    for &t in times {
                        for &x in self.op.x_grid() {
                            let c = f(x, t);
                            if c > 0.0 {
                                return Err(Error::invalid("c", format!("decay mode requires c <= 0, got c({x}, {t}) = {c}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn source_at(&self, t: f64) -> Option<Vec<f64>> {
        self.source.as_ref().map(|f| self.op.x_grid().iter().map(|&x| f(x, t)).collect())
    }
}

/// Implicit L1 stepping. Step `n` solves the tridiagonal system
/// `[(1/τ + Σ q_j(t_n) b_0^{(j)}) I + S - C_n] u^n = rhs`, SPD whenever `c ≤ 0`.
pub fn solve_mixed_l1(problem: &MixedProblem, grid: &TimeGrid) -> Result<Trajectory> {
    check_covers(grid, problem.horizon)?;
    let t = grid.points();
    problem.validate_on(t)?;
    let op = &problem.op;
    let n_x = op.n_x();
    let n_steps = grid.n_steps();
    let inv_tau = 1.0 / grid.step();
    let terms = problem.spec.terms();
    let mut kernels = term_kernels(&problem.spec, grid, n_x)?;
    let mut diffs = vec![0.0; (n_steps + 1) * n_x];
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(problem.u0.clone());
    let mut hist = vec![0.0; n_x];
    let mut diag = vec![0.0; n_x];
    let mut rhs = vec![0.0; n_x];
    for n in 1..=n_steps {
        let tn = t[n];
        let prev = &states[n - 1];
        let mut shift = inv_tau;
        for (i, r) in rhs.iter_mut().enumerate() {
            *r = inv_tau * prev[i];
        }
        for (term, (b0, kernel)) in terms.iter().zip(kernels.iter_mut()) {
            let q = term.q.at(tn);
            kernel.history(n, &diffs, &mut hist);
            shift += q * *b0;
            for i in 0..n_x {
                rhs[i] += q * (*b0 * prev[i] - hist[i]);
            }
        }
        for i in 0..n_x {
            diag[i] = shift + op.diag[i] - problem.reaction.at(op.x[i], tn);
        }
        if let Some(f) = problem.source_at(tn) {
            for (r, fi) in rhs.iter_mut().zip(f) {
                *r += fi;
            }
        }
        let next = solve_tridiagonal(&op.off, &diag, &op.off, &rhs)
            .map_err(|(node, pivot)| Error::Singular { step: n, node, pivot })?;
        for i in 0..n_x {
            diffs[n * n_x + i] = next[i] - prev[i];
        }
        states.push(next);
    }
    Trajectory::from_vectors(t.to_vec(), states, op.h)?.with_grid(grid.clone())
}

/// Evaluation times for [`modal_oracle`].
#[derive(Debug, Clone)]
pub enum ModalTimes {
    /// Arbitrary positive times (single constant term or none).
    Points(Vec<f64>),
    /// A uniform grid from 0 (any constant-coefficient spec).
    Grid(TimeGrid),
}

/// Constant-coefficient reference solution: each modal amplitude solves the
/// scalar relaxation equation with rate `λ_k - c`, by the spectral
/// representation for one fractional term, by `e^{-(λ_k - c)t}` for none and
/// by L1 stepping for several.
pub fn modal_oracle(problem: &MixedProblem, times: &ModalTimes) -> Result<Trajectory> {
    let c = match problem.reaction {
        Reaction::Constant(c) if c <= 0.0 => c,
        _ => return Err(Error::invalid("c", "modal oracle needs a constant c <= 0")),
    };
    if problem.source.is_some() {
        return Err(Error::invalid("source", "modal oracle needs f = 0"));
    }
    if !problem.spec.is_constant() {
        return Err(Error::invalid("q", "modal oracle needs constant coefficients"));
    }
    let op = &problem.op;
    let coeffs = op.project(&problem.u0);
    let (time_values, grid) = match times {
        ModalTimes::Points(t) => (t.clone(), None),
        ModalTimes::Grid(g) => (g.points().to_vec(), Some(g)),
    };
    let spec = &problem.spec;
    let amplitudes: Vec<Vec<f64>> = coeffs
        .par_iter()
        .zip(op.eigenvalues().par_iter())
        .map(|(&d, &lam)| {
            let rate = lam - c;
            if d == 0.0 {
                return Ok(vec![0.0; time_values.len()]);
            }
            match (spec.terms().len(), grid) {
                (0, _) => Ok(time_values.iter().map(|&t| d * (-rate * t).exp()).collect()),
                (1, _) => {
                    let sd = SpectralDensity::from_spec(spec, rate)?;
                    let positive: Vec<f64> = time_values.iter().copied().filter(|&t| t > 0.0).collect();
                    let sd = match positive.iter().copied().reduce(f64::min) {
                        Some(t_min) => sd.covering(t_min),
                        None => sd,
                    };
                    let values = solve_spectral(&sd, d, &positive)?.scalar_values()?;
                    let mut it = values.into_iter();
                    Ok(time_values
                        .iter()
                        .map(|&t| if t > 0.0 { it.next().unwrap_or(0.0) } else { d })
                        .collect())
                }
                (_, Some(g)) => {
                    let p = FracOdeProblem::new(spec.clone(), rate, d, g.t_end())?;
                    solve_l1(&p, g)?.scalar_values()
                }
                (_, None) => Err(Error::invalid("times", "several fractional terms need a uniform grid")),
            }
        })
        .collect::<Result<_>>()?;
    if time_values.iter().any(|&t| t < 0.0) {
        return Err(Error::invalid("times", "evaluation times must be nonnegative"));
    }
    let states = (0..time_values.len())
        .map(|n| {
            let modal: Vec<f64> = amplitudes.iter().map(|a| a[n]).collect();
            op.synthesize(&modal)
        })
        .collect();
    let traj = Trajectory::from_vectors(time_values, states, op.h)?;
    match grid {
        Some(g) => traj.with_grid(g.clone()),
        None => Ok(traj),
    }
}

// Weights (w_left, w_right) with ∫_0^τ e^{-λ(τ-s)} g(s) ds = w_left g(0) + w_right g(τ)
// for linear g.
fn exponential_cell_weights(lambda: f64, tau: f64) -> (f64, f64) {
    let x = lambda * tau;
    if x < 1e-4 {
        // series in x to avoid cancellation
        let right = tau * (0.5 - x / 6.0 + x * x / 24.0);
        let left = tau * (0.5 - x / 3.0 + x * x / 8.0);
        return (left, right);
    }
    let one_minus_e = -(-x).exp_m1();
    let right = (1.0 - one_minus_e / x) / lambda;
    (one_minus_e / lambda - right, right)
}

// Modal Duhamel integrals ∫₀^{t_n} e^{-λ_k(t_n-s)} g_k(s) ds for piecewise-linear
// g; rows are time levels, columns modes.
fn modal_convolution(lambdas: &[f64], g: &[Vec<f64>], tau: f64) -> Vec<Vec<f64>> {
    let weights: Vec<(f64, f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let (a, b) = exponential_cell_weights(l, tau);
            ((-l * tau).exp(), a, b)
        })
        .collect();
    let mut out = vec![vec![0.0; lambdas.len()]; g.len()];
    for n in 1..g.len() {
        let (done, rest) = out.split_at_mut(n);
        let prev = &done[n - 1];
        for (k, &(e, a, b)) in weights.iter().enumerate() {
            rest[0][k] = e * prev[k] + a * g[n - 1][k] + b * g[n][k];
        }
    }
    out
}

fn modal_trajectory(op: &EllipticOp1D, grid: &TimeGrid, coeffs: &[Vec<f64>]) -> Result<Trajectory> {
    let states = coeffs.iter().map(|c| op.synthesize(c)).collect();
    Trajectory::from_vectors(grid.points().to_vec(), states, op.h)?.with_grid(grid.clone())
}

fn duhamel_modal(
    op: &EllipticOp1D,
    u0: &[f64],
    source: Option<&(dyn Fn(f64, f64) -> f64 + Send + Sync)>,
    grid: &TimeGrid,
) -> Vec<Vec<f64>> {
    let d = op.project(u0);
    let lambdas = op.eigenvalues();
    let mut out: Vec<Vec<f64>> = grid
        .points()
        .iter()
        .map(|&t| d.iter().zip(lambdas).map(|(dk, l)| dk * (-l * t).exp()).collect())
        .collect();
    if let Some(f) = source {
        let g: Vec<Vec<f64>> = grid
            .points()
            .iter()
            .map(|&t| {
                let values: Vec<f64> = op.x_grid().iter().map(|&x| f(x, t)).collect();
                op.project(&values)
            })
            .collect();
        for (row, conv) in out.iter_mut().zip(modal_convolution(lambdas, &g, grid.step())) {
            for (o, c) in row.iter_mut().zip(conv) {
                *o += c;
            }
        }
    }
    out
}

/// `F(t_n) = e^{-t_n A} u0 + ∫₀^{t_n} e^{-(t_n - s)A} f(s) ds`, modewise,
/// with `f` linear in time on each cell and the exponential integrated
/// exactly.
pub fn duhamel_source(
    op: &EllipticOp1D,
    u0: &[f64],
    source: Option<&(dyn Fn(f64, f64) -> f64 + Send + Sync)>,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    op.check_len(u0, "u0")?;
    let coeffs = duhamel_modal(op, u0, source, grid);
    modal_trajectory(op, grid, &coeffs)
}

/// Convergence history of [`picard_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// `sup_n ‖u^{(m)}(t_n) - u^{(m-1)}(t_n)‖` per iteration.
    pub updates: Vec<f64>,
    /// Ratios of successive updates.
    pub contraction: Vec<f64>,
    /// `sup_n ‖u - F - Ku‖` for the returned iterate.
    pub residual: f64,
}

// Modal coefficients of c u - Σ q_j ∂^{α_j} u along the grid.
fn picard_field(problem: &MixedProblem, grid: &TimeGrid, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let op = &problem.op;
    let t = grid.points();
    let mut g: Vec<Vec<f64>> = match &problem.reaction {
        Reaction::Constant(c) => u.iter().map(|row| row.iter().map(|v| c * v).collect()).collect(),
        Reaction::Field(f) => u
            .iter()
            .zip(t)
            .map(|(row, &tn)| {
                let phys = op.synthesize(row);
                let prod: Vec<f64> = phys.iter().zip(op.x_grid()).map(|(v, &x)| f(x, tn) * v).collect();
                op.project(&prod)
            })
            .collect(),
    };
    for term in problem.spec.terms() {
        let d = caputo_l1_vectors(grid, u, term.alpha)?;
        for ((row, drow), &tn) in g.iter_mut().zip(&d).zip(t) {
            let q = term.q.at(tn);
            for (gi, di) in row.iter_mut().zip(drow) {
                *gi -= q * di;
            }
        }
    }
    Ok(g)
}

fn apply_k(problem: &MixedProblem, grid: &TimeGrid, u: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let g = picard_field(problem, grid, u)?;
    Ok(modal_convolution(problem.op.eigenvalues(), &g, grid.step()))
}

fn sup_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    // modal coefficients: the Euclidean norm equals the mesh L² norm
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Picard iteration `u^{(m+1)} = F + K u^{(m)}`, `u^{(0)} = F`, where
/// `Kw(t) = ∫₀ᵗ e^{-(t-s)A} (c w - Σ q_j ∂ₛ^{α_j} w)(s) ds` with L1
/// fractional derivatives and exact exponential cell integrals. Stops when
/// the sup-in-time update falls below `tol`.
///
/// Contraction is only guaranteed for short horizons; if `max_iter` is
/// reached the error carries the last contraction factor, and restarting on
/// shorter intervals is the remedy.
pub fn picard_solve(
    problem: &MixedProblem,
    grid: &TimeGrid,
    max_iter: usize,
    tol: f64,
) -> Result<(Trajectory, PicardReport)> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("need tol > 0, got {tol}")));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter", "need at least one iteration"));
    }
    check_covers(grid, problem.horizon)?;
    problem.validate_on(grid.points())?;
    let op = &problem.op;
    let f = duhamel_modal(op, &problem.u0, problem.source.as_deref(), grid);
    let mut u = f.clone();
    let mut updates: Vec<f64> = Vec::new();
    let mut contraction = Vec::new();
    for m in 1..=max_iter {
        let ku = apply_k(problem, grid, &u)?;
        let next: Vec<Vec<f64>> = f
            .iter()
            .zip(&ku)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        let update = sup_distance(&next, &u);
        if let Some(&prev) = updates.last() {
            if prev > 0.0 {
                contraction.push(update / prev);
            }
        }
        updates.push(update);
        u = next;
        if update <= tol {
            let ku = apply_k(problem, grid, &u)?;
            let fixed: Vec<Vec<f64>> = f
                .iter()
                .zip(&ku)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect();
            let residual = sup_distance(&u, &fixed);
            let traj = modal_trajectory(op, grid, &u)?;
            return Ok((traj, PicardReport { iterations: m, updates, contraction, residual }));
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        last_update: updates.last().copied().unwrap_or(f64::NAN),
        contraction: contraction.last().copied().unwrap_or(f64::NAN),
    })
}

/// How [`decay_run`] produced its norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMethod {
    Modal,
    Stepper,
}

/// Output of [`decay_run`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecayRun {
    pub method: DecayMethod,
    /// `‖u(t)‖ t^α / ‖u0‖` at each requested time (0 when `u0 = 0`).
    pub ratios: Vec<f64>,
    /// Constants for `(α_1, q_upper, λ_1 - sup c)` with `t0` = first time ≥ 1.
    pub constants: Option<DecayConstants>,
    /// Times `≥ t0` where `‖u(t)‖ > c_upper ‖u0‖ t^{-α}`.
    pub upper_violations: Vec<usize>,
}

/// Long-time decay experiment in decay mode.
///
/// Constant coefficients with at most one fractional term go through
/// [`modal_oracle`] at the requested times. Anything else is stepped with
/// [`solve_mixed_l1`] at `steps_per_unit` steps per unit time and the norm is
/// interpolated linearly to the requested times.
pub fn decay_run(problem: &MixedProblem, t_points: &[f64], steps_per_unit: usize) -> Result<(Trajectory, DecayRun)> {
    if !problem.decay_mode {
        return Err(Error::invalid("decay_mode", "decay runs need the decay-mode flag"));
    }
    if t_points.is_empty() || t_points.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("t_points", "need positive evaluation times"));
    }
    if !t_points.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::invalid("t_points", "evaluation times must increase"));
    }
    let t_last = *t_points.last().unwrap_or(&0.0);
    if t_last > problem.horizon * (1.0 + 1e-12) {
        return Err(Error::invalid("t_points", "evaluation times exceed the horizon"));
    }
    let alpha = problem.spec.lowest_order();
    let modal_ok = problem.spec.is_constant()
        && problem.spec.terms().len() <= 1
        && matches!(problem.reaction, Reaction::Constant(_));
    let (traj, method) = if modal_ok {
        problem.validate_on(t_points)?;
        (modal_oracle(problem, &ModalTimes::Points(t_points.to_vec()))?, DecayMethod::Modal)
    } else {
        if steps_per_unit == 0 {
            return Err(Error::invalid("steps_per_unit", "need a positive step count"));
        }
        let grid = TimeGrid::with_step(t_last, steps_per_unit)?;
        let mut p = problem.clone();
        p.horizon = grid.t_end();
        let full = solve_mixed_l1(&p, &grid)?;
        let states = t_points.iter().map(|&t| interpolate_state(&full, t)).collect();
        (Trajectory::from_vectors(t_points.to_vec(), states, problem.op.h)?, DecayMethod::Stepper)
    };
    let u0_norm = problem.op.norm(&problem.u0);
    let a = alpha.unwrap_or(0.0);
    let ratios: Vec<f64> = traj
        .norms()
        .iter()
        .zip(t_points)
        .map(|(&n, &t)| if u0_norm > 0.0 { n * t.powf(a) / u0_norm } else { 0.0 })
        .collect();
    let c_sup = match &problem.reaction {
        Reaction::Constant(c) => *c,
        Reaction::Field(_) => 0.0,
    };
    let constants = match (alpha, t_points.iter().position(|&t| t >= 1.0)) {
        (Some(alpha), Some(i0)) if problem.spec.q_upper() > 0.0 => {
            let sd = SpectralDensity::new(alpha, problem.spec.q_upper(), problem.op.eigenvalues()[0] - c_sup)?;
            Some(decay_constants(&sd, t_points[i0])?)
        }
        _ => None,
    };
    let upper_violations = match &constants {
        Some(c) => ratios
            .iter()
            .zip(t_points)
            .enumerate()
            .filter(|(_, (&r, &t))| t >= c.t0 && r > c.c_upper)
            .map(|(i, _)| i)
            .collect(),
        None => Vec::new(),
    };
    Ok((traj, DecayRun { method, ratios, constants, upper_violations }))
}

fn interpolate_state(traj: &Trajectory, t: f64) -> Vec<f64> {
    let times = traj.times();
    let i = times.partition_point(|&s| s < t).min(times.len() - 1);
    if i == 0 || times[i] == t {
        return traj.states()[i].clone();
    }
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    traj.states()[i - 1]
        .iter()
        .zip(&traj.states()[i])
        .map(|(a, b)| (1.0 - w) * a + w * b)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn laplacian(n_x: usize) -> EllipticOp1D {
        build_operator(PI, n_x, |_| 1.0, 1.0).unwrap()
    }

    #[test]
    fn laplacian_spectrum() {
        let op = laplacian(200);
        assert!((op.eigenvalues()[0] - 1.0).abs() <= 1e-3);
        assert!(op.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
        for i in 0..op.n_x() {
            for j in 0..op.n_x() {
                assert_eq!(op.stiffness_entry(i, j), op.stiffness_entry(j, i));
            }
        }
    }

    #[test]
    fn ellipticity_violation() {
        let err = build_operator(1.0, 10, |x| if x > 0.5 { 0.1 } else { 1.0 }, 0.5).unwrap_err();
        assert!(matches!(err, Error::Ellipticity { .. }));
        assert!(build_operator(1.0, 2, |_| 1.0, 1.0).is_err());
    }

    #[test]
    fn semigroup_on_eigenvector() {
        let op = laplacian(50);
        let phi = op.mode(0).to_vec();
        assert_eq!(semigroup_apply(&op, 0.0, &phi).unwrap(), phi);
        let out = semigroup_apply(&op, 1.0, &phi).unwrap();
        let l1 = op.eigenvalues()[0];
        for (o, p) in out.iter().zip(&phi) {
            assert_abs_diff_eq!(*o, (-l1).exp() * p, epsilon = 1e-12);
        }
    }

    #[test]
    fn cell_weights_integrate_linears_exactly() {
        for &(l, tau) in &[(1e-3, 1e-3), (0.7, 0.01), (50.0, 0.1), (3.0, 1e-6)] {
            let (a, b) = exponential_cell_weights(l, tau);
            // g ≡ 1 and g(s) = s
            let one = -(-l * tau).exp_m1() / l;
            let lin = (l * tau + (-l * tau).exp_m1()) / (l * l);
            assert!(((a + b) - one).abs() <= 1e-12 * one);
            // the reference itself loses ~ε/(λτ) to cancellation
            assert!((b * tau - lin).abs() <= 1e-8 * lin);
        }
    }

    #[test]
    fn stepper_reduces_to_scalar_on_a_mode() {
        let op = laplacian(40);
        let spec = OrderSpec::single(0.5, 1.0).unwrap();
        let u0 = op.mode(0).to_vec();
        let p = MixedProblem::new(op.clone(), spec.clone(), u0, 2.0).unwrap();
        let grid = TimeGrid::uniform(2.0, 400).unwrap();
        let pde = solve_mixed_l1(&p, &grid).unwrap();
        let ode = FracOdeProblem::new(spec, op.eigenvalues()[0], 1.0, 2.0).unwrap();
        let v = solve_l1(&ode, &grid).unwrap().scalar_values().unwrap();
        for (n, v) in pde.norms().iter().zip(&v) {
            assert!((n - v).abs() <= 1e-10 * v.abs());
        }
    }

    #[test]
    fn decay_mode_rejects_positive_reaction() {
        let op = laplacian(10);
        let spec = OrderSpec::single(0.5, 1.0).unwrap();
        let p = MixedProblem::new(op, spec, vec![1.0; 10], 1.0)
            .unwrap()
            .with_reaction(Reaction::field(|x, _| x - 1.0))
            .in_decay_mode();
        assert!(p.validate_on(&[0.0, 1.0]).is_err());
        assert!(decay_run(&p, &[0.5, 1.0], 64).is_err());
    }

    #[test]
    fn picard_without_memory_is_f() {
        let op = laplacian(20);
        let p = MixedProblem::from_fn(op, OrderSpec::none(), |x| x.sin(), 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let (_, report) = picard_solve(&p, &grid, 5, 1e-12).unwrap();
        assert_eq!(report.iterations, 1);
        assert_eq!(report.residual, 0.0);
    }
}
