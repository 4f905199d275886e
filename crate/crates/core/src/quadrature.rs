//! Quadrature rules: Gauss-Jacobi (Golub-Welsch) for endpoint-singular
//! weights and globally adaptive Gauss-Kronrod (7/15) for everything else.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::special::ln_gamma;
use crate::tridiag::eigen_first_components;

/// Gauss-Jacobi rule for `∫₋₁¹ (1-x)^a (1+x)^b f(x) dx`.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    a: f64,
    b: f64,
}

impl GaussJacobi {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "Gauss-Jacobi needs at least 2 nodes"));
        }
        if !(a > -1.0 && b > -1.0) {
            return Err(Error::invalid("exponents", format!("need a, b > -1, got a = {a}, b = {b}")));
        }
        let ab = a + b;
        let mut diag = Vec::with_capacity(n);
        let mut off = Vec::with_capacity(n - 1);
        for k in 0..n {
            let kf = k as f64;
            let s = 2.0 * kf + ab;
            let alpha_k = if k == 0 {
                (b - a) / (ab + 2.0)
            } else {
                (b * b - a * a) / (s * (s + 2.0))
            };
            diag.push(alpha_k);
            if k >= 1 {
                let beta_k = if k == 1 {
                    4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab))
                } else {
                    4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0))
                };
                off.push(beta_k.sqrt());
            }
        }
        let (nodes, first) = eigen_first_components(&diag, &off)?;
        let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
            - ln_gamma(ab + 2.0);
        let mu0 = ln_mu0.exp();
        let weights = first.iter().map(|v| mu0 * v * v).collect();
        Ok(GaussJacobi { nodes, weights, a, b })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫₋₁¹ (1-x)^a (1+x)^b f(x) dx`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// `∫₀ᶜ r^b f(r) dr` for a rule built with `a = 0`: the weight singularity
    /// sits at the left endpoint of the cell.
    pub fn integrate_left_cell<F: FnMut(f64) -> f64>(&self, c: f64, mut f: F) -> f64 {
        debug_assert!(self.a == 0.0);
        let half = 0.5 * c;
        half.powf(self.b + 1.0) * self.integrate(|x| f(half * (1.0 + x)))
    }
}

// Kronrod 15-point nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    (kron, (kron - gauss).abs())
}

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

const MAX_SEGMENTS: usize = 4000;

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`.
/// Fails with [`Error::Quadrature`] if the segment budget runs out first.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let (v, e) = kronrod15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::Quadrature {
                estimate: err,
                tolerance: abs_tol.max(rel_tol * total.abs()),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine precision; accept as is
            heap.push(Segment { error: 0.0, ..worst });
            err -= worst.error;
            continue;
        }
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // re-sum to shed accumulated cancellation from the running updates
    let intervals = heap.len();
    let (value, error) = heap
        .into_iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(QuadResult { value, error, intervals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussJacobi::new(5, 0.0, 0.0).unwrap();
        // degree 9 is the exactness limit for five nodes
        let v = rule.integrate(|x| x.powi(8) + 3.0 * x.powi(3) + 1.0);
        assert_relative_eq!(v, 2.0 / 9.0 + 2.0, max_relative = 1e-14);
    }

    #[test]
    fn jacobi_weight_moments() {
        // ∫₀¹ r^{b} r^k dr = 1/(b+k+1)
        for &b in &[-0.75, -0.5, -0.1, 0.3] {
            let rule = GaussJacobi::new(64, 0.0, b).unwrap();
            for k in 0..6 {
                let v = rule.integrate_left_cell(1.0, |r| r.powi(k));
                assert_relative_eq!(v, 1.0 / (b + k as f64 + 1.0), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_handles_both_endpoints() {
        // ∫₋₁¹ (1-x)^{-1/2} (1+x)^{-1/2} dx = π
        let rule = GaussJacobi::new(8, -0.5, -0.5).unwrap();
        assert_relative_eq!(rule.integrate(|_| 1.0), std::f64::consts::PI, max_relative = 1e-13);
        // ∫₋₁¹ e^x (1-x)^{-1/2} dx; substituting 1 - x = s² removes the singularity
        let rule = GaussJacobi::new(20, -0.5, 0.0).unwrap();
        let v = rule.integrate(|x| x.exp());
        let check = adaptive(|s: f64| 2.0 * (1.0 - s * s).exp(), 0.0, 2f64.sqrt(), 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, check.value, max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussJacobi::new(1, 0.0, 0.0).is_err());
        assert!(GaussJacobi::new(4, -1.0, 0.0).is_err());
    }

    #[test]
    fn adaptive_resolves_peaks_and_endpoint_singularities() {
        let r = adaptive(|x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2)), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        let exact = 100.0 * ((0.7f64 / 1e-2).atan() + (0.3f64 / 1e-2).atan());
        assert_relative_eq!(r.value, exact, max_relative = 1e-11);
        let r = adaptive(|x: f64| x.powf(-0.7), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert_relative_eq!(r.value, 1.0 / 0.3, max_relative = 1e-9);
        let r = adaptive(|x: f64| x.powf(0.5 - 1.0) * (-x).exp(), 0.0, 60.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(r.value, gamma(0.5), max_relative = 1e-10);
    }
}
