use std::f64::consts::PI;

use fracmix::analysis::{fit_decay, gronwall_envelope};
use fracmix::fraccalc::{caputo_l1, caputo_of_power, L1Weights, TimeGrid};
use fracmix::fracode::{decay_constants, solve_spectral, SpectralDensity};
use fracmix::mlfunc::{exponential_kernel_integral, mittag_leffler_real, negative_axis_integral, sector_bound_constant, MLParams};
use fracmix::pde1d::{build_operator, semigroup_apply};
use fracmix::quadrature::adaptive;
use fracmix::special::{gamma, rgamma};
use proptest::prelude::*;

fn order() -> impl Strategy<Value = f64> {
    0.02..0.98f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l1_weights_positive_decreasing(alpha in order(), tau in 1e-4..2.0f64, len in 2usize..3000) {
        let w = L1Weights::new(alpha, tau, len).unwrap();
        let b = w.as_slice();
        prop_assert!(b.iter().all(|&x| x > 0.0));
        prop_assert!(b.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn l1_weights_telescope(alpha in order(), tau in 1e-3..1.0f64, n in 1usize..2000) {
        let w = L1Weights::new(alpha, tau, n).unwrap();
        let scale = tau.powf(alpha) * gamma(2.0 - alpha);
        let sum: f64 = w.as_slice().iter().map(|b| b * scale).sum();
        let exact = (n as f64).powf(1.0 - alpha);
        prop_assert!((sum - exact).abs() <= 1e-10 * exact);
    }

    #[test]
    fn caputo_is_linear(
        alpha in order(),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        w1 in 0.1..5.0f64,
        w2 in 0.1..5.0f64,
    ) {
        let grid = TimeGrid::uniform(2.0, 300).unwrap();
        let x: Vec<f64> = grid.points().iter().map(|t| (w1 * t).sin()).collect();
        let y: Vec<f64> = grid.points().iter().map(|t| (w2 * t).cos() + t * t).collect();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (dx, dy, dc) = (
            caputo_l1(&grid, &x, alpha).unwrap(),
            caputo_l1(&grid, &y, alpha).unwrap(),
            caputo_l1(&grid, &combo, alpha).unwrap(),
        );
        for ((p, q), r) in dx.iter().zip(&dy).zip(&dc) {
            prop_assert!((a * p + b * q - r).abs() <= 1e-11 * (1.0 + r.abs()));
        }
    }

    #[test]
    fn caputo_exact_on_affine(alpha in order(), c0 in -5.0..5.0f64, c1 in -5.0..5.0f64, n in 4usize..400) {
        let grid = TimeGrid::uniform(3.0, n).unwrap();
        let y: Vec<f64> = grid.points().iter().map(|t| c0 + c1 * t).collect();
        let d = caputo_l1(&grid, &y, alpha).unwrap();
        for (&t, v) in grid.points().iter().zip(&d) {
            prop_assert!((v - c1 * caputo_of_power(1.0, alpha, t)).abs() <= 1e-11 * (1.0 + c1.abs()));
        }
    }

    #[test]
    fn mittag_leffler_completely_monotone(alpha in 0.05..1.0f64, step in 0.01..2.0f64) {
        let p = MLParams::new(alpha, 1.0).unwrap();
        let v: Vec<f64> = (0..150).map(|i| mittag_leffler_real(&p, -step * i as f64).unwrap()).collect();
        prop_assert!(v.iter().all(|&x| x > 0.0));
        prop_assert!(v.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn regime_switch_is_seamless(alpha in 0.1..0.95f64, gamma_ in 0.3..2.0f64, side in prop::bool::ANY) {
        let tol = 1e-11;
        let p = MLParams::new(alpha, gamma_).unwrap().with_tol(tol).unwrap();
        let x = if side { 4.5 } else { 5.5 };
        let series = MLParams::new(alpha, gamma_).unwrap().with_tol(tol).unwrap().with_radius(6.0).unwrap();
        let (a, b) = (mittag_leffler_real(&series, -x).unwrap(), negative_axis_integral(&p, x).unwrap());
        prop_assert!((a - b).abs() <= 10.0 * tol, "series {a} integral {b}");
    }

    #[test]
    fn sector_constant_is_finite(alpha in 0.1..0.95f64, gamma_ in 0.5..2.0f64) {
        let c = sector_bound_constant(alpha, gamma_, 0.01, 1e4, 60).unwrap();
        prop_assert!(c.is_finite() && c > 0.0);
    }

    #[test]
    fn kernel_identity(beta in 0.0..0.95f64, lambda in 0.05..6.0f64, s in 0.0..3.0f64, width in 1e-3..4.0f64) {
        let t = s + width;
        let p = 1.0 - beta;
        // u = (t - τ)^{1-β} makes the integrand smooth
        let q = adaptive(|u: f64| (-lambda * (width - u.powf(1.0 / p))).exp(), 0.0, width.powf(p), 1e-15, 1e-14).unwrap();
        let oracle = q.value * rgamma(p) / p;
        let closed = exponential_kernel_integral(beta, lambda, s, t).unwrap();
        prop_assert!((closed - oracle).abs() <= 1e-8, "closed {closed} oracle {oracle}");
    }

    #[test]
    fn split_point_and_density(alpha in 0.05..0.95f64, q in 0.05..5.0f64, lambda in 0.05..5.0f64) {
        let sd = SpectralDensity::new(alpha, q, lambda).unwrap();
        let d = sd.delta();
        prop_assert!(d > 0.0 && d <= lambda);
        prop_assert!(lambda - d - q * d.powf(alpha) >= 0.5 * lambda);
        for i in 0..80 {
            let r = 1e-8 * 10f64.powf(i as f64 / 8.0);
            prop_assert!(sd.density(r) > 0.0);
        }
        let c = decay_constants(&sd, 1.0).unwrap();
        prop_assert!(c.c_lower > 0.0 && c.c_lower <= c.c_upper && c.c_upper.is_finite());
    }

    #[test]
    fn fit_is_scale_equivariant(slope in -2.0..-0.05f64, scale in 1e-3..1e3f64, wiggle in 0.0..0.2f64) {
        let times: Vec<f64> = (0..40).map(|i| 100.0 * 10f64.powf(i as f64 / 19.5)).collect();
        let base: Vec<f64> = times.iter().map(|t| t.powf(slope) * (1.0 + wiggle * t.ln().cos())).collect();
        let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let a = fit_decay(&times, &base, (1e2, 1e4)).unwrap();
        let b = fit_decay(&times, &scaled, (1e2, 1e4)).unwrap();
        prop_assert!((a.slope - b.slope).abs() <= 1e-11);
        prop_assert!((b.intercept - a.intercept - scale.ln()).abs() <= 1e-10);
    }

    #[test]
    fn gronwall_monotone_in_a(beta in 0.3..1.0f64, b in 0.0..1.0f64, a0 in 0.0..1.0f64, bump in 0.0..1.0f64) {
        let grid = TimeGrid::uniform(1.5, 96).unwrap();
        let a: Vec<f64> = grid.points().iter().map(|t| a0 + 0.2 * (3.0 * t).sin().abs()).collect();
        let a2: Vec<f64> = a.iter().zip(grid.points()).map(|(v, t)| v + bump * t).collect();
        let e1 = gronwall_envelope(&grid, &a, b, beta).unwrap();
        let e2 = gronwall_envelope(&grid, &a2, b, beta).unwrap();
        prop_assert!(e1.iter().zip(&e2).all(|(x, y)| x <= y));
        prop_assert!(e1.iter().zip(&a).all(|(x, y)| x >= y));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn spectral_solution_completely_monotone(alpha in 0.1..0.9f64, q in 0.2..3.0f64, lambda in 0.2..3.0f64) {
        let sd = SpectralDensity::new(alpha, q, lambda).unwrap().covering(0.05);
        let times: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
        let v = solve_spectral(&sd, 1.0, &times).unwrap().scalar_values().unwrap();
        prop_assert!(v.iter().all(|&x| x > 0.0));
        prop_assert!(v.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(v.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -1e-12));
    }

    #[test]
    fn semigroup_contracts_at_rate(seed in 0u64..1000, slope in 0.0..1.0f64) {
        let op = build_operator(PI, 60, |x| 1.0 + slope * x, 1.0).unwrap();
        let g: Vec<f64> = op.x_grid().iter().map(|x| ((seed as f64 + 1.0) * x).sin() + 0.3 * x).collect();
        for t in [0.1, 1.0, 10.0] {
            let out = semigroup_apply(&op, t, &g).unwrap();
            prop_assert!(op.norm(&out) <= (-op.eigenvalues()[0] * t).exp() * op.norm(&g) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn poincare_inequality(seed in 0u64..1000, slope in 0.0..2.0f64) {
        let op = build_operator(1.0 + slope, 80, |x| 1.0 + slope * x * x, 1.0).unwrap();
        let u: Vec<f64> = op.x_grid().iter().map(|x| (seed as f64 * 0.37 * x).cos() * x).collect();
        let energy = op.inner(&op.apply(&u), &u);
        prop_assert!(energy >= op.eigenvalues()[0] * op.inner(&u, &u) * (1.0 - 1e-12));
    }
}
