//! Symmetric tridiagonal linear algebra: implicit-shift QL eigensolver and
//! the Thomas solver for SPD systems.

use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct TridiagEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit (Euclidean) eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Which part of the eigenvector matrix to accumulate.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Accumulate {
    Full,
    FirstRow,
}

/// Full eigen-decomposition. `diag` has length n, `off` has length n - 1.
pub fn symmetric_tridiagonal_eigen(diag: &[f64], off: &[f64]) -> Result<TridiagEigen> {
    let n = diag.len();
    check_shape(n, off.len())?;
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    let mut d = diag.to_vec();
    ql_implicit(&mut d, off, &mut z, n, Accumulate::Full)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    // z is row-major with z[row * n + col]; column col holds eigenvector col
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|row| z[row * n + k]).collect())
        .collect();
    Ok(TridiagEigen { values, vectors })
}

/// Eigenvalues together with the first component of each unit eigenvector,
/// in ascending eigenvalue order. This is all Golub-Welsch needs, and costs
/// O(n²) instead of O(n³).
pub fn eigen_first_components(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    check_shape(n, off.len())?;
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    let mut d = diag.to_vec();
    ql_implicit(&mut d, off, &mut z, n, Accumulate::FirstRow)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    Ok((
        order.iter().map(|&k| d[k]).collect(),
        order.iter().map(|&k| z[k]).collect(),
    ))
}

fn check_shape(n: usize, n_off: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("matrix", "empty tridiagonal matrix"));
    }
    if n_off + 1 != n {
        return Err(Error::invalid(
            "matrix",
            format!("off-diagonal length {n_off} does not match dimension {n}"),
        ));
    }
    Ok(())
}

// Implicit QL with Wilkinson shifts (tql2). With `Accumulate::FirstRow`, `z`
// holds only row 0 of the eigenvector matrix.
fn ql_implicit(d: &mut [f64], off: &[f64], z: &mut [f64], n: usize, acc: Accumulate) -> Result<()> {
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::invalid("matrix", "QL iteration did not converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                match acc {
                    Accumulate::Full => {
                        for k in 0..n {
                            let row = k * n;
                            f = z[row + i + 1];
                            z[row + i + 1] = s * z[row + i] + c * f;
                            z[row + i] = c * z[row + i] - s * f;
                        }
                    }
                    Accumulate::FirstRow => {
                        f = z[i + 1];
                        z[i + 1] = s * z[i] + c * f;
                        z[i] = c * z[i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Solve a tridiagonal system by the Thomas algorithm.
///
/// `lower[i]` multiplies `x[i]` in row `i + 1`, `upper[i]` multiplies
/// `x[i + 1]` in row `i`. A non-positive pivot is reported as
/// `Err(node)`; for SPD systems no pivot can be non-positive.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot <= 0.0 {
        return Err((0, pivot));
    }
    c_prime[0] = if n > 1 { upper[0] / pivot } else { 0.0 };
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c_prime[i - 1];
        if pivot <= 0.0 {
            return Err((i, pivot));
        }
        if i + 1 < n {
            c_prime[i] = upper[i] / pivot;
        }
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn discrete_laplacian_spectrum_is_exact() {
        // tridiag(-1, 2, -1) of size n has eigenvalues 2 - 2 cos(kπ/(n+1))
        let n = 50;
        let eig = symmetric_tridiagonal_eigen(&vec![2.0; n], &vec![-1.0; n - 1]).unwrap();
        for (k, lam) in eig.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * PI / (n + 1) as f64).cos();
            assert!((lam - exact).abs() < 1e-12, "k={k}: {lam} vs {exact}");
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal_and_satisfy_equation() {
        let diag: Vec<f64> = (0..30).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        let off: Vec<f64> = (0..29).map(|i| 0.3 + 0.1 * (i as f64).cos()).collect();
        let eig = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let n = diag.len();
        for (j, vj) in eig.vectors.iter().enumerate() {
            for (k, vk) in eig.vectors.iter().enumerate() {
                let dot: f64 = vj.iter().zip(vk).map(|(a, b)| a * b).sum();
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
            for i in 0..n {
                let mut av = diag[i] * vj[i];
                if i > 0 {
                    av += off[i - 1] * vj[i - 1];
                }
                if i + 1 < n {
                    av += off[i] * vj[i + 1];
                }
                assert!((av - eig.values[j] * vj[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_row_mode_matches_full() {
        let diag = [4.0, 1.0, 3.0, 2.0, 5.0];
        let off = [0.5, -1.0, 0.25, 0.75];
        let full = symmetric_tridiagonal_eigen(&diag, &off).unwrap();
        let (vals, first) = eigen_first_components(&diag, &off).unwrap();
        for k in 0..5 {
            assert!((vals[k] - full.values[k]).abs() < 1e-13);
            assert!((first[k].abs() - full.vectors[k][0].abs()).abs() < 1e-13);
        }
    }

    #[test]
    fn thomas_solves_spd_system() {
        let n = 6;
        let lower = vec![-1.0; n - 1];
        let upper = lower.clone();
        let diag = vec![2.5; n];
        let x_true: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += lower[i - 1] * x_true[i - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x_true[i + 1];
                }
                v
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(solve_tridiagonal(&lower, &[-1.0; 6], &upper, &rhs).unwrap_err().0, 0);
    }
}
