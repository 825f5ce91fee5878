//! One-dimensional numerical kernels: uniform grids, fourth-order finite
//! differences, composite quadrature and a tridiagonal solver.

use crate::error::{Result, SmmsError};

/// Smallest grid a radial profile may be sampled on.
pub const MIN_GRID: usize = 65;

/// `n` equally spaced nodes covering `[a, b]` including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two nodes");
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
}

/// Area of the unit sphere `S^k` embedded in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    // ω_0 = 2, ω_1 = 2π, ω_k = 2π ω_{k-2} / (k - 1).
    let mut even = 2.0;
    let mut odd = 2.0 * std::f64::consts::PI;
    if k == 0 {
        return even;
    }
    if k == 1 {
        return odd;
    }
    for j in 2..=k {
        let next = 2.0 * std::f64::consts::PI / (j as f64 - 1.0) * if j % 2 == 0 { even } else { odd };
        if j % 2 == 0 {
            even = next;
        } else {
            odd = next;
        }
    }
    if k % 2 == 0 {
        even
    } else {
        odd
    }
}

/// Composite Simpson weights on `n` uniform nodes with spacing `h`; `n` must
/// be odd.
pub fn simpson_weights(n: usize, h: f64) -> Result<Vec<f64>> {
    if n < 3 || n % 2 == 0 {
        return Err(SmmsError::InvalidParameter(format!("Simpson's rule needs an odd node count >= 3, got {n}")));
    }
    Ok((0..n)
        .map(|i| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect())
}

/// Trapezoid weights on `n` uniform nodes with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect()
}

/// Simpson quadrature of samples on a uniform grid.
pub fn simpson(values: &[f64], h: f64) -> Result<f64> {
    let w = simpson_weights(values.len(), h)?;
    Ok(values.iter().zip(&w).map(|(v, w)| v * w).sum())
}

// Fourth-order stencils. Interior: centered five-point. Near the ends:
// one-sided six-point (first derivative) and six-point (second derivative)
// formulas, both fourth order.
const D1_CENTER: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const D2_CENTER: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
const D1_EDGE0: [f64; 5] = [-25.0 / 12.0, 48.0 / 12.0, -36.0 / 12.0, 16.0 / 12.0, -3.0 / 12.0];
const D1_EDGE1: [f64; 5] = [-3.0 / 12.0, -10.0 / 12.0, 18.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0];
const D2_EDGE0: [f64; 6] = [45.0 / 12.0, -154.0 / 12.0, 214.0 / 12.0, -156.0 / 12.0, 61.0 / 12.0, -10.0 / 12.0];
const D2_EDGE1: [f64; 6] = [10.0 / 12.0, -15.0 / 12.0, -4.0 / 12.0, 14.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0];

fn check_fd_len(n: usize) -> Result<()> {
    if n < 6 {
        Err(SmmsError::InvalidParameter(format!("finite differences need >= 6 nodes, got {n}")))
    } else {
        Ok(())
    }
}

/// Fourth-order first derivative of uniformly sampled data.
pub fn fd_first(y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    check_fd_len(n)?;
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (0..5).map(|k| D1_CENTER[k] * y[i + k - 2]).sum::<f64>() / h;
    }
    d[0] = (0..5).map(|k| D1_EDGE0[k] * y[k]).sum::<f64>() / h;
    d[1] = (0..5).map(|k| D1_EDGE1[k] * y[k]).sum::<f64>() / h;
    // Mirrored closures flip sign for the odd derivative.
    d[n - 1] = -(0..5).map(|k| D1_EDGE0[k] * y[n - 1 - k]).sum::<f64>() / h;
    d[n - 2] = -(0..5).map(|k| D1_EDGE1[k] * y[n - 1 - k]).sum::<f64>() / h;
    Ok(d)
}

/// Fourth-order second derivative of uniformly sampled data.
pub fn fd_second(y: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = y.len();
    check_fd_len(n)?;
    let h2 = h * h;
    let mut d = vec![0.0; n];
    for i in 2..n - 2 {
        d[i] = (0..5).map(|k| D2_CENTER[k] * y[i + k - 2]).sum::<f64>() / h2;
    }
    d[0] = (0..6).map(|k| D2_EDGE0[k] * y[k]).sum::<f64>() / h2;
    d[1] = (0..6).map(|k| D2_EDGE1[k] * y[k]).sum::<f64>() / h2;
    d[n - 1] = (0..6).map(|k| D2_EDGE0[k] * y[n - 1 - k]).sum::<f64>() / h2;
    d[n - 2] = (0..6).map(|k| D2_EDGE1[k] * y[n - 1 - k]).sum::<f64>() / h2;
    Ok(d)
}

/// Integral over one interval of the quintic Hermite interpolant built from
/// value, first and second derivative at both ends. Exact for quintics.
pub fn hermite_segment_integral(h: f64, f0: [f64; 3], f1: [f64; 3]) -> f64 {
    h * (f0[0] + f1[0]) / 2.0 + h * h * (f0[1] - f1[1]) / 10.0 + h * h * h * (f0[2] + f1[2]) / 120.0
}

/// Quintic Hermite interpolation on `[x0, x1]`, returning value, first and
/// second derivative at `x`.
pub fn hermite_eval(x0: f64, x1: f64, f0: [f64; 3], f1: [f64; 3], x: f64) -> [f64; 3] {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    // Basis functions and their t-derivatives.
    let h0 = [1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5, -30.0 * t2 + 60.0 * t3 - 30.0 * t4, -60.0 * t + 180.0 * t2 - 120.0 * t3];
    let h1 = [t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5, 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4, -36.0 * t + 96.0 * t2 - 60.0 * t3];
    let h2 = [
        0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5,
        t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4,
        1.0 - 9.0 * t + 18.0 * t2 - 10.0 * t3,
    ];
    let h3 = [10.0 * t3 - 15.0 * t4 + 6.0 * t5, 30.0 * t2 - 60.0 * t3 + 30.0 * t4, 60.0 * t - 180.0 * t2 + 120.0 * t3];
    let h4 = [-4.0 * t3 + 7.0 * t4 - 3.0 * t5, -12.0 * t2 + 28.0 * t3 - 15.0 * t4, -24.0 * t + 84.0 * t2 - 60.0 * t3];
    let h5 = [
        0.5 * t3 - t4 + 0.5 * t5,
        1.5 * t2 - 4.0 * t3 + 2.5 * t4,
        3.0 * t - 12.0 * t2 + 10.0 * t3,
    ];
    let mut out = [0.0; 3];
    let scale = [1.0, 1.0 / h, 1.0 / (h * h)];
    for (d, o) in out.iter_mut().enumerate() {
        *o = (f0[0] * h0[d] + h * f0[1] * h1[d] + h * h * f0[2] * h2[d]
            + f1[0] * h3[d]
            + h * f1[1] * h4[d]
            + h * h * f1[2] * h5[d])
            * scale[d];
    }
    out
}

/// Solve a symmetric positive definite tridiagonal system in place
/// (Thomas algorithm). `diag` has length `n`, `off` length `n - 1`.
pub fn solve_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() + 1 != n || rhs.len() != n {
        return Err(SmmsError::DimensionMismatch(off.len() + 1, n));
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < f64::MIN_POSITIVE {
        return Err(SmmsError::NotConverged("singular tridiagonal system".into()));
    }
    if n > 1 {
        c[0] = off[0] / denom;
    }
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(SmmsError::NotConverged("singular tridiagonal system".into()));
        }
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Observed order of convergence from errors at successive halvings of the
/// step size.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
