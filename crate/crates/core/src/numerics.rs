//! Small numerical helpers shared by the spectral, leakage and filtering code.

use nalgebra::{DMatrix, SymmetricEigen};

/// `e^{-z} I_j(z)` for `j = 0..=n_max`, `z ≥ 0`, via Miller's backward recurrence
/// normalized with `e^{-z}(I_0 + 2 Σ_{j≥1} I_j) = 1`.
pub fn scaled_bessel_i(n_max: usize, z: f64) -> Vec<f64> {
    assert!(z >= 0.0 && z.is_finite(), "argument must be finite and nonnegative");
    let mut out = vec![0.0; n_max + 1];
    if z == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = n_max + 20 + (12.0 * z.sqrt()).ceil() as usize + 20;
    let mut upper = 0.0f64;
    let mut current = 1e-300f64;
    let mut sum = 0.0f64;
    for j in (1..=start).rev() {
        let lower = (2.0 * j as f64 / z) * current + upper;
        if j <= n_max {
            out[j] = current;
        }
        sum += 2.0 * current;
        upper = current;
        current = lower;
        if current > 1e250 {
            let s = 1e-250;
            current *= s;
            upper *= s;
            sum *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    out[0] = current;
    sum += current;
    out.iter_mut().for_each(|v| *v /= sum);
    out
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` from the Jacobi matrix eigenproblem.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i.abs_diff(j) == 1 {
            let m = i.max(j) as f64;
            m / (4.0 * m * m - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..order)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss–Legendre rule on `[a, b]` with panels no wider than `panel`.
pub fn composite_gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panel: f64, order: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre(order.max(2));
    let n = ((b - a) / panel).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let mid = a + (i as f64 + 0.5) * h;
            nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

/// Trapezoid rule over sampled values.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Chebyshev coefficients `c_j` of the degree-`n` interpolant of `f` at the
/// `n + 1` Chebyshev–Gauss nodes, so that `f ≈ Σ_j c_j T_j`.
pub fn chebyshev_interpolate(f: impl Fn(f64) -> f64, n: usize) -> Vec<f64> {
    let m = n + 1;
    let theta: Vec<f64> = (0..m).map(|i| std::f64::consts::PI * (i as f64 + 0.5) / m as f64).collect();
    let vals: Vec<f64> = theta.iter().map(|t| f(t.cos())).collect();
    (0..=n)
        .map(|j| {
            let s: f64 = theta.iter().zip(&vals).map(|(t, v)| v * (j as f64 * t).cos()).sum();
            s * if j == 0 { 1.0 } else { 2.0 } / m as f64
        })
        .collect()
}

/// Clenshaw evaluation of `Σ_j c_j T_j(x)`.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
}
