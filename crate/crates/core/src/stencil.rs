//! Finite-difference weights, local interpolation and Gauss–Legendre quadrature.

/// Fornberg's recursion: weights `w[d][j]` such that
/// `f^(d)(z) ≈ Σ_j w[d][j] f(x[j])` for `d = 0..=max_deriv`.
pub fn fornberg(z: f64, x: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let m = max_deriv;
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Weights on integer offsets (unit spacing) for derivative `d` at offset 0.
pub fn offset_weights(offsets: &[i64], d: usize) -> Vec<f64> {
    let x: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
    fornberg(0.0, &x, d).swap_remove(d)
}

/// Centered 5-point, fourth-order weights for the first two derivatives.
pub const D1_C4: [f64; 5] = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
pub const D2_C4: [f64; 5] = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
/// Centered 7-point, fourth-order third derivative.
pub const D3_C4: [f64; 7] = [1.0 / 8.0, -1.0, 13.0 / 8.0, 0.0, -13.0 / 8.0, 1.0, -1.0 / 8.0];

/// Centered even-order derivative evaluated pairwise so that mirrored nodes of
/// an even (or odd) array produce bitwise identical (or negated) results.
#[inline]
pub fn central_even(f: impl Fn(i64) -> f64, w: &[f64]) -> f64 {
    let h = (w.len() / 2) as i64;
    let mut s = w[h as usize] * f(0);
    for k in (1..=h).rev() {
        s += w[(h + k) as usize] * (f(k) + f(-k));
    }
    s
}

/// Odd-order counterpart of [`central_even`] (antisymmetric weights).
#[inline]
pub fn central_odd(f: impl Fn(i64) -> f64, w: &[f64]) -> f64 {
    let h = (w.len() / 2) as i64;
    let mut s = 0.0;
    for k in (1..=h).rev() {
        s += w[(h + k) as usize] * (f(k) - f(-k));
    }
    s
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Composite Gauss–Legendre rule over `[a, b]` split into `panels` pieces.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let (x, w) = gauss_legendre(order);
    let step = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * step;
        let mid = lo + 0.5 * step;
        for (xi, wi) in x.iter().zip(&w) {
            total += wi * f(mid + 0.5 * step * xi);
        }
    }
    total * 0.5 * step
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_recovers_central_weights() {
        let w = offset_weights(&[-2, -1, 0, 1, 2], 2);
        for (a, b) in w.iter().zip(D2_C4.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        let w3 = offset_weights(&[-3, -2, -1, 0, 1, 2, 3], 3);
        for (a, b) in w3.iter().zip(D3_C4.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn one_sided_weights_exact_on_quartics() {
        let offs = [0, 1, 2, 3, 4, 5];
        let w = offset_weights(&offs, 2);
        let f = |x: f64| 3.0 * x.powi(4) - x.powi(3) + 2.0 * x;
        let approx: f64 = offs.iter().zip(&w).map(|(&o, c)| c * f(o as f64)).sum();
        assert!(approx.abs() < 1e-11, "f''(0) = 0, got {approx}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let v = integrate(|x| x.powi(9) + x * x, 0.0, 2.0, 1, 5);
        assert!((v - (2f64.powi(10) / 10.0 + 8.0 / 3.0)).abs() < 1e-11);
    }
}
