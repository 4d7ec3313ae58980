//! Gauss-Legendre and Clenshaw-Curtis rules.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{cos, PI};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes increasing.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = cos(PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d.is_finite() {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Legendre polynomial `P_n(z)` and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * z * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| c + h * t).collect(), w.iter().map(|v| h * v).collect())
}

/// Clenshaw-Curtis weights for the `n` Chebyshev-Lobatto points on `[-1, 1]`.
pub fn clenshaw_curtis(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let m = n - 1;
    let mf = m as f64;
    let mut w = vec![0.0; n];
    if m.is_multiple_of(2) {
        w[0] = 1.0 / (mf * mf - 1.0);
    } else {
        w[0] = 1.0 / (mf * mf);
    }
    w[m] = w[0];
    for (j, wj) in w.iter_mut().enumerate().take(m).skip(1) {
        let theta = PI * j as f64 / mf;
        let mut v = 1.0;
        if m.is_multiple_of(2) {
            for k in 1..m / 2 {
                let kf = k as f64;
                v -= 2.0 * cos(2.0 * kf * theta) / (4.0 * kf * kf - 1.0);
            }
            v -= cos(mf * theta) / (mf * mf - 1.0);
        } else {
            for k in 1..=(m - 1) / 2 {
                let kf = k as f64;
                v -= 2.0 * cos(2.0 * kf * theta) / (4.0 * kf * kf - 1.0);
            }
        }
        *wj = 2.0 * v / mf;
    }
    w
}

/// Integral of `f` over `[a, b]` with a composite Gauss-Legendre rule.
pub fn composite_gl(a: f64, b: f64, panels: usize, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * h;
        for (t, wt) in x.iter().zip(&w) {
            s += 0.5 * h * wt * f(c + 0.5 * h * t);
        }
    }
    s
}
