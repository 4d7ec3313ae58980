//! Eigenvalue estimates for discretized transfer operators.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::math::{exp, ln, sin, sqrt};

/// Dominant and subdominant spectral data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub eigenvalue_1: f64,
    /// Modulus of the second largest eigenvalue.
    pub second_modulus: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Same quantities from a dense Schur decomposition, when performed.
    pub dense_check: Option<DenseSpectrum>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSpectrum {
    pub eigenvalue_1: f64,
    pub second_modulus: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// Power iteration. Returns `(λ, v, iterations)` with `‖v‖₂ = 1` and the
/// component of largest modulus positive.
pub fn power_iteration(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> (f64, Vec<f64>, usize) {
    let mut v: Vec<f64> = start.to_vec();
    let n0 = norm(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        let mut y = apply(&v);
        lambda = dot(&v, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return (0.0, v, it);
        }
        let s = if y.iter().copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m }) < 0.0 { -1.0 } else { 1.0 };
        y.iter_mut().for_each(|x| *x *= s / ny);
        let change = y.iter().zip(&v).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        v = y;
        if change <= tol {
            return (lambda, v, it);
        }
    }
    (lambda, v, max_iter)
}

/// Growth rate of `x ↦ A x - λ h (l·x)/(l·h)`, i.e. the modulus of the
/// second eigenvalue.
pub fn deflated_growth(apply: &dyn Fn(&[f64]) -> Vec<f64>, lambda: f64, h: &[f64], l: &[f64], steps: usize) -> f64 {
    let n = h.len();
    let lh = dot(l, h);
    let mut x: Vec<f64> = (0..n).map(|j| sin(1.0 + 1.7 * j as f64) + 0.3).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let tail = (steps / 4).max(1);
    let mut log_growth = 0.0;
    for k in 0..steps {
        let mut y = apply(&x);
        let c = lambda * dot(l, &x) / lh;
        y.iter_mut().zip(h).for_each(|(a, b)| *a -= c * b);
        let ny = norm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return 0.0;
        }
        if k >= steps - tail {
            log_growth += ln(ny);
        }
        y.iter_mut().for_each(|v| *v /= ny);
        x = y;
    }
    exp(log_growth / tail as f64)
}

fn modulus(re: f64, im: f64) -> f64 {
    libm::hypot(re, im)
}

/// Eigenvalue nearest 1 and the largest modulus among the others, from a
/// real Schur decomposition.
pub fn dense_spectrum(m: &DMatrix<f64>) -> Option<DenseSpectrum> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 100_000)?;
    let eig = schur.complex_eigenvalues();
    let idx = (0..eig.len()).min_by(|a, b| {
        let da = modulus(eig[*a].re - 1.0, eig[*a].im);
        let db = modulus(eig[*b].re - 1.0, eig[*b].im);
        da.total_cmp(&db)
    })?;
    let second = (0..eig.len()).filter(|k| *k != idx).map(|k| modulus(eig[k].re, eig[k].im)).fold(0.0, f64::max);
    Some(DenseSpectrum { eigenvalue_1: eig[idx].re, second_modulus: second })
}

/// Full spectral report: power iteration for the dominant pair, a left
/// power iteration, deflation for `|λ₂|`, and an optional dense check.
pub(crate) fn analyse(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    apply_t: &dyn Fn(&[f64]) -> Vec<f64>,
    start: &[f64],
    left_start: &[f64],
    dense: Option<&DMatrix<f64>>,
) -> (SpectralReport, Vec<f64>) {
    let (lambda, v, iterations) = power_iteration(apply, start, 1e-15, 20_000);
    let (_, l, _) = power_iteration(apply_t, left_start, 1e-13, 20_000);
    let second = deflated_growth(apply, lambda, &v, &l, 400);
    let dense_check = dense.filter(|m| m.nrows() <= 128).and_then(dense_spectrum);
    (SpectralReport { eigenvalue_1: lambda, second_modulus: second, gap: 1.0 - second, iterations, dense_check }, v)
}

pub(crate) fn ones(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_on_stochastic_matrix() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.1, 0.3, 0.6, 0.2, 0.2, 0.2, 0.7]);
        let apply = |x: &[f64]| (m.clone() * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let apply_t = |x: &[f64]| (m.transpose() * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let (r, _) = analyse(&apply, &apply_t, &ones(3), &ones(3), Some(&m));
        assert!((r.eigenvalue_1 - 1.0).abs() < 1e-14);
        let d = r.dense_check.unwrap();
        assert!((d.second_modulus - r.second_modulus).abs() < 1e-6, "{r:?}");
    }
}
