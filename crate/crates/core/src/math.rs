//! Thin wrappers over `libm` so the rest of the crate reads like ordinary
//! floating-point code without depending on `std`.

pub use core::f64::consts::{LN_2, PI};

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}
#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}
#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub fn powf(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}
#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

/// Smallest integer `>= x`, saturating at the bounds of `usize`.
pub fn ceil_usize(x: f64) -> usize {
    let c = libm::ceil(x);
    if c <= 0.0 || c.is_nan() {
        0
    } else if c >= usize::MAX as f64 {
        usize::MAX
    } else {
        c as usize
    }
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - floor(x);
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Safeguarded Newton iteration for an increasing function on `[lo, hi]`
/// with `f(lo) <= target <= f(hi)`. `f` returns `(value, derivative)`.
pub(crate) fn solve_increasing(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    start: f64,
    f: impl Fn(f64) -> (f64, f64),
) -> Option<f64> {
    let mut y = start.clamp(lo, hi);
    for _ in 0..200 {
        let (v, d) = f(y);
        let r = v - target;
        if r == 0.0 {
            return Some(y);
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let mut next = y - r / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - y).abs();
        y = next;
        if step <= 2.0 * f64::EPSILON * y.abs() || hi - lo <= 2.0 * f64::EPSILON * hi.abs() {
            return Some(y);
        }
    }
    None
}
