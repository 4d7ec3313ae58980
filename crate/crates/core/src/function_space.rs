//! Nodal representations of functions on `[0,1]` and on the circle.
//!
//! Every basis is interpolatory: a function is stored by its values at the
//! nodes, and the cardinal functions `ℓ_j` satisfy `ℓ_j(x_i) = δ_ij`.
//! Transfer operators are assembled from `ℓ_j` evaluated at preimages.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, frac, powf, sin, tan, PI};
use crate::quadrature::clenshaw_curtis;

/// Chebyshev-Lobatto interpolation on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevBasis {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    weights: Vec<f64>,
    /// Row-major differentiation matrix.
    diff: Vec<f64>,
}

impl ChebyshevBasis {
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::config(format!("Chebyshev basis needs N >= 4, got {n}")));
        }
        if !(a < b) {
            return Err(Error::config(format!("empty Chebyshev interval [{a}, {b}]")));
        }
        let m = (n - 1) as f64;
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut nodes: Vec<f64> = (0..n).map(|j| c - h * cos(PI * j as f64 / m)).collect();
        nodes[0] = a;
        nodes[n - 1] = b;
        if n % 2 == 1 {
            nodes[n / 2] = c;
        }
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let weights = clenshaw_curtis(n).into_iter().map(|w| w * h).collect();
        // Stable off-diagonal entries from the unit-interval nodes, then the
        // negative-sum trick on the diagonal.
        let t: Vec<f64> = (0..n).map(|j| -cos(PI * j as f64 / m)).collect();
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                if i != j {
                    let d = (bary[j] / bary[i]) / (t[i] - t[j]) / h;
                    diff[i * n + j] = d;
                    s += d;
                }
            }
            diff[i * n + i] = -s;
        }
        Ok(ChebyshevBasis { a, b, nodes, bary, weights, diff })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn cardinal(&self, x: f64, buf: &mut Vec<f64>) {
        let n = self.nodes.len();
        buf.clear();
        buf.resize(n, 0.0);
        let mut s = 0.0;
        for j in 0..n {
            let d = x - self.nodes[j];
            if d == 0.0 {
                buf.iter_mut().for_each(|v| *v = 0.0);
                buf[j] = 1.0;
                return;
            }
            let t = self.bary[j] / d;
            buf[j] = t;
            s += t;
        }
        let inv = 1.0 / s;
        buf.iter_mut().for_each(|v| *v *= inv);
    }
}

/// Trigonometric interpolation at `N` equispaced nodes on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierBasis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diff: Vec<f64>,
}

impl FourierBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::config(format!("Fourier basis needs N >= 4, got {n}")));
        }
        let nf = n as f64;
        let nodes = (0..n).map(|j| j as f64 / nf).collect();
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let k = i as f64 - j as f64;
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let arg = PI * k / nf;
                    diff[i * n + j] = if n.is_multiple_of(2) { sign * PI / tan(arg) } else { sign * PI / sin(arg) };
                }
            }
        }
        Ok(FourierBasis { nodes, weights: vec![1.0 / nf; n], diff })
    }

    fn cardinal(&self, x: f64, buf: &mut Vec<f64>) {
        let n = self.nodes.len();
        let nf = n as f64;
        let x = frac(x);
        buf.clear();
        buf.resize(n, 0.0);
        let s = sin(PI * nf * x);
        for j in 0..n {
            let mut t = x - self.nodes[j];
            if t > 0.5 {
                t -= 1.0;
            } else if t <= -0.5 {
                t += 1.0;
            }
            if t.abs() < 1e-15 {
                buf.iter_mut().for_each(|v| *v = 0.0);
                buf[j] = 1.0;
                return;
            }
            // sin(πN(x - j/N)) = (-1)^j sin(πNx)
            let num = if j % 2 == 0 { s } else { -s };
            let den = if n.is_multiple_of(2) { nf * tan(PI * t) } else { nf * sin(PI * (x - self.nodes[j])) };
            buf[j] = num / den;
        }
    }
}

/// Piecewise constants on `K` equal bins of `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamBasis {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl UlamBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k < 4 {
            return Err(Error::config(format!("Ulam basis needs K >= 4, got {k}")));
        }
        let kf = k as f64;
        Ok(UlamBasis { nodes: (0..k).map(|i| (i as f64 + 0.5) / kf).collect(), weights: vec![1.0 / kf; k] })
    }

    pub fn bin(&self, x: f64) -> usize {
        let k = self.nodes.len();
        let i = (x * k as f64) as isize;
        i.clamp(0, k as isize - 1) as usize
    }
}

/// Chebyshev panels on a graded mesh, for functions singular at 0.
///
/// Panels are stored from left to right; neighbouring panels share their
/// common endpoint as a node. Below the first breakpoint values are
/// extrapolated as a constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelBasis {
    panels: Vec<ChebyshevBasis>,
    offsets: Vec<usize>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelBasis {
    pub fn new(panels: Vec<ChebyshevBasis>) -> Result<Self> {
        if panels.is_empty() {
            return Err(Error::config("panel basis needs at least one panel"));
        }
        for w in panels.windows(2) {
            if w[0].b != w[1].a {
                return Err(Error::config("panels must be contiguous"));
            }
        }
        let mut offsets = Vec::with_capacity(panels.len());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for p in &panels {
            offsets.push(nodes.len());
            nodes.extend_from_slice(&p.nodes);
            weights.extend_from_slice(&p.weights);
        }
        Ok(PanelBasis { panels, offsets, nodes, weights })
    }

    /// Dyadic panels `[2^-(k+1), 2^-k]` down to `lower`, the top panel
    /// `[1/2, 1]` carrying `top_nodes` nodes.
    pub fn dyadic(lower: f64, top_nodes: usize, panel_nodes: usize) -> Result<Self> {
        if !(lower > 0.0 && lower < 0.5) {
            return Err(Error::config(format!("panel lower bound must lie in (0, 1/2), got {lower}")));
        }
        let mut breaks = vec![1.0];
        while *breaks.last().unwrap() > lower {
            let b = breaks.last().unwrap() * 0.5;
            breaks.push(b);
        }
        breaks.reverse();
        let k = breaks.len() - 1;
        let mut panels = Vec::with_capacity(k);
        for i in 0..k {
            let n = if i == k - 1 { top_nodes } else { panel_nodes };
            panels.push(ChebyshevBasis::new(n, breaks[i], breaks[i + 1])?);
        }
        PanelBasis::new(panels)
    }

    pub fn lower(&self) -> f64 {
        self.panels[0].a
    }

    pub fn panels(&self) -> &[ChebyshevBasis] {
        &self.panels
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Index of the panel used for `x` (upper panel at shared endpoints).
    pub fn locate(&self, x: f64) -> usize {
        let (mut lo, mut hi) = (0usize, self.panels.len());
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if x >= self.panels[mid].a {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Nodal basis.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    Chebyshev(ChebyshevBasis),
    Fourier(FourierBasis),
    Ulam(UlamBasis),
    Panels(PanelBasis),
}

impl Basis {
    pub fn chebyshev(n: usize) -> Result<Arc<Basis>> {
        Ok(Arc::new(Basis::Chebyshev(ChebyshevBasis::new(n, 0.0, 1.0)?)))
    }

    pub fn chebyshev_on(n: usize, a: f64, b: f64) -> Result<Arc<Basis>> {
        Ok(Arc::new(Basis::Chebyshev(ChebyshevBasis::new(n, a, b)?)))
    }

    pub fn fourier(n: usize) -> Result<Arc<Basis>> {
        Ok(Arc::new(Basis::Fourier(FourierBasis::new(n)?)))
    }

    pub fn ulam(k: usize) -> Result<Arc<Basis>> {
        Ok(Arc::new(Basis::Ulam(UlamBasis::new(k)?)))
    }

    pub fn len(&self) -> usize {
        self.nodes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn nodes(&self) -> &[f64] {
        match self {
            Basis::Chebyshev(c) => &c.nodes,
            Basis::Fourier(f) => &f.nodes,
            Basis::Ulam(u) => &u.nodes,
            Basis::Panels(p) => &p.nodes,
        }
    }

    /// Quadrature weights: `∫ f ≈ Σ w_j f(x_j)`.
    pub fn weights(&self) -> &[f64] {
        match self {
            Basis::Chebyshev(c) => &c.weights,
            Basis::Fourier(f) => &f.weights,
            Basis::Ulam(u) => &u.weights,
            Basis::Panels(p) => &p.weights,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Basis::Chebyshev(c) => (c.a, c.b),
            Basis::Panels(p) => (p.lower(), 1.0),
            _ => (0.0, 1.0),
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Basis::Fourier(_))
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Basis::Chebyshev(_) => "chebyshev",
            Basis::Fourier(_) => "fourier",
            Basis::Ulam(_) => "ulam",
            Basis::Panels(_) => "panels",
        }
    }

    /// True if `x` lies where values are extrapolated rather than interpolated.
    pub fn extrapolates(&self, x: f64) -> bool {
        match self {
            Basis::Panels(p) => x < p.lower(),
            Basis::Chebyshev(c) => x < c.a || x > c.b,
            _ => false,
        }
    }

    /// Fills `buf` with `ℓ_{start+k}(x)` and returns `start`.
    pub fn cardinal(&self, x: f64, buf: &mut Vec<f64>) -> usize {
        match self {
            Basis::Chebyshev(c) => {
                c.cardinal(x, buf);
                0
            }
            Basis::Fourier(f) => {
                f.cardinal(x, buf);
                0
            }
            Basis::Ulam(u) => {
                buf.clear();
                buf.push(1.0);
                u.bin(x)
            }
            Basis::Panels(p) => {
                let x = x.max(p.lower());
                let k = p.locate(x);
                p.panels[k].cardinal(x, buf);
                p.offsets[k]
            }
        }
    }

    /// Fills `buf` with `ℓ'_{start+k}(x)` and returns `start`.
    pub fn cardinal_derivative(&self, x: f64, buf: &mut Vec<f64>) -> Result<usize> {
        let mut row = Vec::new();
        let start = self.cardinal(x, &mut row);
        let (diff, n) = match self {
            Basis::Chebyshev(c) => (&c.diff, c.nodes.len()),
            Basis::Fourier(f) => (&f.diff, f.nodes.len()),
            Basis::Panels(p) => {
                if x < p.lower() {
                    buf.clear();
                    buf.resize(row.len(), 0.0);
                    return Ok(start);
                }
                let k = p.locate(x);
                (&p.panels[k].diff, p.panels[k].nodes.len())
            }
            Basis::Ulam(_) => return Err(Error::Unsupported("differentiation in the Ulam basis".into())),
        };
        buf.clear();
        buf.resize(n, 0.0);
        for (k, l) in row.iter().enumerate() {
            if *l != 0.0 {
                let r = &diff[k * n..(k + 1) * n];
                for j in 0..n {
                    buf[j] += l * r[j];
                }
            }
        }
        Ok(start)
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let mut buf = Vec::new();
        let start = self.cardinal(x, &mut buf);
        buf.iter().enumerate().map(|(k, l)| l * values[start + k]).sum()
    }

    /// Nodal values of the derivative of the interpolant.
    pub fn differentiate(&self, values: &[f64]) -> Result<Vec<f64>> {
        let apply = |diff: &[f64], v: &[f64], out: &mut [f64]| {
            let n = v.len();
            for i in 0..n {
                out[i] = (0..n).map(|j| diff[i * n + j] * v[j]).sum();
            }
        };
        let mut out = vec![0.0; values.len()];
        match self {
            Basis::Chebyshev(c) => apply(&c.diff, values, &mut out),
            Basis::Fourier(f) => apply(&f.diff, values, &mut out),
            Basis::Panels(p) => {
                for (k, panel) in p.panels.iter().enumerate() {
                    let (s, n) = (p.offsets[k], panel.nodes.len());
                    apply(&panel.diff, &values[s..s + n], &mut out[s..s + n]);
                }
            }
            Basis::Ulam(_) => return Err(Error::Unsupported("differentiation in the Ulam basis".into())),
        }
        Ok(out)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Points of the grid used for `‖·‖_H`: `((i+1)/M)^3`, graded towards 0.
pub fn h_norm_grid(m: usize) -> Vec<f64> {
    (0..m).map(|i| powf((i as f64 + 1.0) / m as f64, 3.0)).collect()
}

/// Default size of the `‖·‖_H` grid.
pub const H_NORM_GRID: usize = 10_000;

/// `max |x^γ f(x)|` over [`h_norm_grid`].
pub fn h_norm_fn(f: impl Fn(f64) -> f64, gamma: f64) -> f64 {
    h_norm_grid(H_NORM_GRID).into_iter().fold(0.0, |m, x| m.max((powf(x, gamma) * f(x)).abs()))
}

/// A function stored by its nodal values in a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFunction {
    basis: Arc<Basis>,
    values: Vec<f64>,
    normalized: bool,
}

impl DensityFunction {
    pub fn new(basis: Arc<Basis>, values: Vec<f64>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::Precondition(format!("{} values for a basis of size {}", values.len(), basis.len())));
        }
        Ok(DensityFunction { basis, values, normalized: false })
    }

    pub fn from_fn(basis: Arc<Basis>, f: impl Fn(f64) -> f64) -> Self {
        let values = basis.nodes().iter().map(|x| f(*x)).collect();
        DensityFunction { basis, values, normalized: false }
    }

    pub fn zeros(basis: Arc<Basis>) -> Self {
        let n = basis.len();
        DensityFunction { basis, values: vec![0.0; n], normalized: false }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.basis.eval(&self.values, x)
    }

    pub fn integrate(&self) -> f64 {
        self.basis.integrate(&self.values)
    }

    pub fn differentiate(&self) -> Result<DensityFunction> {
        Ok(DensityFunction { basis: self.basis.clone(), values: self.basis.differentiate(&self.values)?, normalized: false })
    }

    /// Rescales so that the integral is 1.
    pub fn normalize(&self) -> Result<DensityFunction> {
        let m = self.integrate();
        if !(m.abs() > 0.0) || !m.is_finite() {
            return Err(Error::Precondition(format!("cannot normalize a function with integral {m}")));
        }
        let mut out = self.scale(1.0 / m);
        out.normalized = true;
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> DensityFunction {
        DensityFunction { basis: self.basis.clone(), values: self.values.iter().map(|v| v * s).collect(), normalized: false }
    }

    /// `self + s · other`.
    pub fn axpy(&self, s: f64, other: &DensityFunction) -> Result<DensityFunction> {
        if self.basis != other.basis {
            return Err(Error::Precondition("functions live in different bases".into()));
        }
        Ok(DensityFunction {
            basis: self.basis.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
            normalized: false,
        })
    }

    pub fn sub(&self, other: &DensityFunction) -> Result<DensityFunction> {
        self.axpy(-1.0, other)
    }

    /// Largest absolute nodal value.
    pub fn max_abs_nodal(&self) -> f64 {
        crate::math::max_abs(&self.values)
    }

    /// `max |f|` over the nodes and a uniform grid of `m` points.
    pub fn sup_norm(&self, m: usize) -> f64 {
        let (a, b) = self.basis.domain();
        let grid = (0..m).map(|i| self.eval(a + (b - a) * i as f64 / (m.max(2) - 1) as f64).abs());
        grid.fold(self.max_abs_nodal(), f64::max)
    }

    /// `max |x^γ f(x)|` over the `‖·‖_H` grid.
    pub fn h_norm(&self, gamma: f64) -> f64 {
        h_norm_fn(|x| self.eval(x), gamma)
    }

    /// `∫ φ f` by a composite Gauss-Legendre rule over the basis domain.
    pub fn integrate_against(&self, phi: impl Fn(f64) -> f64) -> f64 {
        match self.basis.as_ref() {
            Basis::Panels(p) => p
                .panels()
                .iter()
                .map(|c| crate::quadrature::composite_gl(c.a, c.b, 2, 16, |x| phi(x) * self.eval(x)))
                .sum(),
            Basis::Ulam(u) => {
                let k = u.nodes.len();
                (0..k)
                    .map(|i| {
                        let (a, b) = (i as f64 / k as f64, (i + 1) as f64 / k as f64);
                        self.values[i] * crate::quadrature::composite_gl(a, b, 1, 4, &phi)
                    })
                    .sum()
            }
            _ => {
                let (a, b) = self.basis.domain();
                crate::quadrature::composite_gl(a, b, 64, 8, |x| phi(x) * self.eval(x))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{ln, LN_2};

    fn h_gauss(x: f64) -> f64 {
        1.0 / ((1.0 + x) * LN_2)
    }

    #[test]
    fn evaluation_examples() {
        let b = Basis::chebyshev(40).unwrap();
        let one = DensityFunction::from_fn(b.clone(), |_| 1.0);
        assert!((one.eval(0.377) - 1.0).abs() < 1e-14);
        let h = DensityFunction::from_fn(b, h_gauss);
        assert!((h.eval(0.0) - 1.0 / LN_2).abs() < 1e-14);
        let f = DensityFunction::from_fn(Basis::fourier(16).unwrap(), |x| cos(2.0 * PI * x));
        assert!(f.eval(0.25).abs() < 1e-12);
        assert!((f.eval(0.1) - cos(0.2 * PI)).abs() < 1e-12);
    }

    #[test]
    fn integration_examples() {
        let b = Basis::chebyshev(40).unwrap();
        assert!((DensityFunction::from_fn(b.clone(), |_| 1.0).integrate() - 1.0).abs() < 1e-14);
        assert!((DensityFunction::from_fn(b.clone(), h_gauss).integrate() - 1.0).abs() < 1e-10);
        assert!((DensityFunction::from_fn(b, |x| x).integrate() - 0.5).abs() < 1e-14);
        let f = DensityFunction::from_fn(Basis::fourier(8).unwrap(), |x| 2.0 + sin(2.0 * PI * x));
        assert!((f.integrate() - 2.0).abs() < 1e-14);
        let u = DensityFunction::from_fn(Basis::ulam(64).unwrap(), |_| 1.0);
        assert!((u.integrate() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn differentiation_examples() {
        let b = Basis::chebyshev(40).unwrap();
        assert!(DensityFunction::from_fn(b.clone(), |_| 3.0).differentiate().unwrap().max_abs_nodal() < 1e-11);
        let d = DensityFunction::from_fn(b.clone(), |x| x * x).differentiate().unwrap();
        assert!(b.nodes().iter().zip(d.values()).all(|(x, v)| (v - 2.0 * x).abs() < 1e-10));
        let dh = DensityFunction::from_fn(b.clone(), h_gauss).differentiate().unwrap();
        let exact = |x: f64| -1.0 / ((1.0 + x) * (1.0 + x) * LN_2);
        assert!(b.nodes().iter().zip(dh.values()).all(|(x, v)| (v - exact(*x)).abs() < 1e-8));
        let f = Basis::fourier(32).unwrap();
        let df = DensityFunction::from_fn(f.clone(), |x| sin(2.0 * PI * x)).differentiate().unwrap();
        assert!(f.nodes().iter().zip(df.values()).all(|(x, v)| (v - 2.0 * PI * cos(2.0 * PI * x)).abs() < 1e-10));
        let u = DensityFunction::from_fn(Basis::ulam(16).unwrap(), |x| x);
        assert!(matches!(u.differentiate(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn odd_fourier_differentiation() {
        let f = Basis::fourier(17).unwrap();
        let df = DensityFunction::from_fn(f.clone(), |x| cos(4.0 * PI * x)).differentiate().unwrap();
        assert!(f.nodes().iter().zip(df.values()).all(|(x, v)| (v + 4.0 * PI * sin(4.0 * PI * x)).abs() < 1e-10));
        let g = DensityFunction::from_fn(f, |x| sin(2.0 * PI * x));
        assert!((g.eval(0.123) - sin(2.0 * PI * 0.123)).abs() < 1e-12);
    }

    #[test]
    fn h_norm_examples() {
        let one = DensityFunction::from_fn(Basis::chebyshev(8).unwrap(), |_| 1.0);
        assert!((one.h_norm(0.5) - 1.0).abs() < 1e-14);
        assert!((h_norm_fn(|x| 1.0 / x, 1.0) - 1.0).abs() < 1e-12);
        assert!((h_norm_fn(|x| powf(x, -0.3), 0.5) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_convergence() {
        let f = |x: f64| 1.0 / (1.0 + 4.0 * x * x);
        let errs: Vec<f64> = [8, 16, 32]
            .iter()
            .map(|n| {
                let d = DensityFunction::from_fn(Basis::chebyshev(*n).unwrap(), f);
                (0..200).map(|i| (d.eval(i as f64 / 199.0) - f(i as f64 / 199.0)).abs()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 0.1 * errs[0] && errs[2] < 0.01 * errs[1], "{errs:?}");
    }

    #[test]
    fn panels_resolve_singular_function() {
        let b = Arc::new(Basis::Panels(PanelBasis::dyadic(1e-6, 24, 16).unwrap()));
        let f = |x: f64| powf(x, -0.3) + ln(1.0 + x);
        let d = DensityFunction::from_fn(b.clone(), f);
        for x in [1e-5, 3.3e-4, 0.01, 0.2, 0.5, 0.77, 1.0] {
            assert!((d.eval(x) - f(x)).abs() < 1e-10 * f(x), "x={x}");
        }
        let df = d.differentiate().unwrap();
        let mut buf = Vec::new();
        let s = b.cardinal_derivative(0.0123, &mut buf).unwrap();
        let v: f64 = buf.iter().enumerate().map(|(k, l)| l * d.values()[s + k]).sum();
        assert!((v - df.eval(0.0123)).abs() < 1e-8 * v.abs());
        assert!(b.extrapolates(1e-7) && !b.extrapolates(0.3));
        let exact = 1.0 / 0.7 * (1.0 - powf(b.domain().0, 0.7)) + 2.0 * ln(2.0) - 1.0;
        assert!((d.integrate() - exact).abs() < 1e-9);
    }
}
