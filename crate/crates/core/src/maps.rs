//! Concrete interval and circle maps with their inverse branches.
//!
//! Every family is piecewise monotone with full branches, so the transfer
//! operator at `x` is a sum over preimages `g_z(x)`. Finite families solve
//! for preimages numerically; Gauss and Rényi have closed forms and
//! countably many branches.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{cos, frac, ln, powf, sin, solve_increasing, PI};

/// Phase space of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Circle,
    UnitInterval,
}

/// A family of maps indexed by a real parameter `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapTemplate {
    /// `T(x) = 2x + u sin(2πx) mod 1`
    ExpandingCircle,
    /// `1/x mod 1`, parameter ignored
    Gauss,
    /// `1/(1-x) mod 1`, parameter ignored
    Renyi,
    /// Liverani-Saussol-Vaienti map with exponent `u`
    Lsv,
}

impl MapTemplate {
    pub fn at(self, u: f64) -> Result<MapFamily> {
        match self {
            MapTemplate::ExpandingCircle => MapFamily::expanding_circle(u),
            MapTemplate::Gauss => Ok(MapFamily::Gauss),
            MapTemplate::Renyi => Ok(MapFamily::Renyi),
            MapTemplate::Lsv => MapFamily::lsv(u),
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            MapTemplate::ExpandingCircle => Domain::Circle,
            _ => Domain::UnitInterval,
        }
    }

    /// Whether the maps actually depend on `u`.
    pub fn is_parametric(self) -> bool {
        matches!(self, MapTemplate::ExpandingCircle | MapTemplate::Lsv)
    }

    /// Open interval of admissible parameters, `None` if any value is accepted.
    pub fn parameter_range(self) -> Option<(f64, f64)> {
        match self {
            MapTemplate::ExpandingCircle => Some((-0.5 / PI, 0.5 / PI)),
            MapTemplate::Lsv => Some((0.0, 1.0)),
            _ => None,
        }
    }

    pub fn has_countable_branches(self) -> bool {
        matches!(self, MapTemplate::Gauss | MapTemplate::Renyi)
    }

    pub fn name(self) -> &'static str {
        match self {
            MapTemplate::ExpandingCircle => "expanding-circle",
            MapTemplate::Gauss => "gauss",
            MapTemplate::Renyi => "renyi",
            MapTemplate::Lsv => "lsv",
        }
    }
}

/// A single map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapFamily {
    ExpandingCircle { lambda: f64 },
    Gauss,
    Renyi,
    Lsv { alpha: f64 },
}

/// Derivatives of the monotone lap of `T` through a point `y`.
///
/// `du` and `du_d1` are the parameter derivatives `∂_u T` and `∂_u T'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub du: f64,
    pub du_d1: f64,
}

/// Value and first three derivatives of an inverse branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl InverseJet {
    fn from_forward(y: f64, t: &ForwardJet) -> Self {
        let (t1, t2, t3) = (t.d1, t.d2, t.d3);
        InverseJet {
            value: y,
            d1: 1.0 / t1,
            d2: -t2 / (t1 * t1 * t1),
            d3: (3.0 * t2 * t2 - t1 * t3) / powf(t1, 5.0),
        }
    }

    fn affine(value: f64, slope: f64) -> Self {
        InverseJet { value, d1: slope, d2: 0.0, d3: 0.0 }
    }
}

/// Parameter sensitivity of an inverse branch: `∂_u g` and `∂_u g'`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamJet {
    pub du: f64,
    pub du_d1: f64,
}

/// One preimage of `x`, as consumed by transfer-operator kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Preimage {
    pub y: f64,
    /// `|g'(x)|`
    pub weight: f64,
    /// `∂_u g(x)`
    pub dy_du: f64,
    /// `∂_u |g'(x)|`
    pub dweight_du: f64,
}

impl MapFamily {
    pub fn expanding_circle(lambda: f64) -> Result<Self> {
        if !(lambda.abs() < 0.5 / PI) {
            return Err(Error::config(format!(
                "expanding circle map needs |lambda| < 1/(2 pi), got {lambda}"
            )));
        }
        Ok(MapFamily::ExpandingCircle { lambda })
    }

    pub fn lsv(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::config(format!("LSV exponent must lie in (0,1), got {alpha}")));
        }
        Ok(MapFamily::Lsv { alpha })
    }

    pub fn template(&self) -> MapTemplate {
        match self {
            MapFamily::ExpandingCircle { .. } => MapTemplate::ExpandingCircle,
            MapFamily::Gauss => MapTemplate::Gauss,
            MapFamily::Renyi => MapTemplate::Renyi,
            MapFamily::Lsv { .. } => MapTemplate::Lsv,
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            MapFamily::ExpandingCircle { lambda } => lambda,
            MapFamily::Lsv { alpha } => alpha,
            _ => 0.0,
        }
    }

    pub fn domain(&self) -> Domain {
        self.template().domain()
    }

    /// Number of branches, `None` for countably many.
    pub fn branch_count(&self) -> Option<usize> {
        match self {
            MapFamily::Gauss | MapFamily::Renyi => None,
            _ => Some(2),
        }
    }

    fn check_point(&self, x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::Precondition(format!("point {x} outside [0,1]")))
        }
    }

    fn check_index(&self, index: usize) -> Result<()> {
        let ok = match self {
            MapFamily::Gauss | MapFamily::Renyi => index >= 1,
            _ => index <= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Index { index, len: 2 })
        }
    }

    /// `T(x)`, reduced mod 1 for the circle.
    pub fn forward(&self, x: f64) -> Result<f64> {
        self.check_point(x)?;
        Ok(match *self {
            MapFamily::ExpandingCircle { lambda } => frac(2.0 * x + lambda * sin(2.0 * PI * x)),
            MapFamily::Gauss => {
                if x == 0.0 {
                    0.0
                } else {
                    frac(1.0 / x)
                }
            }
            MapFamily::Renyi => {
                if x == 1.0 {
                    0.0
                } else {
                    frac(1.0 / (1.0 - x))
                }
            }
            MapFamily::Lsv { alpha } => {
                if x <= 0.5 {
                    x * (1.0 + powf(2.0 * x, alpha))
                } else {
                    2.0 * x - 1.0
                }
            }
        })
    }

    /// Derivatives of the lap of `T` containing `y` (unreduced).
    pub fn forward_jet(&self, y: f64) -> ForwardJet {
        match *self {
            MapFamily::ExpandingCircle { lambda } => {
                let (s, c) = (sin(2.0 * PI * y), cos(2.0 * PI * y));
                ForwardJet {
                    value: 2.0 * y + lambda * s,
                    d1: 2.0 + 2.0 * PI * lambda * c,
                    d2: -4.0 * PI * PI * lambda * s,
                    d3: -8.0 * PI * PI * PI * lambda * c,
                    du: s,
                    du_d1: 2.0 * PI * c,
                }
            }
            MapFamily::Gauss => {
                let r = 1.0 / y;
                ForwardJet { value: r, d1: -r * r, d2: 2.0 * r * r * r, d3: -6.0 * r * r * r * r, du: 0.0, du_d1: 0.0 }
            }
            MapFamily::Renyi => {
                let r = 1.0 / (1.0 - y);
                ForwardJet { value: r, d1: r * r, d2: 2.0 * r * r * r, d3: 6.0 * r * r * r * r, du: 0.0, du_d1: 0.0 }
            }
            MapFamily::Lsv { alpha } => {
                if y > 0.5 {
                    ForwardJet { value: 2.0 * y - 1.0, d1: 2.0, d2: 0.0, d3: 0.0, du: 0.0, du_d1: 0.0 }
                } else if y <= 0.0 {
                    ForwardJet { value: 0.0, d1: 1.0, d2: f64::INFINITY, d3: f64::NEG_INFINITY, du: 0.0, du_d1: 0.0 }
                } else {
                    let p = powf(2.0 * y, alpha);
                    let l = ln(2.0 * y);
                    let a = alpha;
                    ForwardJet {
                        value: y * (1.0 + p),
                        d1: 1.0 + (1.0 + a) * p,
                        d2: a * (1.0 + a) * p / y,
                        d3: (a - 1.0) * a * (1.0 + a) * p / (y * y),
                        du: y * p * l,
                        du_d1: p * (1.0 + (1.0 + a) * l),
                    }
                }
            }
        }
    }

    /// Interval that branch `index` maps onto `[0,1]`.
    pub fn branch_range(&self, index: usize) -> Result<(f64, f64)> {
        self.check_index(index)?;
        let k = index as f64;
        Ok(match self {
            MapFamily::ExpandingCircle { .. } => (0.5 * k, 0.5 * (k + 1.0)),
            MapFamily::Lsv { .. } => (0.5 * k, 0.5 * (k + 1.0)),
            MapFamily::Gauss => (1.0 / (k + 1.0), 1.0 / k),
            MapFamily::Renyi => (1.0 - 1.0 / k, 1.0 - 1.0 / (k + 1.0)),
        })
    }

    /// Preimage `g_index(x)`.
    pub fn inverse(&self, index: usize, x: f64) -> Result<f64> {
        self.check_point(x)?;
        self.check_index(index)?;
        let k = index as f64;
        match *self {
            MapFamily::Gauss => Ok(1.0 / (k + x)),
            MapFamily::Renyi => Ok(1.0 - 1.0 / (k + x)),
            MapFamily::ExpandingCircle { lambda } => {
                let target = x + k;
                let f = |y: f64| (2.0 * y + lambda * sin(2.0 * PI * y), 2.0 + 2.0 * PI * lambda * cos(2.0 * PI * y));
                let y = solve_increasing(0.5 * k, 0.5 * (k + 1.0), target, 0.5 * target, f)
                    .ok_or(Error::RootFinding { x, residual: f64::NAN })?;
                let r = (f(y).0 - target).abs();
                if r > 1e-12 * target.abs().max(1.0) {
                    return Err(Error::RootFinding { x, residual: r });
                }
                Ok(y)
            }
            MapFamily::Lsv { alpha } => {
                if index == 1 {
                    return Ok(0.5 * (x + 1.0));
                }
                if x == 0.0 {
                    return Ok(0.0);
                }
                let f = |y: f64| {
                    let p = powf(2.0 * y, alpha);
                    (y * (1.0 + p), 1.0 + (1.0 + alpha) * p)
                };
                let start = x / (1.0 + powf(2.0 * x, alpha));
                let y = solve_increasing(0.5 * x, x.min(0.5), x, start, f)
                    .ok_or(Error::RootFinding { x, residual: f64::NAN })?;
                let r = (f(y).0 - x).abs();
                if r > 1e-12 * x {
                    return Err(Error::RootFinding { x, residual: r });
                }
                Ok(y)
            }
        }
    }

    /// `g`, `g'`, `g''`, `g'''` of branch `index` at `x`.
    pub fn inverse_jet(&self, index: usize, x: f64) -> Result<InverseJet> {
        let y = self.inverse(index, x)?;
        let k = index as f64;
        Ok(match self {
            MapFamily::Gauss => {
                let r = 1.0 / (k + x);
                InverseJet { value: r, d1: -r * r, d2: 2.0 * r * r * r, d3: -6.0 * r * r * r * r }
            }
            MapFamily::Renyi => {
                let r = 1.0 / (k + x);
                InverseJet { value: 1.0 - r, d1: r * r, d2: -2.0 * r * r * r, d3: 6.0 * r * r * r * r }
            }
            MapFamily::Lsv { .. } if index == 1 => InverseJet::affine(y, 0.5),
            _ => InverseJet::from_forward(y, &self.forward_jet(y)),
        })
    }

    /// Derivative of order `order` (0..=3) of branch `index` at `x`.
    pub fn inverse_derivative(&self, index: usize, x: f64, order: u8) -> Result<f64> {
        let j = self.inverse_jet(index, x)?;
        match order {
            0 => Ok(j.value),
            1 => Ok(j.d1),
            2 => Ok(j.d2),
            3 => Ok(j.d3),
            _ => Err(Error::Index { index: order as usize, len: 4 }),
        }
    }

    /// Inverse jet together with its parameter sensitivity.
    pub fn inverse_param_jet(&self, index: usize, x: f64) -> Result<(InverseJet, ParamJet)> {
        let jet = self.inverse_jet(index, x)?;
        if !self.template().is_parametric() || matches!(self, MapFamily::Lsv { .. } if index == 1) {
            return Ok((jet, ParamJet::default()));
        }
        let t = self.forward_jet(jet.value);
        Ok((jet, param_jet_from_forward(&t)))
    }

    /// Visits every preimage of `x` (branches `1..=cutoff` for countable
    /// families).
    pub(crate) fn for_each_preimage(
        &self,
        x: f64,
        cutoff: usize,
        with_param: bool,
        mut f: impl FnMut(Preimage),
    ) -> Result<()> {
        match *self {
            MapFamily::Gauss | MapFamily::Renyi => {
                let gauss = matches!(self, MapFamily::Gauss);
                for n in 1..=cutoff {
                    let r = 1.0 / (n as f64 + x);
                    let y = if gauss { r } else { 1.0 - r };
                    f(Preimage { y, weight: r * r, dy_du: 0.0, dweight_du: 0.0 });
                }
            }
            _ => {
                for index in 0..2 {
                    if with_param {
                        let (j, p) = self.inverse_param_jet(index, x)?;
                        let s = j.d1.signum();
                        f(Preimage { y: j.value, weight: j.d1.abs(), dy_du: p.du, dweight_du: s * p.du_d1 });
                    } else {
                        let j = self.inverse_jet(index, x)?;
                        f(Preimage { y: j.value, weight: j.d1.abs(), dy_du: 0.0, dweight_du: 0.0 });
                    }
                }
            }
        }
        Ok(())
    }

    /// Interval covered by the preimages beyond the cutoff, if any.
    ///
    /// By the midpoint rule `Σ_{n>c} Φ(g_n(x))|g_n'(x)|` is approximated by
    /// the integral of `Φ` over this interval.
    pub fn tail_segment(&self, x: f64, cutoff: usize) -> Option<(f64, f64)> {
        let s = 1.0 / (cutoff as f64 + 0.5 + x);
        match self {
            MapFamily::Gauss => Some((0.0, s)),
            MapFamily::Renyi => Some((1.0 - s, 1.0)),
            _ => None,
        }
    }

    /// Bound on `Σ_{n>cutoff} sup|g_n'|`.
    pub fn truncated_mass_bound(&self, cutoff: usize) -> f64 {
        match self {
            MapFamily::Gauss | MapFamily::Renyi => 1.0 / cutoff.max(1) as f64,
            _ => 0.0,
        }
    }

    /// Residual of the midpoint tail correction per unit `C²` norm of `Φ`.
    pub fn tail_residual_bound(&self, cutoff: usize) -> f64 {
        match self {
            MapFamily::Gauss | MapFamily::Renyi => {
                let c = cutoff.max(1) as f64;
                1.0 / (12.0 * c * c * c) + 1.0 / (16.0 * c * c * c * c) + 1.0 / (120.0 * c * c * c * c * c)
            }
            _ => 0.0,
        }
    }

    /// Branches with their tail bound.
    pub fn branches(&self, cutoff: usize) -> BranchSet {
        let cutoff = cutoff.max(1);
        let indices: Vec<usize> = match self.branch_count() {
            Some(n) => (0..n).collect(),
            None => (1..=cutoff).collect(),
        };
        let branches = indices
            .into_iter()
            .map(|index| Branch { family: *self, index, range: self.branch_range(index).unwrap_or((0.0, 1.0)) })
            .collect();
        BranchSet { branches, tail_bound: self.truncated_mass_bound(cutoff) }
    }

    /// `β = max |g'|` over a uniform grid and all branches.
    ///
    /// Fails with a hypothesis report when `β ≥ 1`.
    pub fn check_expansion(&self, grid_size: usize) -> Result<f64> {
        let beta = self.max_inverse_slope(grid_size)?;
        if beta >= 1.0 - 1e-12 {
            return Err(Error::Hypothesis { check: format!("uniform expansion of {}", self.template().name()), value: beta });
        }
        Ok(beta)
    }

    pub(crate) fn max_inverse_slope(&self, grid_size: usize) -> Result<f64> {
        let set = self.branches(64);
        let g = grid_size.max(2);
        let mut beta: f64 = 0.0;
        for b in &set.branches {
            for i in 0..g {
                let x = i as f64 / (g - 1) as f64;
                beta = beta.max(b.derivative(x, 1)?.abs());
            }
        }
        Ok(beta)
    }

    /// `max |g'(x)/g'(y) - 1| / |x - y|` over grid pairs and branches.
    pub fn check_distortion(&self, grid_size: usize) -> f64 {
        let set = self.branches(100);
        let g = grid_size.max(2);
        let xs: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
        let mut worst: f64 = 0.0;
        for b in &set.branches {
            let d: Vec<f64> = xs.iter().map(|x| b.derivative(*x, 1).map(f64::abs).unwrap_or(f64::NAN)).collect();
            for i in 0..g {
                for j in 0..g {
                    if i != j && d[j] > 0.0 {
                        worst = worst.max((d[i] / d[j] - 1.0).abs() / (xs[i] - xs[j]).abs());
                    }
                }
            }
        }
        worst
    }
}

pub(crate) fn param_jet_from_forward(t: &ForwardJet) -> ParamJet {
    let du = -t.du / t.d1;
    ParamJet { du, du_d1: -(t.du_d1 + t.d2 * du) / (t.d1 * t.d1) }
}

/// An inverse branch `g_z` of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub family: MapFamily,
    pub index: usize,
    /// Monotonicity interval that `g_z` maps `[0,1]` onto.
    pub range: (f64, f64),
}

impl Branch {
    pub fn inverse(&self, x: f64) -> Result<f64> {
        self.family.inverse(self.index, x)
    }

    pub fn derivative(&self, x: f64, order: u8) -> Result<f64> {
        self.family.inverse_derivative(self.index, x, order)
    }

    pub fn jet(&self, x: f64) -> Result<InverseJet> {
        self.family.inverse_jet(self.index, x)
    }
}

/// Branches of a family, truncated for countable families.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pub branches: Vec<Branch>,
    /// Bound on `Σ sup|g_n'|` over the omitted branches.
    pub tail_bound: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_examples() {
        assert!((MapFamily::Gauss.forward(0.4).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(MapFamily::lsv(0.3).unwrap().forward(0.75).unwrap(), 0.5);
        assert!((MapFamily::expanding_circle(0.0).unwrap().forward(0.3).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(MapFamily::lsv(0.3).unwrap().forward(0.5).unwrap(), 1.0);
    }

    #[test]
    fn branch_examples() {
        let g = MapFamily::Gauss.branches(3);
        assert_eq!(g.branches.len(), 3);
        assert!(g.tail_bound <= 1.0 / 3.0);
        assert!((g.branches[1].inverse(0.5).unwrap() - 1.0 / 2.5).abs() < 1e-15);
        let c = MapFamily::expanding_circle(0.05).unwrap().branches(17);
        assert_eq!((c.branches.len(), c.tail_bound), (2, 0.0));
        let r = MapFamily::Renyi.branches(2);
        assert!((r.branches[1].inverse(0.5).unwrap() - (1.0 - 1.0 / 2.5)).abs() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        assert_eq!(MapFamily::Gauss.inverse_derivative(1, 0.0, 1).unwrap(), -1.0);
        assert!((MapFamily::Gauss.inverse_derivative(2, 1.0, 0).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let d = MapFamily::expanding_circle(0.0).unwrap().inverse_derivative(0, 0.5, 1).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(MapFamily::lsv(1.0), Err(Error::Config(_))));
        assert!(matches!(MapFamily::expanding_circle(0.2), Err(Error::Config(_))));
    }

    #[test]
    fn expansion_constants() {
        let beta = MapFamily::expanding_circle(0.05).unwrap().check_expansion(101).unwrap();
        assert!((beta - 1.0 / (2.0 - 2.0 * PI * 0.05)).abs() < 1e-6);
        let beta0 = MapFamily::expanding_circle(0.0).unwrap().check_expansion(50).unwrap();
        assert!((beta0 - 0.5).abs() < 1e-14);
        assert!(matches!(MapFamily::lsv(0.5).unwrap().check_expansion(50), Err(Error::Hypothesis { .. })));
    }

    #[test]
    fn distortion_constants() {
        assert!(MapFamily::expanding_circle(0.0).unwrap().check_distortion(40) < 1e-12);
        let dg = MapFamily::Gauss.check_distortion(60);
        let dr = MapFamily::Renyi.check_distortion(60);
        assert!(dg > 0.0 && dg.is_finite());
        assert!((dg - dr).abs() < 1e-12 * dg);
    }

    #[test]
    fn lsv_left_inverse_is_accurate_near_zero() {
        let f = MapFamily::lsv(0.25).unwrap();
        for x in [1e-12, 1e-8, 1e-3, 0.3, 1.0] {
            let y = f.inverse(0, x).unwrap();
            assert!((f.forward(y).unwrap() - x).abs() <= 1e-14 * x.max(1e-300) + 1e-300);
        }
    }
}
