//! Parameter distributions `η_ε` that are differentiable in ε as
//! distributions of order one: `∂_ε ∫ φ dη_ε = ∫ φ' dν_ε (+ weight terms)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::solve_increasing;
use crate::poly::Poly;
use crate::quadrature::gauss_legendre_on;

/// Relative tolerance for the order-doubling check of density quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Closed interval `[lo, hi]`; infinite endpoints allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::config(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub const fn everything() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Result<Interval> {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

/// Point mass `weight · δ_location`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// A finite signed measure on the parameter line.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Atoms(Vec<Atom>),
    /// Lebesgue density `u ↦ poly(u - origin)` on `[lo, hi]`.
    Density { lo: f64, hi: f64, origin: f64, poly: Poly },
}

impl Measure {
    pub fn zero() -> Self {
        Measure::Atoms(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Measure::Atoms(a) => a.iter().all(|a| a.weight == 0.0),
            Measure::Density { poly, .. } => poly.0.iter().all(|c| *c == 0.0),
        }
    }

    /// Density value at `u` (0 for atomic measures).
    pub fn density(&self, u: f64) -> f64 {
        match self {
            Measure::Density { lo, hi, origin, poly } if u >= *lo && u <= *hi => poly.eval(u - origin),
            _ => 0.0,
        }
    }

    /// Discrete rule: atoms as given, densities by Gauss-Legendre of `order`.
    pub fn rule(&self, order: usize) -> Vec<Atom> {
        match self {
            Measure::Atoms(a) => a.clone(),
            Measure::Density { lo, hi, origin, poly } => {
                let (x, w) = gauss_legendre_on(*lo, *hi, order.max(1));
                x.iter().zip(&w).map(|(u, w)| Atom { location: *u, weight: w * poly.eval(u - origin) }).collect()
            }
        }
    }

    /// `∫ f dμ`, exact for atoms; Gauss-Legendre with an order-doubling check
    /// for densities.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
        let sum = |rule: Vec<Atom>| rule.iter().map(|a| a.weight * f(a.location)).sum::<f64>();
        match self {
            Measure::Atoms(_) => Ok(sum(self.rule(0))),
            Measure::Density { .. } => {
                let coarse = sum(self.rule(order));
                let fine = sum(self.rule(2 * order.max(1)));
                if (coarse - fine).abs() > QUADRATURE_TOL * fine.abs().max(1.0) {
                    return Err(Error::Quadrature { coarse, fine });
                }
                Ok(fine)
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Atoms(a) => a.iter().map(|a| a.weight).sum(),
            Measure::Density { lo, hi, origin, poly } => {
                let p = poly.integral();
                p.eval(hi - origin) - p.eval(lo - origin)
            }
        }
    }
}

/// Built-in smooth parameter densities.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothDensity {
    /// `ρ_ε(u) = 2(u - α0/2 + ε) / ((α1-α0)(α1+2ε))` on `[α0, α1]`.
    LinearTilt { alpha0: f64, alpha1: f64 },
    /// `ρ_ε(u) = Σ_i c_i(ε) (u - lo)^i` on `[lo, hi]`.
    Polynomial { lo: f64, hi: f64, coefficients: Vec<Poly> },
}

impl SmoothDensity {
    fn support(&self) -> (f64, f64) {
        match *self {
            SmoothDensity::LinearTilt { alpha0, alpha1 } => (alpha0, alpha1),
            SmoothDensity::Polynomial { lo, hi, .. } => (lo, hi),
        }
    }

    /// Density and its ε-derivative as polynomials in `u - lo`.
    fn polys(&self, eps: f64) -> (Poly, Poly) {
        match self {
            SmoothDensity::LinearTilt { alpha0, alpha1 } => {
                let (a0, a1) = (*alpha0, *alpha1);
                let s = a1 + 2.0 * eps;
                let c = 2.0 / ((a1 - a0) * s);
                (Poly(vec![c * (0.5 * a0 + eps), c]), Poly(vec![c * (a1 - a0) / s, -2.0 * c / s]))
            }
            SmoothDensity::Polynomial { coefficients, .. } => (
                Poly(coefficients.iter().map(|c| c.eval(eps)).collect()),
                Poly(coefficients.iter().map(|c| c.derivative().eval(eps)).collect()),
            ),
        }
    }
}

/// Shape of `η_ε`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionKind {
    /// `δ_a` for every ε.
    Frozen { a: f64 },
    /// `δ_{a+ε}`.
    DiracTranslate { a: f64 },
    /// `Σ ρ_i(ε) δ_{a_i+ε}`.
    DiracMixture { atoms: Vec<f64>, weights: Vec<Poly> },
    Smooth(SmoothDensity),
    /// Uniform on `(a, a+ε)` for ε > 0, `δ_a` at ε = 0.
    UniformToDirac { a: f64 },
}

/// ε-derivative of `η_ε`: `∂_ε⟨η_ε, φ⟩ = ⟨location, φ'⟩ + Σ value_i φ(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeMeasure {
    /// The signed measure `ν_ε`, paired with `φ'`.
    pub location: Measure,
    /// Weight-derivative atoms, paired with `φ` itself.
    pub value: Vec<Atom>,
    pub epsilon: f64,
}

impl DerivativeMeasure {
    /// `⟨ν_ε, φ'⟩`.
    pub fn pair_derivative(&self, dphi: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
        self.location.integrate(dphi, order)
    }

    /// Full `∂_ε ⟨η_ε, φ⟩`.
    pub fn pair(&self, phi: impl Fn(f64) -> f64, dphi: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
        Ok(self.pair_derivative(dphi, order)? + self.value.iter().map(|a| a.weight * phi(a.location)).sum::<f64>())
    }

    pub fn is_zero(&self) -> bool {
        self.location.is_zero() && self.value.iter().all(|a| a.weight == 0.0)
    }
}

/// Free-function form of [`DerivativeMeasure::pair_derivative`].
pub fn pair_derivative(nu: &DerivativeMeasure, dphi: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
    nu.pair_derivative(dphi, order)
}

/// Outcome of [`ParameterDistribution::fd_consistency`].
#[derive(Debug, Clone, PartialEq)]
pub struct FdConsistency {
    pub exact: f64,
    pub deltas: Vec<f64>,
    pub errors: Vec<f64>,
    /// Observed order from the last two step sizes; infinite when the
    /// difference quotient is exact to rounding.
    pub order: f64,
    pub one_sided: bool,
}

/// A family `ε ↦ η_ε` with its support and admissible neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDistribution {
    pub kind: DistributionKind,
    pub support: Interval,
    pub neighborhood: Interval,
}

impl ParameterDistribution {
    pub fn frozen(a: f64) -> Self {
        ParameterDistribution {
            kind: DistributionKind::Frozen { a },
            support: Interval { lo: a, hi: a },
            neighborhood: Interval::everything(),
        }
    }

    pub fn dirac_translate(a: f64, support: Interval) -> Result<Self> {
        if !support.contains(a) {
            return Err(Error::config(format!("atom {a} outside support")));
        }
        Ok(ParameterDistribution {
            kind: DistributionKind::DiracTranslate { a },
            support,
            neighborhood: Interval::new(support.lo - a, support.hi - a)?,
        })
    }

    pub fn dirac_mixture(atoms: Vec<f64>, weights: Vec<Poly>, support: Interval) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::config("mixture needs one weight polynomial per atom"));
        }
        let total = weights.iter().fold(Poly::default(), |acc, w| acc.add(w));
        if (total.eval(0.0) - 1.0).abs() > 1e-12 || total.derivative().0.iter().any(|c| c.abs() > 1e-12) {
            return Err(Error::config("mixture weights must sum to 1 for every epsilon"));
        }
        let lo = atoms.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = atoms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(support.contains(lo) && support.contains(hi)) {
            return Err(Error::config("mixture atoms outside support"));
        }
        Ok(ParameterDistribution {
            kind: DistributionKind::DiracMixture { atoms, weights },
            support,
            neighborhood: Interval::new(support.lo - lo, support.hi - hi)?,
        })
    }

    /// Linearly tilted density on `[α0, α1]` with `V = [-α0/4, α0/4]`.
    pub fn linear_tilt(alpha0: f64, alpha1: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha1 > alpha0) {
            return Err(Error::config(format!("linear tilt needs 0 < alpha0 < alpha1, got {alpha0}, {alpha1}")));
        }
        Ok(ParameterDistribution {
            kind: DistributionKind::Smooth(SmoothDensity::LinearTilt { alpha0, alpha1 }),
            support: Interval::new(alpha0, alpha1)?,
            neighborhood: Interval::new(-0.25 * alpha0, 0.25 * alpha0)?,
        })
    }

    /// Polynomial density family; normalization and positivity are checked
    /// on a sample of `V`.
    pub fn polynomial_density(lo: f64, hi: f64, coefficients: Vec<Poly>, neighborhood: Interval) -> Result<Self> {
        let d = ParameterDistribution {
            kind: DistributionKind::Smooth(SmoothDensity::Polynomial { lo, hi, coefficients }),
            support: Interval::new(lo, hi)?,
            neighborhood,
        };
        let (e0, e1) = (neighborhood.lo.max(-1e6), neighborhood.hi.min(1e6));
        for k in 0..=8 {
            let eps = e0 + (e1 - e0) * k as f64 / 8.0;
            let m = d.measure(eps)?;
            if (m.total_mass() - 1.0).abs() > 1e-10 {
                return Err(Error::config(format!("density has mass {} at epsilon {eps}", m.total_mass())));
            }
            for j in 0..=32 {
                let u = lo + (hi - lo) * j as f64 / 32.0;
                if m.density(u) < -1e-12 {
                    return Err(Error::config(format!("density negative at u = {u}, epsilon {eps}")));
                }
            }
        }
        Ok(d)
    }

    pub fn uniform_to_dirac(a: f64, support: Interval) -> Result<Self> {
        if !support.contains(a) || support.hi <= a {
            return Err(Error::config("uniform-to-dirac needs a < sup(support)"));
        }
        Ok(ParameterDistribution {
            kind: DistributionKind::UniformToDirac { a },
            support,
            neighborhood: Interval::new(0.0, support.hi - a)?,
        })
    }

    /// Restricts the admissible neighbourhood.
    pub fn with_neighborhood(mut self, v: Interval) -> Result<Self> {
        self.neighborhood = self.neighborhood.intersect(&v)?;
        Ok(self)
    }

    pub fn admits(&self, eps: f64) -> bool {
        self.neighborhood.contains(eps)
    }

    /// True if `η_ε` does not depend on ε.
    pub fn is_frozen(&self) -> bool {
        matches!(self.kind, DistributionKind::Frozen { .. })
    }

    fn check(&self, eps: f64) -> Result<()> {
        if self.admits(eps) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "epsilon {eps} outside admissible neighbourhood [{}, {}]",
                self.neighborhood.lo, self.neighborhood.hi
            )))
        }
    }

    /// The measure `η_ε`.
    pub fn measure(&self, eps: f64) -> Result<Measure> {
        self.check(eps)?;
        Ok(match &self.kind {
            DistributionKind::Frozen { a } => Measure::Atoms(vec![Atom { location: *a, weight: 1.0 }]),
            DistributionKind::DiracTranslate { a } => Measure::Atoms(vec![Atom { location: a + eps, weight: 1.0 }]),
            DistributionKind::DiracMixture { atoms, weights } => Measure::Atoms(
                atoms.iter().zip(weights).map(|(a, w)| Atom { location: a + eps, weight: w.eval(eps) }).collect(),
            ),
            DistributionKind::Smooth(s) => {
                let (lo, hi) = s.support();
                Measure::Density { lo, hi, origin: lo, poly: s.polys(eps).0 }
            }
            DistributionKind::UniformToDirac { a } => {
                if eps == 0.0 {
                    Measure::Atoms(vec![Atom { location: *a, weight: 1.0 }])
                } else {
                    Measure::Density { lo: *a, hi: a + eps, origin: *a, poly: Poly::constant(1.0 / eps) }
                }
            }
        })
    }

    /// `ν_ε` together with the weight-derivative atoms.
    pub fn derivative_measure(&self, eps: f64) -> Result<DerivativeMeasure> {
        self.check(eps)?;
        let (location, value) = match &self.kind {
            DistributionKind::Frozen { .. } => (Measure::zero(), Vec::new()),
            DistributionKind::DiracTranslate { a } => (Measure::Atoms(vec![Atom { location: a + eps, weight: 1.0 }]), Vec::new()),
            DistributionKind::DiracMixture { atoms, weights } => (
                Measure::Atoms(atoms.iter().zip(weights).map(|(a, w)| Atom { location: a + eps, weight: w.eval(eps) }).collect()),
                atoms.iter().zip(weights).map(|(a, w)| Atom { location: a + eps, weight: w.derivative().eval(eps) }).collect(),
            ),
            DistributionKind::Smooth(s) => {
                let (lo, hi) = s.support();
                // ν has density G(s) = ∫_s^hi ∂ρ; the boundary term G(lo)φ(lo)
                // restores the pairing for φ(lo) ≠ 0.
                let p = s.polys(eps).1.integral();
                let top = p.eval(hi - lo);
                let g = Poly::constant(top).add(&p.scale(-1.0));
                let shift = g.eval(0.0);
                (Measure::Density { lo, hi, origin: lo, poly: g }, vec![Atom { location: lo, weight: shift }])
            }
            DistributionKind::UniformToDirac { a } => {
                if eps == 0.0 {
                    (Measure::Atoms(vec![Atom { location: *a, weight: 0.5 }]), Vec::new())
                } else {
                    let e2 = eps * eps;
                    (Measure::Density { lo: *a, hi: a + eps, origin: *a, poly: Poly(vec![0.0, 1.0 / e2]) }, Vec::new())
                }
            }
        };
        Ok(DerivativeMeasure { location, value, epsilon: eps })
    }

    /// `∫ φ dη_ε`.
    pub fn integrate(&self, eps: f64, phi: impl Fn(f64) -> f64, order: usize) -> Result<f64> {
        self.measure(eps)?.integrate(phi, order)
    }

    /// Compares finite differences of `ε ↦ ⟨η_ε, φ⟩` at step sizes `deltas`
    /// with the derivative pairing at ε. Falls back to the second-order
    /// one-sided stencil where `ε - δ` is not admissible.
    pub fn fd_consistency(
        &self,
        eps: f64,
        phi: impl Fn(f64) -> f64,
        dphi: impl Fn(f64) -> f64,
        deltas: &[f64],
        order: usize,
    ) -> Result<FdConsistency> {
        let exact = self.derivative_measure(eps)?.pair(&phi, &dphi, order)?;
        let at = |e: f64| self.integrate(e, &phi, order);
        let mut errors = Vec::with_capacity(deltas.len());
        let mut one_sided = false;
        for &d in deltas {
            let fd = if self.admits(eps - d) && self.admits(eps + d) {
                (at(eps + d)? - at(eps - d)?) / (2.0 * d)
            } else if self.admits(eps + 2.0 * d) {
                one_sided = true;
                (-3.0 * at(eps)? + 4.0 * at(eps + d)? - at(eps + 2.0 * d)?) / (2.0 * d)
            } else {
                one_sided = true;
                (3.0 * at(eps)? - 4.0 * at(eps - d)? + at(eps - 2.0 * d)?) / (2.0 * d)
            };
            errors.push((fd - exact).abs());
        }
        let observed = match (deltas, errors.as_slice()) {
            ([.., d0, d1], [.., e0, e1]) if *e1 > 1e-14 => libm::log(e0 / e1) / libm::log(d0 / d1),
            _ => f64::INFINITY,
        };
        Ok(FdConsistency { exact, deltas: deltas.to_vec(), errors, order: observed, one_sided })
    }

    /// Inverse-CDF sample of `η_ε` from a uniform variate in `[0,1)`.
    pub fn sample(&self, eps: f64, uniform: f64) -> Result<f64> {
        self.check(eps)?;
        Ok(match &self.kind {
            DistributionKind::Frozen { a } => *a,
            DistributionKind::DiracTranslate { a } => a + eps,
            DistributionKind::DiracMixture { atoms, weights } => {
                let mut acc = 0.0;
                let mut pick = atoms[atoms.len() - 1];
                for (a, w) in atoms.iter().zip(weights) {
                    let p = w.eval(eps);
                    if p < 0.0 {
                        return Err(Error::config(format!("mixture weight {p} negative at epsilon {eps}")));
                    }
                    acc += p;
                    if uniform < acc {
                        pick = *a;
                        break;
                    }
                }
                pick + eps
            }
            DistributionKind::UniformToDirac { a } => a + eps * uniform,
            DistributionKind::Smooth(s) => {
                let (lo, hi) = s.support();
                let rho = s.polys(eps).0;
                let cdf = rho.integral();
                solve_increasing(lo, hi, uniform, lo + uniform * (hi - lo), |u| (cdf.eval(u - lo), rho.eval(u - lo)))
                    .ok_or(Error::RootFinding { x: uniform, residual: f64::NAN })?
            }
        })
    }
}

/// One Leibniz term of `∂_ε(η^1_ε ⊗ ... ⊗ η^m_ε)`: factor `j` is replaced
/// by its derivative measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDerivative {
    pub j: usize,
    /// Factors with `ν_j` in position `j`; paired with `∂_{u_j} φ`.
    pub location: Vec<Measure>,
    /// Factors with the weight-derivative atoms in position `j`; paired with `φ`.
    pub value: Vec<Measure>,
}

/// The `j`-th Leibniz term of the product derivative.
pub fn product_derivative(dists: &[ParameterDistribution], eps: f64, j: usize) -> Result<ProductDerivative> {
    if j >= dists.len() {
        return Err(Error::Index { index: j, len: dists.len() });
    }
    let mut location = Vec::with_capacity(dists.len());
    let mut value = Vec::with_capacity(dists.len());
    for (i, d) in dists.iter().enumerate() {
        if i == j {
            let nu = d.derivative_measure(eps)?;
            location.push(nu.location);
            value.push(Measure::Atoms(nu.value));
        } else {
            let m = d.measure(eps)?;
            location.push(m.clone());
            value.push(m);
        }
    }
    Ok(ProductDerivative { j, location, value })
}

impl ProductDerivative {
    /// `⟨location, ∂_j φ⟩ + ⟨value, φ⟩` by tensor-product rules.
    pub fn pair(&self, phi: &dyn Fn(&[f64]) -> f64, dphi_j: &dyn Fn(&[f64]) -> f64, order: usize) -> f64 {
        tensor_integrate(&self.location, dphi_j, order) + tensor_integrate(&self.value, phi, order)
    }
}

/// `∫ f d(μ_1 ⊗ ... ⊗ μ_m)` with the product of one-dimensional rules.
pub fn tensor_integrate(factors: &[Measure], f: &dyn Fn(&[f64]) -> f64, order: usize) -> f64 {
    let rules: Vec<Vec<Atom>> = factors.iter().map(|m| m.rule(order)).collect();
    if rules.iter().any(|r| r.is_empty()) {
        return 0.0;
    }
    let m = rules.len();
    let mut idx = vec![0usize; m];
    let mut point = vec![0.0; m];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for k in 0..m {
            let a = rules[k][idx[k]];
            point[k] = a.location;
            w *= a.weight;
        }
        total += w * f(&point);
        let mut k = 0;
        loop {
            if k == m {
                return total;
            }
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn integrate_examples() {
        let d = ParameterDistribution::dirac_translate(0.3, unit()).unwrap();
        assert!((d.integrate(0.1, |u| u, 8).unwrap() - 0.4).abs() < 1e-15);
        let u = ParameterDistribution::uniform_to_dirac(0.2, unit()).unwrap();
        assert_eq!(u.integrate(0.0, |u| u * u + 3.0, 8).unwrap(), 0.2 * 0.2 + 3.0);
        let s = ParameterDistribution::linear_tilt(0.25, 0.45).unwrap();
        for eps in [-0.0625, 0.0, 0.03] {
            assert!((s.integrate(eps, |_| 1.0, 8).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_examples() {
        let u = ParameterDistribution::uniform_to_dirac(0.0, unit()).unwrap();
        assert_eq!(u.derivative_measure(0.0).unwrap().pair_derivative(|_| 1.0, 4).unwrap(), 0.5);
        let nu = u.derivative_measure(0.01).unwrap();
        assert!((nu.pair_derivative(|_| 1.0, 4).unwrap() - 0.5).abs() < 1e-14);
        let d = ParameterDistribution::dirac_translate(0.3, unit()).unwrap();
        assert!((d.derivative_measure(0.0).unwrap().pair_derivative(|u| 2.0 * u, 4).unwrap() - 0.6).abs() < 1e-15);
        assert!((d.derivative_measure(0.1).unwrap().pair_derivative(|u| 2.0 * u, 4).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn epsilon_outside_neighbourhood_is_config_error() {
        let s = ParameterDistribution::linear_tilt(0.2, 0.4).unwrap();
        assert!(matches!(s.derivative_measure(0.06), Err(Error::Config(_))));
        let u = ParameterDistribution::uniform_to_dirac(0.2, unit()).unwrap();
        assert!(matches!(u.measure(-0.01), Err(Error::Config(_))));
    }

    #[test]
    fn mixture_rejects_unnormalized_weights() {
        let r = ParameterDistribution::dirac_mixture(vec![0.2, 0.4], vec![Poly::constant(0.5), Poly::constant(0.6)], unit());
        assert!(r.is_err());
    }

    #[test]
    fn product_of_two_translates() {
        let d = [
            ParameterDistribution::dirac_translate(0.2, unit()).unwrap(),
            ParameterDistribution::dirac_translate(0.5, unit()).unwrap(),
        ];
        let phi = |u: &[f64]| u[0] + u[1];
        let one = |_: &[f64]| 1.0;
        let total: f64 = (0..2).map(|j| product_derivative(&d, 0.0, j).unwrap().pair(&phi, &one, 4)).sum();
        assert!((total - 2.0).abs() < 1e-15);
        let frozen = [ParameterDistribution::frozen(0.2), d[1].clone()];
        assert_eq!(product_derivative(&frozen, 0.0, 0).unwrap().pair(&phi, &one, 4), 0.0);
        assert!(matches!(product_derivative(&d, 0.0, 2), Err(Error::Index { .. })));
    }

    #[test]
    fn uniform_to_dirac_one_sided_consistency() {
        let u = ParameterDistribution::uniform_to_dirac(0.2, unit()).unwrap();
        let r = u.fd_consistency(0.0, |x| x * x * x, |x| 3.0 * x * x, &[1e-3, 5e-4], 8).unwrap();
        assert!(r.one_sided);
        assert!((r.exact - 0.06).abs() < 1e-15);
        assert!(r.order > 1.8, "{r:?}");
    }

    #[test]
    fn tilt_sampling_inverts_cdf() {
        let s = ParameterDistribution::linear_tilt(0.25, 0.45).unwrap();
        let Measure::Density { poly, .. } = s.measure(0.01).unwrap() else { panic!("density expected") };
        for k in 1..10 {
            let p = k as f64 / 10.0;
            let u = s.sample(0.01, p).unwrap();
            let below = Measure::Density { lo: 0.25, hi: u, origin: 0.25, poly: poly.clone() };
            assert!((below.total_mass() - p).abs() < 1e-12);
        }
    }
}
