//! Random systems: finitely many map families drawn with probabilities
//! `π_k(ε)`, each with a random parameter `u ~ η_{k,ε}`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::distributions::{Interval, ParameterDistribution};
use crate::error::{Error, Result};
use crate::maps::{Domain, MapFamily, MapTemplate};
use crate::poly::Poly;

/// One family of the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub template: MapTemplate,
    /// `π_k(ε)` as a polynomial in ε.
    pub weight: Poly,
    pub distribution: ParameterDistribution,
}

impl Component {
    pub fn new(template: MapTemplate, weight: Poly, distribution: ParameterDistribution) -> Self {
        Component { template, weight, distribution }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSystem {
    components: Vec<Component>,
    neighborhood: Interval,
}

impl RandomSystem {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::config("a random system needs at least one family"));
        }
        let domain = components[0].template.domain();
        if components.iter().any(|c| c.template.domain() != domain) {
            return Err(Error::config("all families must share the same phase space"));
        }
        let total = components.iter().fold(Poly::default(), |acc, c| acc.add(&c.weight));
        if (total.eval(0.0) - 1.0).abs() > 1e-12 || total.derivative().0.iter().any(|c| c.abs() > 1e-12) {
            return Err(Error::config("family weights must sum to 1 for every epsilon"));
        }
        let mut neighborhood = Interval::everything();
        for c in &components {
            if let Some((lo, hi)) = c.template.parameter_range() {
                let s = c.distribution.support;
                if !(s.lo > lo && s.hi < hi) {
                    return Err(Error::config(format!(
                        "parameter support [{}, {}] not inside the admissible range ({lo}, {hi}) of {}",
                        s.lo,
                        s.hi,
                        c.template.name()
                    )));
                }
            }
            neighborhood = neighborhood.intersect(&c.distribution.neighborhood)?;
        }
        Ok(RandomSystem { components, neighborhood })
    }

    /// Restricts the ε-neighbourhood.
    pub fn with_neighborhood(mut self, v: Interval) -> Result<Self> {
        self.neighborhood = self.neighborhood.intersect(&v)?;
        Ok(self)
    }

    /// A single family with parameter law `dist`.
    pub fn single(template: MapTemplate, dist: ParameterDistribution) -> Result<Self> {
        RandomSystem::new(vec![Component::new(template, Poly::constant(1.0), dist)])
    }

    /// The deterministic map `template` at `u`.
    pub fn deterministic(template: MapTemplate, u: f64) -> Result<Self> {
        template.at(u)?;
        RandomSystem::single(template, ParameterDistribution::frozen(u))
    }

    /// `T_1 = 2x + λ sin 2πx` with probability ε, doubling with `1 - ε`.
    ///
    /// For ε < 0 the operator is the signed affine continuation of the
    /// mixture, which is only used to form central differences.
    pub fn circle_mixture(lambda: f64) -> Result<Self> {
        RandomSystem::new(vec![
            Component::new(MapTemplate::ExpandingCircle, Poly::linear(0.0, 1.0), ParameterDistribution::frozen(lambda)),
            Component::new(MapTemplate::ExpandingCircle, Poly::linear(1.0, -1.0), ParameterDistribution::frozen(0.0)),
        ])?
        .with_neighborhood(Interval::new(-1.0, 1.0)?)
    }

    /// Gauss with probability `p + ε`, Rényi otherwise.
    pub fn gauss_renyi(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::config(format!("Bernoulli parameter must lie in (0,1), got {p}")));
        }
        RandomSystem::new(vec![
            Component::new(MapTemplate::Gauss, Poly::linear(p, 1.0), ParameterDistribution::frozen(0.0)),
            Component::new(MapTemplate::Renyi, Poly::linear(1.0 - p, -1.0), ParameterDistribution::frozen(0.0)),
        ])?
        .with_neighborhood(Interval::new(-p, 1.0 - p)?)
    }

    /// Gauss with probability `1 - ε`, Rényi with probability ε.
    pub fn gauss_renyi_perturbed() -> Result<Self> {
        RandomSystem::new(vec![
            Component::new(MapTemplate::Gauss, Poly::linear(1.0, -1.0), ParameterDistribution::frozen(0.0)),
            Component::new(MapTemplate::Renyi, Poly::linear(0.0, 1.0), ParameterDistribution::frozen(0.0)),
        ])?
        .with_neighborhood(Interval::new(-1.0, 1.0)?)
    }

    /// LSV maps with exponent drawn from the linearly tilted density on
    /// `[α0, α1]`.
    pub fn lsv_tilted(alpha0: f64, alpha1: f64) -> Result<Self> {
        RandomSystem::single(MapTemplate::Lsv, ParameterDistribution::linear_tilt(alpha0, alpha1)?)
    }

    /// LSV maps with exponent uniform on `(α0, α0 + ε)`.
    pub fn lsv_uniform_to_dirac(alpha0: f64, max_width: f64) -> Result<Self> {
        let support = Interval::new(alpha0, alpha0 + max_width)?;
        RandomSystem::single(MapTemplate::Lsv, ParameterDistribution::uniform_to_dirac(alpha0, support)?)
    }

    /// LSV map at exponent `u + ε`.
    pub fn lsv_translate(u: f64, half_width: f64) -> Result<Self> {
        let support = Interval::new(u - half_width, u + half_width)?;
        RandomSystem::single(MapTemplate::Lsv, ParameterDistribution::dirac_translate(u, support)?)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn domain(&self) -> Domain {
        self.components[0].template.domain()
    }

    pub fn neighborhood(&self) -> Interval {
        self.neighborhood
    }

    pub fn admits(&self, eps: f64) -> bool {
        self.neighborhood.contains(eps)
    }

    pub(crate) fn check_epsilon(&self, eps: f64) -> Result<()> {
        if self.admits(eps) {
            Ok(())
        } else {
            Err(Error::config(format!(
                "epsilon {eps} outside the admissible neighbourhood [{}, {}]",
                self.neighborhood.lo, self.neighborhood.hi
            )))
        }
    }

    pub fn weights(&self, eps: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.weight.eval(eps)).collect()
    }

    pub fn weight_derivatives(&self, eps: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.weight.derivative().eval(eps)).collect()
    }

    /// True if every `π_k(ε)` is a probability.
    pub fn is_probability(&self, eps: f64) -> bool {
        self.weights(eps).iter().all(|p| *p >= 0.0 && *p <= 1.0)
    }

    pub fn is_epsilon_independent(&self) -> bool {
        self.components.iter().all(|c| c.weight.is_constant() && c.distribution.is_frozen())
    }

    pub fn has_countable_branches(&self) -> bool {
        self.components.iter().any(|c| c.template.has_countable_branches())
    }

    pub fn is_lsv(&self) -> bool {
        self.components.iter().all(|c| c.template == MapTemplate::Lsv)
    }

    /// Diagnostic checks of the expansion and distortion hypotheses at ε.
    pub fn check_hypotheses(&self, eps: f64, grid_size: usize, quad_order: usize) -> Result<HypothesisReport> {
        self.check_epsilon(eps)?;
        let weights = self.weights(eps);
        let mut families = Vec::new();
        let g = grid_size.max(2);
        let xs: Vec<f64> = (0..g).map(|i| i as f64 / (g - 1) as f64).collect();
        let mut averaged = vec![0.0; g];
        for (c, pi) in self.components.iter().zip(&weights) {
            let rule = c.distribution.measure(eps)?.rule(quad_order);
            let mut beta: f64 = 0.0;
            let mut distortion: f64 = 0.0;
            for a in &rule {
                let f = c.template.at(a.location)?;
                beta = beta.max(f.max_inverse_slope(g)?);
                distortion = distortion.max(f.check_distortion(g.min(100)));
                for (x, acc) in xs.iter().zip(averaged.iter_mut()) {
                    *acc += pi.abs() * a.weight.abs() * (1.0 / f.forward_jet(*x).d1).abs();
                }
            }
            families.push(FamilyCheck { template: c.template, beta, distortion });
        }
        let averaged_contraction = averaged.iter().copied().fold(0.0, f64::max);
        let uniform = families.iter().all(|f| f.beta < 1.0 - 1e-12);
        let has_gauss = self.components.iter().any(|c| c.template == MapTemplate::Gauss);
        let second_iterate_gauss = if has_gauss { Some(composed_inverse_slope(MapFamily::Gauss, MapFamily::Gauss, 50, 100)?) } else { None };
        let verdict = if uniform || averaged_contraction < 1.0 - 1e-12 {
            None
        } else {
            Some(format!(
                "no uniform expansion (max |g'| = {}) and no expansion on average (sup of averaged 1/|T'| = {averaged_contraction})",
                families.iter().map(|f| f.beta).fold(0.0, f64::max)
            ))
        };
        Ok(HypothesisReport { epsilon: eps, families, averaged_contraction, second_iterate_gauss, violation: verdict })
    }
}

/// Per-family expansion and distortion constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyCheck {
    pub template: MapTemplate,
    /// `max |g'|` over grid, branches and parameter nodes.
    pub beta: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub epsilon: f64,
    pub families: Vec<FamilyCheck>,
    /// `sup_x Σ_k |π_k| ∫ 1/|T'_{k,u}(x)| dη_k(u)`.
    pub averaged_contraction: f64,
    /// `max |(g_n ∘ g_k)'|` over `n, k ≤ 50` for the Gauss map.
    pub second_iterate_gauss: Option<f64>,
    /// Description of the violated hypothesis, if any.
    pub violation: Option<String>,
}

impl HypothesisReport {
    pub fn into_result(self) -> Result<Self> {
        match &self.violation {
            None => Ok(self),
            Some(v) => Err(Error::Hypothesis { check: v.clone(), value: self.averaged_contraction }),
        }
    }
}

/// `max |(g_n ∘ h_k)'(x)|` over branches `n, k ≤ n_max` of the outer and
/// inner map and a uniform grid.
pub fn composed_inverse_slope(outer: MapFamily, inner: MapFamily, n_max: usize, grid_size: usize) -> Result<f64> {
    let range = |f: &MapFamily| -> Vec<usize> {
        match f.branch_count() {
            Some(n) => (0..n).collect(),
            None => (1..=n_max).collect(),
        }
    };
    let mut worst: f64 = 0.0;
    let g = grid_size.max(2);
    for k in range(&inner) {
        for i in 0..g {
            let x = i as f64 / (g - 1) as f64;
            let jk = inner.inverse_jet(k, x)?;
            for n in range(&outer) {
                let jn = outer.inverse_jet(n, jk.value)?;
                worst = worst.max((jn.d1 * jk.d1).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_must_sum_to_one() {
        let c = |w| Component::new(MapTemplate::Gauss, w, ParameterDistribution::frozen(0.0));
        assert!(RandomSystem::new(vec![c(Poly::constant(0.5)), c(Poly::constant(0.4))]).is_err());
        assert!(RandomSystem::new(vec![c(Poly::linear(0.5, 1.0)), c(Poly::linear(0.5, -1.0))]).is_ok());
    }

    #[test]
    fn parameter_support_is_validated() {
        let d = ParameterDistribution::frozen(0.3);
        assert!(RandomSystem::single(MapTemplate::ExpandingCircle, d).is_err());
        assert!(RandomSystem::lsv_tilted(0.25, 0.45).is_ok());
    }

    #[test]
    fn gauss_second_iterate_bound() {
        let s = composed_inverse_slope(MapFamily::Gauss, MapFamily::Gauss, 50, 100).unwrap();
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn hypotheses_by_system() {
        let gr = RandomSystem::gauss_renyi(0.5).unwrap().check_hypotheses(0.0, 101, 8).unwrap();
        assert!(gr.violation.is_none());
        assert!((gr.averaged_contraction - 0.5).abs() < 1e-12);
        let lsv = RandomSystem::deterministic(MapTemplate::Lsv, 0.3).unwrap().check_hypotheses(0.0, 101, 8).unwrap();
        assert!(lsv.violation.is_some());
        assert!(matches!(lsv.into_result(), Err(Error::Hypothesis { .. })));
        let circ = RandomSystem::circle_mixture(0.05).unwrap().check_hypotheses(0.5, 101, 8).unwrap();
        assert!(circ.violation.is_none());
    }
}
