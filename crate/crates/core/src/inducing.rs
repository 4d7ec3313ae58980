//! Inducing on `Δ = (1/2, 1]` for random LSV maps.
//!
//! A word of return time `n` has inverse branch `r ∘ g_{ω₁} ∘ … ∘ g_{ω_{n-1}}`
//! with `r(x) = (x+1)/2` and `g_u` the left inverse branch of `T_u`. Since
//! the letters are iid, the annealed sum over words of length `n+1` is
//! `Pⁿ R`, where `P` is the annealed transfer operator of the left branch and
//! `R Φ = ½ Φ∘r`. Both are discretized on dyadic Chebyshev panels covering
//! `[δ, 1]`, so every induced quantity comes from the levels `V_n = Pⁿ R ĥ`:
//! `L̂ ĥ` is their sum on `Δ` and the unfolding `F(ĥ)` is their sum off `Δ`.
//!
//! The deterministic pipeline at the bottom composes the branches pointwise
//! and differentiates the induced map by forward jets; it is an independent
//! oracle for the single-map case.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::distributions::tensor_integrate;
use crate::error::{Error, Result};
use crate::function_space::{h_norm_grid, Basis, H_NORM_GRID, DensityFunction, PanelBasis};
use crate::maps::MapFamily;
use crate::math::{ceil_usize, ln};
use crate::operator::{operator_terms, stationary_density, DiscretizedOperator, Resolvent, ZERO_MEAN_TOL};
use crate::quadrature::composite_gl;
use crate::response::derivative_terms;
use crate::spectral::SpectralReport;
use crate::system::RandomSystem;

/// Left endpoint of the inducing set.
pub const DELTA_LO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducingOptions {
    /// Largest return time kept.
    pub n_max: usize,
    /// Lowest panel breakpoint; values below are extrapolated as constants.
    pub lower: f64,
    pub delta_nodes: usize,
    pub panel_nodes: usize,
    pub quad_order: usize,
    /// Largest acceptable tail mass.
    pub tail_threshold: f64,
}

impl Default for InducingOptions {
    fn default() -> Self {
        InducingOptions { n_max: 40, lower: 1e-8, delta_nodes: 32, panel_nodes: 24, quad_order: 16, tail_threshold: 1e-2 }
    }
}

/// `x_n(ω) = g_{ω₁} ∘ … ∘ g_{ω_{n-1}}(1/2)` and `x'_n(ω) = (1 + x_n(σω))/2`.
///
/// `word[0]` is the letter of the right branch, which does not depend on
/// the parameter; `word` needs at least `n` letters.
pub fn xn_sequence(word: &[f64], n: usize) -> Result<(f64, f64)> {
    if n == 0 || word.len() < n {
        return Err(Error::Config(format!("need n >= 1 and at least n letters, got n = {n}, {} letters", word.len())));
    }
    let chain = |letters: &[f64]| -> Result<f64> {
        let mut x = 0.5;
        for &u in letters.iter().rev() {
            x = MapFamily::lsv(u)?.inverse(0, x)?;
        }
        Ok(x)
    };
    let xn = chain(&word[..n - 1])?;
    let shifted = chain(&word[1..n])?;
    Ok((xn, 0.5 * (1.0 + shifted)))
}

/// First `n ≥ 1` with `T_{ω_{n-1}} ∘ … ∘ T_{ω_0}(x) ∈ Δ`, or `None` when the
/// word runs out or `n_max` is exceeded.
pub fn first_return_time(word: &[f64], x: f64, n_max: usize) -> Result<Option<usize>> {
    if !(x > DELTA_LO && x <= 1.0) {
        return Err(Error::Config(format!("first return time needs x in (1/2, 1], got {x}")));
    }
    let mut y = x;
    for (k, &u) in word.iter().enumerate().take(n_max) {
        y = MapFamily::lsv(u)?.forward(y)?;
        if y > DELTA_LO {
            return Ok(Some(k + 1));
        }
    }
    Ok(None)
}

/// An LSV random system prepared for inducing.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedSystem {
    system: RandomSystem,
    opts: InducingOptions,
    basis: Arc<Basis>,
    delta: Arc<Basis>,
}

/// Left-branch kernel: `Σ c_val ℓ(g)·J + c_der (ℓ'(g) ∂_u g·J + ℓ(g) ∂_u J)`
/// with `J = g'` when `jacobian` is set and `J = 1` otherwise.
fn left_kernel(basis: &Basis, terms: &[(MapFamily, f64, f64)], jacobian: bool) -> Result<DMatrix<f64>> {
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    let (mut buf, mut dbuf) = (Vec::new(), Vec::new());
    for (i, &y) in basis.nodes().iter().enumerate() {
        for (fam, cv, cd) in terms {
            let (jet, pj) = fam.inverse_param_jet(0, y)?;
            let (jac, djac) = if jacobian { (jet.d1, pj.du_d1) } else { (1.0, 0.0) };
            let s = basis.cardinal(jet.value, &mut buf);
            let c = cv * jac + cd * djac;
            if c != 0.0 {
                for (k, l) in buf.iter().enumerate() {
                    m[(i, s + k)] += c * l;
                }
            }
            if *cd != 0.0 {
                let s = basis.cardinal_derivative(jet.value, &mut dbuf)?;
                let c = cd * pj.du * jac;
                for (k, l) in dbuf.iter().enumerate() {
                    m[(i, s + k)] += c * l;
                }
            }
        }
    }
    Ok(m)
}

impl InducedSystem {
    pub fn new(system: RandomSystem, opts: InducingOptions) -> Result<Self> {
        if !system.is_lsv() {
            return Err(Error::Config("inducing is implemented for LSV systems only".into()));
        }
        if opts.n_max == 0 {
            return Err(Error::Config("n_max must be positive".into()));
        }
        let panels = PanelBasis::dyadic(opts.lower, opts.delta_nodes, opts.panel_nodes)?;
        let delta = Basis::chebyshev_on(opts.delta_nodes, DELTA_LO, 1.0)?;
        Ok(InducedSystem { system, opts, basis: Arc::new(Basis::Panels(panels)), delta })
    }

    pub fn system(&self) -> &RandomSystem {
        &self.system
    }

    pub fn options(&self) -> &InducingOptions {
        &self.opts
    }

    /// Panel basis on `[δ, 1]`.
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Chebyshev basis on `Δ`, whose nodes are those of the top panel.
    pub fn delta_basis(&self) -> &Arc<Basis> {
        &self.delta
    }

    fn delta_offset(&self) -> usize {
        self.basis.len() - self.delta.len()
    }

    fn left_terms(&self, eps: f64) -> Result<Vec<(MapFamily, f64, f64)>> {
        Ok(operator_terms(&self.system, eps, self.opts.quad_order)?.into_iter().map(|(f, w)| (f, w, 0.0)).collect())
    }

    /// Annealed left-branch transfer operator `P_ε`.
    pub fn left_operator(&self, eps: f64) -> Result<DMatrix<f64>> {
        self.system.check_epsilon(eps)?;
        left_kernel(&self.basis, &self.left_terms(eps)?, true)
    }

    /// `∂_ε P_ε`.
    pub fn left_operator_derivative(&self, eps: f64) -> Result<DMatrix<f64>> {
        left_kernel(&self.basis, &derivative_terms(&self.system, eps, self.opts.quad_order)?, true)
    }

    /// `R`: from values on `Δ` to `½ ĥ((y+1)/2)` on the panels.
    pub fn lift(&self) -> DMatrix<f64> {
        let (n, m) = (self.basis.len(), self.delta.len());
        let mut r = DMatrix::zeros(n, m);
        let mut buf = Vec::new();
        for (i, &y) in self.basis.nodes().iter().enumerate() {
            let s = self.delta.cardinal(0.5 * (y + 1.0), &mut buf);
            for (k, l) in buf.iter().enumerate() {
                r[(i, s + k)] = 0.5 * l;
            }
        }
        r
    }

    /// `E[x_N]` and `∂_ε E[x_N]`, by the composition recursion
    /// `f_k = A f_{k-1}` with `A f = E_u[f∘g_u]` and `f_0 = id`.
    pub fn expected_x(&self, eps: f64, n: usize) -> Result<(f64, f64)> {
        self.system.check_epsilon(eps)?;
        let a = left_kernel(&self.basis, &self.left_terms(eps)?, false)?;
        let da = left_kernel(&self.basis, &derivative_terms(&self.system, eps, self.opts.quad_order)?, false)?;
        let mut f = DVector::from_column_slice(self.basis.nodes());
        let mut df = DVector::zeros(f.len());
        for _ in 1..n {
            df = &a * &df + &da * &f;
            f = &a * &f;
        }
        Ok((self.basis.eval(f.as_slice(), DELTA_LO), self.basis.eval(df.as_slice(), DELTA_LO)))
    }

    /// Largest parameter in the support of any component.
    fn alpha_max(&self) -> f64 {
        self.system.components().iter().map(|c| c.distribution.support.hi).fold(0.0, f64::max)
    }

    /// Induced operator and the levels `Pⁿ R` at ε.
    pub fn assemble(&self, eps: f64) -> Result<InducedOperator> {
        let p = self.left_operator(eps)?;
        let r = self.lift();
        let n_max = self.opts.n_max;
        let mut v = r.clone();
        let mut s = r.clone();
        for _ in 1..n_max {
            v = &p * &v;
            s += &v;
        }
        let (ex, dex) = self.expected_x(eps, n_max)?;
        let tail = 0.5 * ex;
        let off = self.delta_offset();
        let m = self.delta.len();
        let lhat = s.rows(off, m).into_owned();
        let ones = DVector::from_element(m, 1.0);
        let covered: f64 = self.delta.integrate((&lhat * &ones).as_slice());
        let cylinder_tail = 0.5 - covered;
        if !(tail <= self.opts.tail_threshold) {
            let a = self.alpha_max();
            let suggested = ceil_usize(n_max as f64 * crate::math::powf(tail / self.opts.tail_threshold, a)) + 1;
            return Err(Error::Truncation { tail, threshold: self.opts.tail_threshold, suggested });
        }
        let mut op = DiscretizedOperator::new_dense(lhat, self.delta.clone(), eps, tail);
        op.cutoff = n_max;
        op.quad_order = self.opts.quad_order;
        Ok(InducedOperator { epsilon: eps, operator: op, tail_mass: tail, tail_derivative: 0.5 * dex, cylinder_tail, p, r, n_max, sum: s, offset: off, basis: self.basis.clone() })
    }

    /// `ĥ_ε` and `h_ε = F_ε(ĥ_ε)`.
    pub fn density(&self, eps: f64) -> Result<InducedDensity> {
        let op = self.assemble(eps)?;
        let st = stationary_density(&op.operator)?;
        let h = op.unfold(&st.density)?;
        Ok(InducedDensity { h_hat: st.density, h, spectral: st.spectral, tail_mass: op.tail_mass, warnings: st.warnings })
    }
}

/// Discretized induced system at one ε.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedOperator {
    pub epsilon: f64,
    /// `L̂` on the basis of `Δ`.
    pub operator: DiscretizedOperator,
    /// `E[x_N]/2`: mass of `Δ` with return time beyond `N`.
    pub tail_mass: f64,
    pub tail_derivative: f64,
    /// The same mass from the cylinders that were kept.
    pub cylinder_tail: f64,
    p: DMatrix<f64>,
    r: DMatrix<f64>,
    n_max: usize,
    sum: DMatrix<f64>,
    offset: usize,
    basis: Arc<Basis>,
}

impl InducedOperator {
    /// Panel basis of the unfolded densities.
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// `Σ_n Pⁿ R ĥ` on the panels.
    pub fn word_sum(&self, h_hat: &DensityFunction) -> Vec<f64> {
        (&self.sum * DVector::from_column_slice(h_hat.values())).as_slice().to_vec()
    }

    /// `Pⁿ R ĥ` on the panels.
    pub fn level(&self, n: usize, h_hat: &DensityFunction) -> Result<Vec<f64>> {
        if n >= self.n_max {
            return Err(Error::Index { index: n, len: self.n_max });
        }
        let mut v = &self.r * DVector::from_column_slice(h_hat.values());
        for _ in 0..n {
            v = &self.p * v;
        }
        Ok(v.as_slice().to_vec())
    }

    /// Number of kept return times.
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn check_delta(&self, h_hat: &DensityFunction) -> Result<()> {
        if h_hat.basis() != &self.operator.basis {
            return Err(Error::Precondition("function is not on the basis of the inducing set".into()));
        }
        Ok(())
    }

    /// `F(ĥ)`: `ĥ` on `Δ`, the word sum below.
    pub fn unfold(&self, h_hat: &DensityFunction) -> Result<DensityFunction> {
        self.check_delta(h_hat)?;
        let mut v = self.word_sum(h_hat);
        v[self.offset..].copy_from_slice(h_hat.values());
        DensityFunction::new(self.basis.clone(), v)
    }

    /// `∂_ε` of the levels applied to `ĥ`: `(q̂ on Δ, Qĥ off Δ)` summed over
    /// the words, given `∂_ε P`.
    pub fn derivative_sum(&self, dp: &DMatrix<f64>, h_hat: &DensityFunction) -> Result<Vec<f64>> {
        self.check_delta(h_hat)?;
        let mut v = &self.r * DVector::from_column_slice(h_hat.values());
        let mut w = DVector::zeros(self.p.nrows());
        let mut total = DVector::zeros(self.p.nrows());
        for _ in 1..self.n_max {
            w = &self.p * &w + dp * &v;
            v = &self.p * &v;
            total += &w;
        }
        Ok(total.as_slice().to_vec())
    }
}

/// Stationary data of an induced system.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedDensity {
    pub h_hat: DensityFunction,
    /// Un-normalized `F(ĥ)`.
    pub h: DensityFunction,
    pub spectral: SpectralReport,
    pub tail_mass: f64,
    pub warnings: Vec<String>,
}

/// `γ` with `2α₀ < γ`, below 1 when `α₀ < 1/2`.
pub fn default_gamma(alpha0: f64) -> f64 {
    if alpha0 < 0.5 {
        2.0 * alpha0 + 0.05 * (1.0 - 2.0 * alpha0)
    } else {
        2.0 * alpha0 + 0.05 * (1.0 - alpha0)
    }
}

/// Checks `α₁ < 2α₀ < γ ≤ 1 + α₀`.
pub fn check_gamma(alpha0: f64, alpha1: f64, gamma: f64) -> Result<()> {
    if !(alpha1 < 2.0 * alpha0) {
        return Err(Error::Hypothesis { check: format!("alpha1 < 2 alpha0 with alpha0 = {alpha0}"), value: alpha1 });
    }
    if !(2.0 * alpha0 < gamma && gamma <= 1.0 + alpha0) {
        return Err(Error::Hypothesis { check: format!("2 alpha0 < gamma <= 1 + alpha0 with alpha0 = {alpha0}"), value: gamma });
    }
    Ok(())
}

/// Response of an induced system.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedResponse {
    pub h_hat: DensityFunction,
    pub h_hat_star: DensityFunction,
    /// `∂_ε L̂ ĥ` after removing its mean.
    pub q_hat: DensityFunction,
    /// The removed mean, attributable to truncation of the word sum.
    pub q_hat_mean: f64,
    /// `F(ĥ)`, not normalized.
    pub h: DensityFunction,
    pub unfolded_response: DensityFunction,
    /// `Qĥ`, zero on `Δ`.
    pub correction: DensityFunction,
    /// `F(ĥ*) + Qĥ`.
    pub h_star: DensityFunction,
    /// Derivative of `h_ε / ∫h_ε`.
    pub h_star_normalized: DensityFunction,
    pub tail_mass: f64,
    pub tail_derivative: f64,
    pub cylinder_tail: f64,
    pub spectral: SpectralReport,
    pub resolvent_residual: f64,
    pub condition: f64,
    pub warnings: Vec<String>,
}

fn q_tolerance(h_hat: &DensityFunction, tail_derivative: f64) -> f64 {
    ZERO_MEAN_TOL + 2.0 * h_hat.max_abs_nodal() * tail_derivative.abs()
}

/// `h* = F(ĥ*) + Qĥ` at ε = 0.
pub fn full_response(ind: &InducedSystem) -> Result<InducedResponse> {
    let op = ind.assemble(0.0)?;
    let st = stationary_density(&op.operator)?;
    let h_hat = st.density;
    let dp = ind.left_operator_derivative(0.0)?;
    let total = op.derivative_sum(&dp, &h_hat)?;
    let off = op.offset;
    let q_hat = DensityFunction::new(ind.delta.clone(), total[off..].to_vec())?;
    let mut corr = total;
    corr[off..].iter_mut().for_each(|v| *v = 0.0);
    let correction = DensityFunction::new(ind.basis.clone(), corr)?;
    let sol = Resolvent::new(&op.operator, &h_hat)?.solve_with_tolerance(&q_hat, q_tolerance(&h_hat, op.tail_derivative))?;
    let q_hat_mean = sol.projected_mean;
    let q_hat = q_hat.axpy(-q_hat_mean, &h_hat)?;
    let h = op.unfold(&h_hat)?;
    let unfolded = op.unfold(&sol.f)?;
    let h_star = unfolded.axpy(1.0, &correction)?;
    let mass = integrate_panels(&h, |v| v);
    let h_star_normalized = h_star.scale(1.0 / mass).axpy(-integrate_panels(&h_star, |v| v) / (mass * mass), &h)?;
    let mut warnings = st.warnings;
    if q_hat_mean.abs() > ZERO_MEAN_TOL {
        warnings.push(format!("removed mean {q_hat_mean:e} of the induced right-hand side (word truncation)"));
    }
    Ok(InducedResponse {
        h_hat,
        h_hat_star: sol.f,
        q_hat,
        q_hat_mean,
        h,
        unfolded_response: unfolded,
        correction,
        h_star,
        h_star_normalized,
        tail_mass: op.tail_mass,
        tail_derivative: op.tail_derivative,
        cylinder_tail: op.cylinder_tail,
        spectral: st.spectral,
        resolvent_residual: sol.residual,
        condition: sol.condition,
        warnings,
    })
}

/// `∫₀¹ m(f)` for a panel function, with the constant extension below the
/// lowest panel.
fn integrate_panels(f: &DensityFunction, m: impl Fn(f64) -> f64) -> f64 {
    match f.basis().as_ref() {
        Basis::Panels(p) => {
            let below = p.lower() * m(f.eval(p.lower()));
            below + p.panels().iter().map(|c| { let (a, b) = c.interval(); composite_gl(a, b, 2, 16, |x| m(f.eval(x))) }).sum::<f64>()
        }
        b => {
            let (lo, hi) = b.domain();
            composite_gl(lo, hi, 32, 16, |x| m(f.eval(x)))
        }
    }
}

/// `‖f‖_{L¹(0,1)}`.
pub fn l1_norm(f: &DensityFunction) -> f64 {
    integrate_panels(f, f64::abs)
}

/// One row of the induced finite-difference validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedFdPoint {
    pub epsilon: f64,
    pub central: bool,
    pub h_norm_error: f64,
    /// Only reported when `γ < 1`.
    pub l1_error: Option<f64>,
    pub order: Option<f64>,
}

/// Distance of finite differences of `h_ε = F_ε(ĥ_ε)` to `h*` in `‖·‖_H`.
pub fn induced_fd_check(ind: &InducedSystem, resp: &InducedResponse, eps_list: &[f64], gamma: f64) -> Result<Vec<InducedFdPoint>> {
    let mut out: Vec<InducedFdPoint> = Vec::new();
    for &e in eps_list {
        if !(e > 0.0) {
            return Err(Error::Config(format!("finite-difference step must be positive, got {e}")));
        }
        let central = ind.system.admits(-e);
        let fd = if central {
            ind.density(e)?.h.sub(&ind.density(-e)?.h)?.scale(0.5 / e)
        } else {
            ind.density(e)?.h.sub(&resp.h)?.scale(1.0 / e)
        };
        let diff = fd.sub(&resp.h_star)?;
        let h_norm_error = diff.h_norm(gamma);
        let l1_error = (gamma < 1.0).then(|| l1_norm(&diff));
        let order = out.last().map(|p| ln(p.h_norm_error / h_norm_error) / ln(p.epsilon / e));
        out.push(InducedFdPoint { epsilon: e, central, h_norm_error, l1_error, order });
    }
    Ok(out)
}

/// Level `n` of the word sum at `x` by tensor quadrature over the `n`
/// letters: `E[½ φ(r(g_{ω₁} ∘ … ∘ g_{ω_n}(x))) Π g']`.
///
/// Exponential in `n`; used to validate the nested recursion.
pub fn word_level_tensor(system: &RandomSystem, eps: f64, n: usize, x: f64, phi: &dyn Fn(f64) -> f64, order: usize) -> Result<f64> {
    let [c] = system.components() else {
        return Err(Error::Unsupported("tensor word oracle needs a single family".into()));
    };
    let measure = c.distribution.measure(eps)?;
    let factors = vec![measure; n];
    let err = core::cell::RefCell::new(None);
    let v = tensor_integrate(
        &factors,
        &|w: &[f64]| {
            let mut y = x;
            let mut jac = 1.0;
            for &u in w.iter().rev() {
                match MapFamily::lsv(u).and_then(|f| f.inverse_jet(0, y)) {
                    Ok(j) => {
                        jac *= j.d1;
                        y = j.value;
                    }
                    Err(e) => *err.borrow_mut() = Some(e),
                }
            }
            0.5 * phi(0.5 * (y + 1.0)) * jac
        },
        order,
    );
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Induced branch of return time `n` at `x` with the forward jets of `T̂`
/// at its image point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct WordJet {
    y: f64,
    /// `1/T̂'(y)`
    weight: f64,
    a1: f64,
    a2: f64,
}

fn word_jets(fam: &MapFamily, x: f64, n_max: usize) -> Result<Vec<WordJet>> {
    let mut chain = Vec::with_capacity(n_max);
    chain.push(x);
    for k in 1..n_max {
        let c = fam.inverse(0, chain[k - 1])?;
        chain.push(c);
    }
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let y = 0.5 * (chain[n - 1] + 1.0);
        // right branch: T = 2y - 1
        let (mut d1, mut d2, mut du, mut dud1) = (2.0, 0.0, 0.0, 0.0);
        for k in (1..n).rev() {
            let t = fam.forward_jet(chain[k]);
            dud1 = (t.du_d1 + t.d2 * du) * d1 + t.d1 * dud1;
            du = t.du + t.d1 * du;
            d2 = t.d2 * d1 * d1 + t.d1 * d2;
            d1 *= t.d1;
        }
        out.push(WordJet {
            y,
            weight: 1.0 / d1,
            a1: -du / d1,
            a2: du * d2 / (d1 * d1) - dud1 / d1,
        });
    }
    Ok(out)
}

/// Induced response of the single map `T_α` under `α ↦ α + ε`, computed by
/// composing branches pointwise and differentiating the induced map
/// through `A¹ = -∂_u T̂ / T̂'` and `A² = ∂_u T̂·T̂''/T̂'² - ∂_u T̂'/T̂'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicInduced {
    pub alpha: f64,
    pub n_max: usize,
    pub h_hat: DensityFunction,
    pub h_hat_star: DensityFunction,
    pub q_hat: DensityFunction,
    pub operator: DiscretizedOperator,
    pub tail_mass: f64,
    pub spectral: SpectralReport,
    fam: MapFamily,
    dh_hat: DensityFunction,
}

pub fn deterministic_induced(alpha: f64, opts: &InducingOptions) -> Result<DeterministicInduced> {
    let fam = MapFamily::lsv(alpha)?;
    let delta = Basis::chebyshev_on(opts.delta_nodes, DELTA_LO, 1.0)?;
    let n = delta.len();
    let n_max = opts.n_max;
    let jets: Vec<Vec<WordJet>> = delta.nodes().iter().map(|&x| word_jets(&fam, x, n_max)).collect::<Result<_>>()?;
    let mut m = DMatrix::zeros(n, n);
    let mut buf = Vec::new();
    for (i, row) in jets.iter().enumerate() {
        for w in row {
            let s = delta.cardinal(w.y, &mut buf);
            for (k, l) in buf.iter().enumerate() {
                m[(i, s + k)] += w.weight * l;
            }
        }
    }
    // x_N and its α-derivative along x_{k+1} = g(x_k), x_1 = 1/2
    let (mut x, mut dx) = (0.5, 0.0);
    for _ in 1..n_max {
        let (j, p) = fam.inverse_param_jet(0, x)?;
        dx = p.du + j.d1 * dx;
        x = j.value;
    }
    let tail = 0.5 * x;
    if !(tail <= opts.tail_threshold) {
        let suggested = ceil_usize(n_max as f64 * crate::math::powf(tail / opts.tail_threshold, alpha)) + 1;
        return Err(Error::Truncation { tail, threshold: opts.tail_threshold, suggested });
    }
    let mut op = DiscretizedOperator::new_dense(m, delta.clone(), 0.0, tail);
    op.cutoff = n_max;
    let st = stationary_density(&op)?;
    let h_hat = st.density;
    let dh_hat = h_hat.differentiate()?;
    let q: Vec<f64> = jets
        .iter()
        .map(|row| row.iter().map(|w| w.weight * (w.a1 * dh_hat.eval(w.y) + w.a2 * h_hat.eval(w.y))).sum())
        .collect();
    let q_hat = DensityFunction::new(delta.clone(), q)?;
    let sol = Resolvent::new(&op, &h_hat)?.solve_with_tolerance(&q_hat, q_tolerance(&h_hat, 0.5 * dx))?;
    Ok(DeterministicInduced {
        alpha,
        n_max,
        h_hat,
        h_hat_star: sol.f,
        q_hat,
        operator: op,
        tail_mass: tail,
        spectral: st.spectral,
        fam,
        dh_hat,
    })
}

impl DeterministicInduced {
    /// `F(ĥ)(x)`.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        self.unfold_at(&self.h_hat, x)
    }

    /// `F(f)(x)` for a function on `Δ`.
    pub fn unfold_at(&self, f: &DensityFunction, x: f64) -> Result<f64> {
        if x >= DELTA_LO {
            return Ok(f.eval(x));
        }
        Ok(word_jets(&self.fam, x, self.n_max)?.iter().map(|w| w.weight * f.eval(w.y)).sum())
    }

    /// `Qĥ(x)`.
    pub fn correction_at(&self, x: f64) -> Result<f64> {
        if x >= DELTA_LO {
            return Ok(0.0);
        }
        Ok(word_jets(&self.fam, x, self.n_max)?
            .iter()
            .map(|w| w.weight * (w.a1 * self.dh_hat.eval(w.y) + w.a2 * self.h_hat.eval(w.y)))
            .sum())
    }

    /// `h*(x) = F(ĥ*)(x) + Qĥ(x)`.
    pub fn h_star_at(&self, x: f64) -> Result<f64> {
        Ok(self.unfold_at(&self.h_hat_star, x)? + self.correction_at(x)?)
    }

    /// `‖h*‖_H`.
    pub fn h_star_h_norm(&self, gamma: f64) -> Result<f64> {
        let mut m: f64 = 0.0;
        for x in h_norm_grid(H_NORM_GRID) {
            m = m.max((crate::math::powf(x, gamma) * self.h_star_at(x)?).abs());
        }
        Ok(m)
    }
}

/// Uniform-to-Dirac response against the deterministic one.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfCheck {
    pub alpha0: f64,
    pub gamma: f64,
    pub h_norm_uniform: f64,
    pub h_norm_deterministic: f64,
    /// `‖h*_unif‖_H / ‖h*_det‖_H`
    pub ratio: f64,
    /// Largest deviation of `h*_unif - h*_det/2` on `Δ`, relative to `‖h*_det‖_∞`.
    pub delta_deviation: f64,
    pub tail_mass: f64,
}

/// Compares the response of exponents uniform on `(α₀, α₀ + ε)` with the
/// deterministic response of `T_{α₀}`.
pub fn half_factor_check(alpha0: f64, width: f64, gamma: f64, opts: &InducingOptions) -> Result<HalfCheck> {
    check_gamma(alpha0, alpha0 + width, gamma)?;
    let ind = InducedSystem::new(RandomSystem::lsv_uniform_to_dirac(alpha0, width)?, *opts)?;
    let uni = full_response(&ind)?;
    let det = deterministic_induced(alpha0, opts)?;
    let h_norm_uniform = uni.h_star.h_norm(gamma);
    let h_norm_deterministic = det.h_star_h_norm(gamma)?;
    let scale = det.h_hat_star.max_abs_nodal().max(f64::MIN_POSITIVE);
    let delta_deviation = uni.h_hat_star.axpy(-0.5, &det.h_hat_star)?.max_abs_nodal() / scale;
    Ok(HalfCheck {
        alpha0,
        gamma,
        h_norm_uniform,
        h_norm_deterministic,
        ratio: h_norm_uniform / h_norm_deterministic,
        delta_deviation,
        tail_mass: uni.tail_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapTemplate;

    fn opts() -> InducingOptions {
        InducingOptions::default()
    }

    #[test]
    fn xn_basics() {
        let w = [0.3, 0.25, 0.4, 0.35, 0.3, 0.27];
        let (x1, xp1) = xn_sequence(&w, 1).unwrap();
        assert_eq!(x1, 0.5);
        assert_eq!(xp1, 0.75);
        let mut prev = 1.0;
        for n in 1..=6 {
            let (x, _) = xn_sequence(&w, n).unwrap();
            assert!(x < prev);
            prev = x;
            let (lo, _) = xn_sequence(&[0.25; 6], n).unwrap();
            let (hi, _) = xn_sequence(&[0.4; 6], n).unwrap();
            assert!(lo <= x + 1e-15 && x <= hi + 1e-15, "{n}: {lo} {x} {hi}");
        }
    }

    #[test]
    fn return_time_matches_cylinders() {
        let w = [0.3, 0.25, 0.4, 0.35, 0.3, 0.27, 0.33, 0.31];
        assert_eq!(first_return_time(&w, 0.8, 10).unwrap(), Some(1));
        let (_, xp2) = xn_sequence(&w, 2).unwrap();
        assert_eq!(first_return_time(&w, xp2 + 1e-9, 10).unwrap(), Some(2));
        for n in 2..7 {
            let (_, a) = xn_sequence(&w, n).unwrap();
            let (_, b) = xn_sequence(&w, n - 1).unwrap();
            let mid = 0.5 * (a + b);
            assert_eq!(first_return_time(&w, mid, 10).unwrap(), Some(n));
        }
    }

    #[test]
    fn nested_levels_match_tensor_words() {
        let sys = RandomSystem::lsv_tilted(0.25, 0.45).unwrap();
        let ind = InducedSystem::new(sys.clone(), opts()).unwrap();
        let op = ind.assemble(0.01).unwrap();
        let phi = |x: f64| 1.0 + x * x - 0.3 * x;
        let f = DensityFunction::from_fn(ind.delta_basis().clone(), phi);
        for n in 0..4 {
            let v = DensityFunction::new(ind.basis().clone(), op.level(n, &f).unwrap()).unwrap();
            for x in [0.013, 0.2, 0.47, 0.8] {
                let o = word_level_tensor(&sys, 0.01, n, x, &phi, 8).unwrap();
                assert!((v.eval(x) - o).abs() < 1e-10, "n={n} x={x}: {} vs {o}", v.eval(x));
            }
        }
        assert!((op.tail_mass - op.cylinder_tail).abs() < 1e-9, "{} {}", op.tail_mass, op.cylinder_tail);
    }

    #[test]
    fn dirac_case_matches_direct_composition() {
        let ind = InducedSystem::new(RandomSystem::deterministic(MapTemplate::Lsv, 0.3).unwrap(), opts()).unwrap();
        let a = ind.assemble(0.0).unwrap();
        let b = deterministic_induced(0.3, &opts()).unwrap();
        let d = (a.operator.dense().unwrap() - b.operator.dense().unwrap()).abs().max();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn translate_response_matches_deterministic() {
        let ind = InducedSystem::new(RandomSystem::lsv_translate(0.3, 0.05).unwrap(), opts()).unwrap();
        let r = full_response(&ind).unwrap();
        let det = deterministic_induced(0.3, &opts()).unwrap();
        let d = r.h_hat_star.sub(&det.h_hat_star).unwrap().max_abs_nodal();
        assert!(d < 1e-8, "{d}");
        for x in [0.01, 0.1, 0.3] {
            let (u, v) = (r.h_star.eval(x), det.h_star_at(x).unwrap());
            assert!((u - v).abs() < 1e-7 * v.abs().max(1.0), "{x}: {u} {v}");
        }
    }
}
