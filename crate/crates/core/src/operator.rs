//! Discretized annealed transfer operator, stationary density and resolvent.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_space::{Basis, DensityFunction};
use crate::maps::{Domain, MapFamily};
use crate::quadrature::gauss_legendre_on;
use crate::spectral::{analyse, ones, SpectralReport};
use crate::system::RandomSystem;

/// Handling of the branches beyond the cutoff of countable families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailMode {
    /// Drop them; the omitted mass is reported.
    Truncate,
    /// Replace them by the midpoint-rule integral over the interval they
    /// cover; the residual of that rule is reported.
    Integral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOptions {
    pub cutoff: usize,
    pub quad_order: usize,
    pub tail: TailMode,
}

/// Default branch cutoff for density solves.
pub const DEFAULT_CUTOFF: usize = 10_000;
/// Branch cutoff used by acceptance runs.
pub const ACCEPTANCE_CUTOFF: usize = 100_000;

impl Default for OperatorOptions {
    fn default() -> Self {
        OperatorOptions { cutoff: DEFAULT_CUTOFF, quad_order: 16, tail: TailMode::Integral }
    }
}

/// Compressed sparse rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix { n, row_ptr, cols, vals }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (self.row_ptr[i]..self.row_ptr[i + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum())
            .collect()
    }

    pub fn mul_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.cols[k]] += self.vals[k] * x[i];
            }
        }
        y
    }

    /// Sum of the entries in each column.
    pub fn column_sums(&self) -> Vec<f64> {
        self.mul_transpose(&vec![1.0; self.n])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorMatrix {
    Dense(DMatrix<f64>),
    Sparse(SparseMatrix),
}

/// Matrix of `L_{P_ε}` acting on nodal values, with truncation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedOperator {
    pub matrix: OperatorMatrix,
    pub basis: Arc<Basis>,
    pub epsilon: f64,
    pub cutoff: usize,
    pub quad_order: usize,
    /// Bound on `|∫LΦ - ∫Φ|` per unit norm of `Φ` coming from truncation.
    pub tail_bound: f64,
    /// Mass carried by omitted branches before any tail correction.
    pub truncated_mass: f64,
}

impl DiscretizedOperator {
    pub fn new_dense(matrix: DMatrix<f64>, basis: Arc<Basis>, epsilon: f64, tail_bound: f64) -> Self {
        DiscretizedOperator {
            matrix: OperatorMatrix::Dense(matrix),
            basis,
            epsilon,
            cutoff: 0,
            quad_order: 0,
            tail_bound,
            truncated_mass: tail_bound,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dense(&self) -> Option<&DMatrix<f64>> {
        match &self.matrix {
            OperatorMatrix::Dense(m) => Some(m),
            OperatorMatrix::Sparse(_) => None,
        }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::Dense(m) => (m * DVector::from_column_slice(v)).as_slice().to_vec(),
            OperatorMatrix::Sparse(s) => s.mul(v),
        }
    }

    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        match &self.matrix {
            OperatorMatrix::Dense(m) => (m.tr_mul(&DVector::from_column_slice(v))).as_slice().to_vec(),
            OperatorMatrix::Sparse(s) => s.mul_transpose(v),
        }
    }

    pub fn apply_fn(&self, f: &DensityFunction) -> Result<DensityFunction> {
        if f.basis() != &self.basis {
            return Err(Error::Precondition("function and operator use different bases".into()));
        }
        DensityFunction::new(self.basis.clone(), self.apply(f.values()))
    }

    /// Spectral data without solving for the density.
    pub fn spectral(&self) -> SpectralReport {
        let w = self.basis.weights().to_vec();
        analyse(&|v| self.apply(v), &|v| self.apply_transpose(v), &ones(self.dim()), &w, self.dense()).0
    }
}

/// Transfer operator of one map applied pointwise: adds
/// `coef · Σ_z Φ(g_z(x))|g_z'(x)|` to `out` using the cardinal functions of
/// `basis`, including the tail term of countable families.
pub(crate) fn accumulate_row(
    fam: &MapFamily,
    x: f64,
    coef: f64,
    basis: &Basis,
    opts: &OperatorOptions,
    tail_rule: &(Vec<f64>, Vec<f64>),
    buf: &mut Vec<f64>,
    out: &mut [f64],
) -> Result<()> {
    fam.for_each_preimage(x, opts.cutoff, false, |p| {
        let start = basis.cardinal(p.y, buf);
        let c = coef * p.weight;
        for (k, l) in buf.iter().enumerate() {
            out[start + k] += c * l;
        }
    })?;
    if opts.tail == TailMode::Integral {
        if let Some((lo, hi)) = fam.tail_segment(x, opts.cutoff) {
            let h = hi - lo;
            for (t, w) in tail_rule.0.iter().zip(&tail_rule.1) {
                let start = basis.cardinal(lo + h * t, buf);
                let c = coef * h * w;
                for (k, l) in buf.iter().enumerate() {
                    out[start + k] += c * l;
                }
            }
        }
    }
    Ok(())
}

/// Maps and weights `(T_u, π_k w)` of the parameter quadrature of `P_ε`.
pub(crate) fn operator_terms(system: &RandomSystem, eps: f64, order: usize) -> Result<Vec<(MapFamily, f64)>> {
    let mut terms = Vec::new();
    for (c, pi) in system.components().iter().zip(system.weights(eps)) {
        if pi == 0.0 {
            continue;
        }
        for a in c.distribution.measure(eps)?.rule(order) {
            terms.push((c.template.at(a.location)?, pi * a.weight));
        }
    }
    Ok(terms)
}

/// `(L_{P_ε} φ)(x)` evaluated directly, without a basis.
pub fn apply_pointwise(system: &RandomSystem, eps: f64, opts: &OperatorOptions, x: f64, phi: &dyn Fn(f64) -> f64) -> Result<f64> {
    system.check_epsilon(eps)?;
    let rule = tail_rule();
    let mut s = 0.0;
    for (fam, w) in operator_terms(system, eps, opts.quad_order)? {
        s += w * transfer_at(&fam, x, opts, &rule, phi)?;
    }
    Ok(s)
}

/// `Σ_z Φ(g_z(x))|g_z'(x)|` for a function given pointwise.
pub(crate) fn transfer_at(
    fam: &MapFamily,
    x: f64,
    opts: &OperatorOptions,
    tail_rule: &(Vec<f64>, Vec<f64>),
    phi: &dyn Fn(f64) -> f64,
) -> Result<f64> {
    let mut s = 0.0;
    fam.for_each_preimage(x, opts.cutoff, false, |p| s += p.weight * phi(p.y))?;
    if opts.tail == TailMode::Integral {
        if let Some((lo, hi)) = fam.tail_segment(x, opts.cutoff) {
            let h = hi - lo;
            s += tail_rule.0.iter().zip(&tail_rule.1).map(|(t, w)| h * w * phi(lo + h * t)).sum::<f64>();
        }
    }
    Ok(s)
}

/// Gauss-Legendre rule on `[0,1]` for the tail integral.
pub(crate) fn tail_rule() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre_on(0.0, 1.0, 8)
}

fn tail_metadata(system: &RandomSystem, eps: f64, opts: &OperatorOptions) -> (f64, f64) {
    let mut bound = 0.0;
    let mut mass = 0.0;
    for (c, pi) in system.components().iter().zip(system.weights(eps)) {
        if let Ok(f) = c.template.at(0.1) {
            mass += pi.abs() * f.truncated_mass_bound(opts.cutoff);
            bound += pi.abs()
                * match opts.tail {
                    TailMode::Truncate => f.truncated_mass_bound(opts.cutoff),
                    TailMode::Integral => f.tail_residual_bound(opts.cutoff),
                };
        }
    }
    (bound, mass)
}

fn check_basis(system: &RandomSystem, basis: &Basis) -> Result<()> {
    match (basis, system.domain()) {
        (Basis::Fourier(_), Domain::UnitInterval) => Err(Error::config("Fourier basis requires circle maps")),
        (Basis::Ulam(_), _) => Err(Error::config("use ulam_operator for the piecewise-constant basis")),
        _ => Ok(()),
    }
}

/// Collocation matrix `M[i][j] = (L_{P_ε} ℓ_j)(x_i)`.
pub fn build_operator(system: &RandomSystem, eps: f64, basis: Arc<Basis>, opts: &OperatorOptions) -> Result<DiscretizedOperator> {
    system.check_epsilon(eps)?;
    check_basis(system, &basis)?;
    let n = basis.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    let rule = tail_rule();
    let mut buf = Vec::new();
    let mut row = vec![0.0; n];
    let nodes = basis.nodes().to_vec();
    let terms = operator_terms(system, eps, opts.quad_order)?;
    for (i, x) in nodes.iter().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (fam, coef) in &terms {
            accumulate_row(fam, *x, *coef, &basis, opts, &rule, &mut buf, &mut row)?;
        }
        for j in 0..n {
            m[(i, j)] = row[j];
        }
    }
    let (tail_bound, truncated_mass) = tail_metadata(system, eps, opts);
    Ok(DiscretizedOperator {
        matrix: OperatorMatrix::Dense(m),
        basis,
        epsilon: eps,
        cutoff: opts.cutoff,
        quad_order: opts.quad_order,
        tail_bound,
        truncated_mass,
    })
}

/// `ψ(b) - ψ(a)` for `a, b` large, by the asymptotic series of the digamma
/// function.
fn digamma_difference(a: f64, b: f64) -> f64 {
    let tail = |x: f64| {
        let x2 = x * x;
        -0.5 / x - 1.0 / (12.0 * x2) + 1.0 / (120.0 * x2 * x2) - 1.0 / (252.0 * x2 * x2 * x2)
    };
    crate::math::ln(b / a) + tail(b) - tail(a)
}

/// Ulam discretization on `k` equal bins.
///
/// Entry `(j, i)` is `K |g(B_j) ∩ B_i|` summed over inverse branches `g`,
/// computed from the exact preimages of the bin endpoints. Branches of
/// countable families beyond `n = K` fall entirely into the edge bin and
/// are summed in closed form.
pub fn ulam_operator(system: &RandomSystem, eps: f64, k: usize, quad_order: usize) -> Result<DiscretizedOperator> {
    system.check_epsilon(eps)?;
    if k < 64 {
        return Err(Error::config(format!("Ulam discretization needs K >= 64, got {k}")));
    }
    let basis = Basis::ulam(k)?;
    let kf = k as f64;
    let terms = operator_terms(system, eps, quad_order)?;
    let mut triplets = Vec::new();
    let push = |j: usize, lo: f64, hi: f64, w: f64, out: &mut Vec<(usize, usize, f64)>| {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let first = ((lo * kf) as usize).min(k - 1);
        let last = ((hi * kf) as usize).min(k - 1);
        for i in first..=last {
            let ov = hi.min((i + 1) as f64 / kf) - lo.max(i as f64 / kf);
            if ov > 0.0 {
                out.push((j, i, w * kf * ov));
            }
        }
    };
    for (fam, w) in &terms {
        for j in 0..k {
            let (c0, c1) = (j as f64 / kf, (j + 1) as f64 / kf);
            match fam {
                MapFamily::Gauss | MapFamily::Renyi => {
                    let gauss = matches!(fam, MapFamily::Gauss);
                    for n in 1..=k {
                        push(j, fam.inverse(n, c0)?, fam.inverse(n, c1)?, *w, &mut triplets);
                    }
                    // Σ_{n>K} |1/(n+c0) - 1/(n+c1)| = ψ(K+1+c1) - ψ(K+1+c0)
                    let mass = digamma_difference(kf + 1.0 + c0, kf + 1.0 + c1);
                    let edge = if gauss { 0 } else { k - 1 };
                    triplets.push((j, edge, w * kf * mass));
                }
                _ => {
                    for index in 0..fam.branch_count().unwrap_or(0) {
                        push(j, fam.inverse(index, c0)?, fam.inverse(index, c1)?, *w, &mut triplets);
                    }
                }
            }
        }
    }
    Ok(DiscretizedOperator {
        matrix: OperatorMatrix::Sparse(SparseMatrix::from_triplets(k, triplets)),
        basis,
        epsilon: eps,
        cutoff: k,
        quad_order,
        tail_bound: 1e-12,
        truncated_mass: 0.0,
    })
}

/// Result of [`stationary_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub density: DensityFunction,
    pub spectral: SpectralReport,
    /// `‖L h - h‖_∞` at the nodes.
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Tolerance on `|λ₁ - 1|`.
pub const EIGENVALUE_TOL: f64 = 1e-8;

/// Threshold below which `1 - |λ₂|` is treated as no gap.
pub const MIN_GAP: f64 = 1e-6;

/// Eigenvector for the eigenvalue nearest 1, normalized to integral 1.
pub fn stationary_density(op: &DiscretizedOperator) -> Result<Stationary> {
    let w = op.basis.weights().to_vec();
    let (spectral, v) = analyse(&|x| op.apply(x), &|x| op.apply_transpose(x), &ones(op.dim()), &w, op.dense());
    let mass: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
    let shape = crate::math::max_abs(&v) / mass.abs().max(f64::MIN_POSITIVE);
    let tol = EIGENVALUE_TOL + op.tail_bound * shape.max(1.0);
    if !((spectral.eigenvalue_1 - 1.0).abs() <= tol) {
        return Err(Error::Model { eigenvalue: spectral.eigenvalue_1, tolerance: tol });
    }
    if !(spectral.gap > MIN_GAP) {
        return Err(Error::NoGap { second_modulus: spectral.second_modulus });
    }
    let h = DensityFunction::new(op.basis.clone(), v)?.normalize()?;
    let lh = op.apply(h.values());
    let residual = lh.iter().zip(h.values()).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    let mut warnings = Vec::new();
    let min = h.values().iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        warnings.push(format!("stationary density takes negative nodal value {min:e}"));
    }
    Ok(Stationary { density: h, spectral, residual, warnings })
}

/// Factorized `(I - L + h₀ wᵀ)`, which is invertible when 1 is a simple
/// eigenvalue and maps mean-zero functions to mean-zero functions.
#[derive(Debug, Clone)]
pub struct Resolvent {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    matrix: DMatrix<f64>,
    h0: Vec<f64>,
    weights: Vec<f64>,
    basis: Arc<Basis>,
    pub condition: f64,
}

/// Largest acceptable condition estimate.
pub const MAX_CONDITION: f64 = 1e12;

/// Absolute tolerance on `∫q` for resolvent solves.
pub const ZERO_MEAN_TOL: f64 = 1e-9;

impl Resolvent {
    pub fn new(op: &DiscretizedOperator, h0: &DensityFunction) -> Result<Self> {
        let l = op.dense().ok_or_else(|| Error::Unsupported("resolvent of a sparse operator".into()))?;
        let n = op.dim();
        let w = op.basis.weights().to_vec();
        let mut a = -l.clone();
        for i in 0..n {
            a[(i, i)] += 1.0;
            for j in 0..n {
                a[(i, j)] += h0.values()[i] * w[j];
            }
        }
        let lu = a.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let condition = one_norm(&a) * one_norm(&inv);
        if !(condition < MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        Ok(Resolvent { lu, matrix: a, h0: h0.values().to_vec(), weights: w, basis: op.basis.clone(), condition })
    }

    /// Solves `(I - L) f = q` with `∫f = 0`, requiring `|∫q| ≤ tol`.
    ///
    /// The component of `q` along `h₀` is removed first; its size is
    /// reported as `projected_mean`.
    pub fn solve_with_tolerance(&self, q: &DensityFunction, tol: f64) -> Result<ResolventSolution> {
        let mean = self.basis.integrate(q.values());
        if !(mean.abs() <= tol) {
            return Err(Error::Precondition(format!("right-hand side has integral {mean:e}, not zero")));
        }
        let rhs: Vec<f64> = q.values().iter().zip(&self.h0).map(|(a, b)| a - mean * b).collect();
        let x = self.lu.solve(&DVector::from_column_slice(&rhs)).ok_or(Error::IllConditioned { condition: f64::INFINITY })?;
        let mut f = x.as_slice().to_vec();
        let fm: f64 = self.weights.iter().zip(&f).map(|(a, b)| a * b).sum();
        f.iter_mut().zip(&self.h0).for_each(|(a, b)| *a -= fm * b);
        // residual of (I - L) f = q - mean·h0
        let n = f.len();
        let mut residual: f64 = 0.0;
        let fw: f64 = self.weights.iter().zip(&f).map(|(a, b)| a * b).sum();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.matrix[(i, j)] * f[j];
            }
            s -= self.h0[i] * fw;
            residual = residual.max((s - rhs[i]).abs());
        }
        Ok(ResolventSolution { f: DensityFunction::new(self.basis.clone(), f)?, residual, condition: self.condition, projected_mean: mean })
    }

    pub fn solve(&self, q: &DensityFunction) -> Result<ResolventSolution> {
        self.solve_with_tolerance(q, ZERO_MEAN_TOL)
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub f: DensityFunction,
    /// `‖(I - L) f - q‖_∞`.
    pub residual: f64,
    pub condition: f64,
    /// `∫q`, removed before solving.
    pub projected_mean: f64,
}

/// `(I - L)^{-1} q` on mean-zero functions.
pub fn resolvent_solve(op: &DiscretizedOperator, q: &DensityFunction) -> Result<ResolventSolution> {
    let st = stationary_density(op)?;
    Resolvent::new(op, &st.density)?.solve(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapTemplate;
    use crate::math::{cos, LN_2, PI};

    #[test]
    fn doubling_maps_constants_to_constants() {
        let sys = RandomSystem::deterministic(MapTemplate::ExpandingCircle, 0.0).unwrap();
        for b in [Basis::fourier(16).unwrap(), Basis::chebyshev(12).unwrap()] {
            let op = build_operator(&sys, 0.0, b.clone(), &OperatorOptions::default()).unwrap();
            let one = op.apply(&vec![1.0; b.len()]);
            assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-13));
            let st = stationary_density(&op).unwrap();
            assert!(st.density.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn gauss_density_matches_closed_form() {
        let sys = RandomSystem::deterministic(MapTemplate::Gauss, 0.0).unwrap();
        let b = Basis::chebyshev(40).unwrap();
        let opts = OperatorOptions { cutoff: 10_000, ..Default::default() };
        let op = build_operator(&sys, 0.0, b, &opts).unwrap();
        let st = stationary_density(&op).unwrap();
        let err = (0..=100).map(|i| i as f64 / 100.0).fold(0.0, |m: f64, x| m.max((st.density.eval(x) - 1.0 / ((1.0 + x) * LN_2)).abs()));
        assert!(err < 1e-8, "{err}");
        assert!((st.spectral.second_modulus - 0.3036630029).abs() < 1e-6, "{:?}", st.spectral);
    }

    #[test]
    fn resolvent_matches_neumann_series_for_doubling() {
        let sys = RandomSystem::deterministic(MapTemplate::ExpandingCircle, 0.0).unwrap();
        let b = Basis::fourier(32).unwrap();
        let op = build_operator(&sys, 0.0, b.clone(), &OperatorOptions::default()).unwrap();
        let q = DensityFunction::from_fn(b.clone(), |x| cos(2.0 * PI * x) + 0.3 * cos(8.0 * PI * x));
        let sol = resolvent_solve(&op, &q).unwrap();
        let mut term = q.values().to_vec();
        let mut sum = term.clone();
        for _ in 0..60 {
            term = op.apply(&term);
            sum.iter_mut().zip(&term).for_each(|(s, t)| *s += t);
        }
        let err = sum.iter().zip(sol.f.values()).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-10, "{err}");
        assert!(sol.residual < 1e-12);
        let zero = resolvent_solve(&op, &DensityFunction::zeros(b.clone())).unwrap();
        assert_eq!(zero.f.max_abs_nodal(), 0.0);
        let not_mean_zero = DensityFunction::from_fn(b, |_| 1.0);
        assert!(matches!(resolvent_solve(&op, &not_mean_zero), Err(Error::Precondition(_))));
    }

    #[test]
    fn ulam_doubling_is_uniform() {
        let sys = RandomSystem::deterministic(MapTemplate::ExpandingCircle, 0.0).unwrap();
        let op = ulam_operator(&sys, 0.0, 64, 4).unwrap();
        let st = stationary_density(&op).unwrap();
        assert!(st.density.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let OperatorMatrix::Sparse(s) = &op.matrix else { panic!() };
        assert!(s.column_sums().iter().all(|c| (c - 1.0).abs() < 1e-14));
    }
}
