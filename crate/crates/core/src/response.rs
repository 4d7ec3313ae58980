//! Linear response of the stationary density.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::function_space::{Basis, DensityFunction};
use crate::maps::{MapFamily, MapTemplate};
use crate::math::{cos, ln, PI};
use crate::operator::{
    accumulate_row, build_operator, stationary_density, tail_rule, DiscretizedOperator, OperatorOptions, Resolvent,
    ZERO_MEAN_TOL,
};
use crate::spectral::SpectralReport;
use crate::system::RandomSystem;

/// A named scalar observable `φ`.
#[derive(Debug, Clone, Copy)]
pub struct Observable {
    pub name: &'static str,
    pub func: fn(f64) -> f64,
}

impl Observable {
    pub fn identity() -> Self {
        Observable { name: "x", func: |x| x }
    }

    pub fn square() -> Self {
        Observable { name: "x^2", func: |x| x * x }
    }

    pub fn cos_2pi() -> Self {
        Observable { name: "cos(2 pi x)", func: |x| cos(2.0 * PI * x) }
    }

    /// Looks up a built-in observable by name.
    pub fn by_name(name: &str) -> Result<Self> {
        [Self::identity(), Self::square(), Self::cos_2pi()]
            .into_iter()
            .find(|o| o.name == name)
            .ok_or_else(|| Error::Config(format!("unknown observable `{name}` (expected x, x^2 or cos(2 pi x))")))
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::identity(), Self::square(), Self::cos_2pi()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableResponse {
    pub name: String,
    /// `∫φ h₀`
    pub mean: f64,
    /// `∫φ h*_normalized`
    pub derivative: f64,
}

/// One row of a finite-difference validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdPoint {
    pub epsilon: f64,
    pub central: bool,
    pub sup_error: f64,
    pub c1_error: f64,
    /// Empirical order against the previous row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseReport {
    pub h0: DensityFunction,
    pub q: DensityFunction,
    pub h_star: DensityFunction,
    pub h_star_normalized: DensityFunction,
    pub q_mean: f64,
    pub h_star_mean: f64,
    pub resolvent_residual: f64,
    pub condition: f64,
    pub spectral: SpectralReport,
    pub tail_bound: f64,
    pub observables: Vec<ObservableResponse>,
    pub fd_estimates: Vec<FdPoint>,
    pub warnings: Vec<String>,
}

/// Terms `(T_u, coefficient on L_u, coefficient on ∂_u L_u)` whose sum is
/// `∂_ε L_{P_ε}`.
pub(crate) fn derivative_terms(system: &RandomSystem, eps: f64, order: usize) -> Result<Vec<(MapFamily, f64, f64)>> {
    let mut terms: Vec<(MapFamily, f64, f64)> = Vec::new();
    for ((c, pi), dpi) in system.components().iter().zip(system.weights(eps)).zip(system.weight_derivatives(eps)) {
        if dpi != 0.0 {
            for a in c.distribution.measure(eps)?.rule(order) {
                terms.push((c.template.at(a.location)?, dpi * a.weight, 0.0));
            }
        }
        if pi == 0.0 {
            continue;
        }
        let nu = c.distribution.derivative_measure(eps)?;
        for a in nu.location.rule(order) {
            terms.push((c.template.at(a.location)?, 0.0, pi * a.weight));
        }
        for a in &nu.value {
            terms.push((c.template.at(a.location)?, pi * a.weight, 0.0));
        }
    }
    Ok(terms)
}

/// Matrix of `ε ↦ ∂_ε L_{P_ε}` at `ε`, acting on nodal values.
///
/// Each component contributes `π_k' ∫L_u dη + π_k(⟨ν, ∂_u L_u⟩ + Σ c_i L_{u_i})`
/// where `∂_u L_u Φ = Σ_z Φ'∘g·∂_u g·|g'| + Φ∘g·∂_u|g'|`.
pub fn derivative_matrix(system: &RandomSystem, eps: f64, basis: &Arc<Basis>, opts: &OperatorOptions) -> Result<DMatrix<f64>> {
    system.check_epsilon(eps)?;
    let n = basis.len();
    let rule = tail_rule();
    let terms = derivative_terms(system, eps, opts.quad_order)?;
    let mut m = DMatrix::zeros(n, n);
    let mut row = vec![0.0; n];
    let (mut buf, mut dbuf) = (Vec::new(), Vec::new());
    for (i, &x) in basis.nodes().iter().enumerate() {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (fam, c_val, c_der) in &terms {
            if *c_val != 0.0 {
                accumulate_row(fam, x, *c_val, basis, opts, &rule, &mut buf, &mut row)?;
            }
            if *c_der != 0.0 {
                let mut err = None;
                fam.for_each_preimage(x, opts.cutoff, true, |p| {
                    let s = basis.cardinal(p.y, &mut buf);
                    for (k, l) in buf.iter().enumerate() {
                        row[s + k] += c_der * l * p.dweight_du;
                    }
                    match basis.cardinal_derivative(p.y, &mut dbuf) {
                        Ok(s) => {
                            for (k, l) in dbuf.iter().enumerate() {
                                row[s + k] += c_der * l * p.dy_du * p.weight;
                            }
                        }
                        Err(e) => err = Some(e),
                    }
                })?;
                if let Some(e) = err {
                    return Err(e);
                }
            }
        }
        for j in 0..n {
            m[(i, j)] = row[j];
        }
    }
    Ok(m)
}

/// `q = ∂_ε L_{P_ε} h₀ |_{ε=0}`.
pub fn derivative_operator_apply(system: &RandomSystem, h0: &DensityFunction, opts: &OperatorOptions) -> Result<DensityFunction> {
    let d = derivative_matrix(system, 0.0, h0.basis(), opts)?;
    let q = d * DVector::from_column_slice(h0.values());
    DensityFunction::new(h0.basis().clone(), q.as_slice().to_vec())
}

/// `h* - h₀ ∫h*`.
pub fn normalized_response(h0: &DensityFunction, h_star: &DensityFunction) -> Result<DensityFunction> {
    h_star.axpy(-h_star.integrate(), h0)
}

fn observables_of(h0: &DensityFunction, hn: &DensityFunction, obs: &[Observable]) -> Vec<ObservableResponse> {
    obs.iter()
        .map(|o| ObservableResponse {
            name: o.name.into(),
            mean: h0.integrate_against(o.func),
            derivative: hn.integrate_against(o.func),
        })
        .collect()
}

/// Response from an operator at ε = 0 and a right-hand side.
pub(crate) fn response_from_parts(
    op: &DiscretizedOperator,
    q_of: impl FnOnce(&DensityFunction) -> Result<DensityFunction>,
    observables: &[Observable],
) -> Result<ResponseReport> {
    let st = stationary_density(op)?;
    let h0 = st.density;
    let q = q_of(&h0)?;
    let resolvent = Resolvent::new(op, &h0)?;
    let q_tol = ZERO_MEAN_TOL + op.tail_bound * h0.max_abs_nodal();
    let sol = resolvent.solve_with_tolerance(&q, q_tol)?;
    let h_star = sol.f;
    let hn = normalized_response(&h0, &h_star)?;
    let mut warnings = st.warnings;
    if sol.projected_mean.abs() > ZERO_MEAN_TOL {
        warnings.push(format!("removed mean {:e} of q attributable to branch truncation", sol.projected_mean));
    }
    Ok(ResponseReport {
        observables: observables_of(&h0, &hn, observables),
        q_mean: q.integrate(),
        h_star_mean: h_star.integrate(),
        resolvent_residual: sol.residual,
        condition: sol.condition,
        spectral: st.spectral,
        tail_bound: op.tail_bound,
        h0,
        q,
        h_star,
        h_star_normalized: hn,
        fd_estimates: Vec::new(),
        warnings,
    })
}

/// `h* = (I - L₀)^{-1} q` with all diagnostics.
pub fn response(system: &RandomSystem, basis: Arc<Basis>, opts: &OperatorOptions, observables: &[Observable]) -> Result<ResponseReport> {
    let op = build_operator(system, 0.0, basis, opts)?;
    response_from_parts(&op, |h0| derivative_operator_apply(system, h0, opts), observables)
}

/// `(I - L_u)^{-1} L_u[A¹ h_u' + A² h_u]` for a single parametrized map,
/// evaluated through forward derivatives of `T_u`.
pub fn deterministic_response(template: MapTemplate, u: f64, basis: Arc<Basis>, opts: &OperatorOptions) -> Result<ResponseReport> {
    if !template.is_parametric() {
        return Err(Error::Config(format!("{} has no parameter to differentiate", template.name())));
    }
    let fam = template.at(u)?;
    let Some(branches) = fam.branch_count() else {
        return Err(Error::Unsupported("forward-jet response needs finitely many branches".into()));
    };
    let system = RandomSystem::deterministic(template, u)?;
    let op = build_operator(&system, 0.0, basis.clone(), opts)?;
    let rhs = |h0: &DensityFunction| -> Result<DensityFunction> {
        let dh = h0.differentiate()?;
        let mut q = vec![0.0; basis.len()];
        for (i, &x) in basis.nodes().iter().enumerate() {
            for index in 0..branches {
                let y = fam.inverse(index, x)?;
                let t = fam.forward_jet(y);
                let a1 = -t.du / t.d1;
                let a2 = t.du * t.d2 / (t.d1 * t.d1) - t.du_d1 / t.d1;
                q[i] += (a1 * dh.eval(y) + a2 * h0.eval(y)) / t.d1.abs();
            }
        }
        DensityFunction::new(basis.clone(), q)
    };
    response_from_parts(&op, rhs, &[])
}

/// Distance of finite differences of the stationary density to `h*`.
///
/// Uses `(h_ε - h_{-ε})/(2ε)` when `-ε` is admissible and the one-sided
/// quotient otherwise.
pub fn finite_difference_check(
    system: &RandomSystem,
    h_star: &DensityFunction,
    opts: &OperatorOptions,
    eps_list: &[f64],
) -> Result<Vec<FdPoint>> {
    let basis = h_star.basis().clone();
    let solve = |e: f64| -> Result<DensityFunction> { Ok(stationary_density(&build_operator(system, e, basis.clone(), opts)?)?.density) };
    let mut h0 = None;
    let mut out: Vec<FdPoint> = Vec::new();
    for &e in eps_list {
        if !(e > 0.0) {
            return Err(Error::Config(format!("finite-difference step must be positive, got {e}")));
        }
        let central = system.admits(-e);
        let fd = if central {
            solve(e)?.sub(&solve(-e)?)?.scale(0.5 / e)
        } else {
            if h0.is_none() {
                h0 = Some(solve(0.0)?);
            }
            solve(e)?.sub(h0.as_ref().unwrap())?.scale(1.0 / e)
        };
        let diff = fd.sub(h_star)?;
        let sup_error = diff.sup_norm(1000);
        let c1_error = sup_error + diff.differentiate()?.sup_norm(1000);
        let order = out.last().map(|p| ln(p.sup_error / sup_error) / ln(p.epsilon / e));
        out.push(FdPoint { epsilon: e, central, sup_error, c1_error, order });
    }
    Ok(out)
}

/// `‖h_ε - h₀ - ε h*‖_∞ / ε²` for each ε.
pub fn second_order_remainder(
    system: &RandomSystem,
    report: &ResponseReport,
    opts: &OperatorOptions,
    eps_list: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let basis = report.h0.basis().clone();
    eps_list
        .iter()
        .map(|&e| {
            let he = stationary_density(&build_operator(system, e, basis.clone(), opts)?)?.density;
            let r = he.sub(&report.h0)?.axpy(-e, &report.h_star_normalized)?;
            Ok((e, r.sup_norm(1000) / (e * e)))
        })
        .collect()
}
