//! One function per CLI command. Each returns the report and tables; the
//! caller decides where they go.

use linresp_core::function_space::{h_norm_grid, DensityFunction};
use linresp_core::inducing::{check_gamma, full_response, half_factor_check, induced_fd_check, l1_norm, InducedSystem, InducedFdPoint, InducedResponse};
use linresp_core::montecarlo::{
    bin_averages, bootstrap_l1, combine_response_check, coupled_difference, histogram_l1, merge, sample_orbit, OrbitSpec, OrbitStats,
};
use linresp_core::operator::{build_operator, stationary_density, ulam_operator, Stationary};
use linresp_core::response::{finite_difference_check, response, second_order_remainder, FdPoint, Observable, ResponseReport};
use linresp_core::system::RandomSystem;
use linresp_core::{Error, Result};
use log::{debug, info};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{RunConfig, SystemConfig};
use crate::report::{num, spectral, Outcome, Table};

/// Band of ratios accepted by `pm-half-check`.
pub const HALF_BAND: (f64, f64) = (0.45, 0.55);

fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn uses_inducing(cfg: &RunConfig, sys: &RandomSystem) -> bool {
    cfg.inducing.enabled.unwrap_or_else(|| sys.is_lsv())
}

fn header(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(cfg.command));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("config".into(), serde_json::to_value(cfg).expect("config is serializable"));
    m
}

fn finish(cfg: &RunConfig, results: Value) -> Value {
    let mut m = header(cfg);
    m.insert("results".into(), results);
    Value::Object(m)
}

fn lsv_gamma(cfg: &RunConfig) -> Result<(f64, f64, f64)> {
    let (a0, a1) = cfg
        .system
        .as_ref()
        .and_then(SystemConfig::lsv_exponents)
        .ok_or_else(|| Error::Config("the induced pipeline needs one of the lsv system kinds".into()))?;
    Ok((a0, a1, cfg.inducing.gamma_for(a0)))
}

fn stationary_json(op_tail: f64, truncated: f64, st: &Stationary) -> Value {
    json!({
        "integral": num(st.density.integrate()),
        "min_nodal_value": num(st.density.values().iter().copied().fold(f64::INFINITY, f64::min)),
        "residual": num(st.residual),
        "tail_bound": num(op_tail),
        "truncated_mass": num(truncated),
        "spectral": spectral(&st.spectral),
        "warnings": st.warnings,
    })
}

pub fn check_hypotheses(cfg: &RunConfig) -> Result<Outcome> {
    let sys = cfg.system()?;
    let eps = cfg.solver.epsilon;
    let rep = sys.check_hypotheses(eps, cfg.solver.hypothesis_grid, cfg.solver.quad_order)?;
    let families: Vec<Value> = rep
        .families
        .iter()
        .map(|f| json!({ "map": f.template.name(), "max_inverse_slope": num(f.beta), "distortion": num(f.distortion) }))
        .collect();
    let mut violation = rep.violation.clone();
    let mut induced = Value::Null;
    if cfg.inducing.enabled == Some(true) && sys.is_lsv() {
        let (a0, a1, gamma) = lsv_gamma(cfg)?;
        let gamma_check = check_gamma(a0, a1, gamma).err().map(|e| e.to_string());
        let op = InducedSystem::new(sys.clone(), cfg.inducing.options())?.assemble(eps)?;
        induced = json!({
            "alpha0": a0,
            "alpha1": a1,
            "gamma": gamma,
            "gamma_violation": gamma_check,
            "tail_mass": num(op.tail_mass),
            "n_max": op.n_max(),
            "note": "the first-return system is uniformly expanding on [1/2, 1]; the raw verdict is superseded",
        });
        violation = gamma_check;
    }
    let results = json!({
        "epsilon": eps,
        "families": families,
        "averaged_contraction": num(rep.averaged_contraction),
        "gauss_second_iterate_slope": rep.second_iterate_gauss.map(num),
        "raw_violation": rep.violation,
        "induced": induced,
        "violation": violation,
    });
    let mut out = Outcome::new(finish(cfg, results));
    out.hypothesis_violation = violation;
    Ok(out)
}

fn induced(cfg: &RunConfig, sys: &RandomSystem) -> Result<InducedSystem> {
    InducedSystem::new(sys.clone(), cfg.inducing.options())
}

pub fn density(cfg: &RunConfig) -> Result<Outcome> {
    let sys = cfg.system()?;
    let eps = cfg.solver.epsilon;
    if uses_inducing(cfg, &sys) {
        let d = induced(cfg, &sys)?.density(eps)?;
        let mass = l1_norm(&d.h);
        let h = d.h.scale(1.0 / mass);
        let mut t = Table::new(&["x", "h"]);
        for x in h_norm_grid(cfg.solver.grid) {
            t.push(vec![x, h.eval(x)]);
        }
        let (a0, _, gamma) = lsv_gamma(cfg)?;
        let results = json!({
            "epsilon": eps,
            "induced": true,
            "alpha0": a0,
            "gamma": gamma,
            "h_norm": num(h.h_norm(gamma)),
            "unfolded_mass_before_normalization": num(mass),
            "tail_mass": num(d.tail_mass),
            "spectral": spectral(&d.spectral),
            "warnings": d.warnings,
        });
        return Ok(Outcome::new(finish(cfg, results)).table("density", t));
    }
    let basis = cfg.solver.basis(&sys)?;
    let opts = cfg.solver.operator_options();
    let op = build_operator(&sys, eps, basis.clone(), &opts)?;
    let st = stationary_density(&op)?;
    info!("density: lambda_1 = {}, gap = {}", st.spectral.eigenvalue_1, st.spectral.gap);
    let mut t = Table::new(&["x", "h"]);
    for x in uniform_grid(cfg.solver.grid) {
        t.push(vec![x, st.density.eval(x)]);
    }
    let mut results = json!({
        "epsilon": eps,
        "basis": basis.kind_name(),
        "nodes": basis.len(),
        "stationary": stationary_json(op.tail_bound, op.truncated_mass, &st),
    });
    let mut out_tables = vec![("density".to_string(), t)];
    if let Some(k) = cfg.solver.ulam_bins {
        let ul = stationary_density(&ulam_operator(&sys, eps, k, cfg.solver.quad_order)?)?;
        let reference = bin_averages(&st.density, k);
        let l1 = histogram_l1(ul.density.values(), &reference);
        let mut u = Table::new(&["bin_lo", "bin_hi", "ulam", "spectral"]);
        for (i, (a, b)) in ul.density.values().iter().zip(&reference).enumerate() {
            u.push(vec![i as f64 / k as f64, (i + 1) as f64 / k as f64, *a, *b]);
        }
        results["ulam"] = json!({ "bins": k, "l1_distance": num(l1), "spectral": spectral(&ul.spectral), "warnings": ul.warnings });
        out_tables.push(("ulam".into(), u));
    }
    let mut out = Outcome::new(finish(cfg, results));
    out.tables = out_tables;
    Ok(out)
}

fn response_json(r: &ResponseReport) -> Value {
    json!({
        "q_mean": num(r.q_mean),
        "h_star_mean": num(r.h_star_mean),
        "resolvent_residual": num(r.resolvent_residual),
        "condition": num(r.condition),
        "tail_bound": num(r.tail_bound),
        "spectral": spectral(&r.spectral),
        "observables": r.observables.iter().map(|o| json!({
            "name": o.name, "mean": num(o.mean), "derivative": num(o.derivative),
        })).collect::<Vec<_>>(),
        "warnings": r.warnings,
    })
}

fn induced_json(r: &InducedResponse, gamma: f64) -> Value {
    json!({
        "tail_mass": num(r.tail_mass),
        "tail_derivative": num(r.tail_derivative),
        "cylinder_tail": num(r.cylinder_tail),
        "q_hat_mean_removed": num(r.q_hat_mean),
        "resolvent_residual": num(r.resolvent_residual),
        "condition": num(r.condition),
        "spectral": spectral(&r.spectral),
        "gamma": gamma,
        "h_star_h_norm": num(r.h_star.h_norm(gamma)),
        "h_star_normalized_h_norm": num(r.h_star_normalized.h_norm(gamma)),
        "warnings": r.warnings,
    })
}

fn induced_table(r: &InducedResponse, n: usize) -> Table {
    let mass = l1_norm(&r.h);
    let mut t = Table::new(&["x", "h", "h_star", "h_star_normalized", "correction"]);
    for x in h_norm_grid(n) {
        t.push(vec![x, r.h.eval(x) / mass, r.h_star.eval(x), r.h_star_normalized.eval(x), r.correction.eval(x)]);
    }
    t
}

fn observable_means(cfg: &RunConfig, f: &DensityFunction) -> Result<Value> {
    Ok(Value::Array(
        cfg.solver.observables()?.iter().map(|o| json!({ "name": o.name, "derivative": num(f.integrate_against(o.func)) })).collect(),
    ))
}

pub fn response_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let sys = cfg.system()?;
    if uses_inducing(cfg, &sys) {
        return induced_response(cfg);
    }
    let basis = cfg.solver.basis(&sys)?;
    let opts = cfg.solver.operator_options();
    let r = response(&sys, basis.clone(), &opts, &cfg.solver.observables()?)?;
    let mut t = Table::new(&["x", "h0", "q", "h_star", "h_star_normalized"]);
    for x in uniform_grid(cfg.solver.grid) {
        t.push(vec![x, r.h0.eval(x), r.q.eval(x), r.h_star.eval(x), r.h_star_normalized.eval(x)]);
    }
    let results = json!({ "epsilon": 0.0, "basis": basis.kind_name(), "nodes": basis.len(), "response": response_json(&r) });
    Ok(Outcome::new(finish(cfg, results)).table("response", t))
}

pub fn induced_response(cfg: &RunConfig) -> Result<Outcome> {
    let sys = cfg.system()?;
    let (a0, a1, gamma) = lsv_gamma(cfg)?;
    check_gamma(a0, a1, gamma)?;
    let ind = induced(cfg, &sys)?;
    let r = full_response(&ind)?;
    let mut results = json!({
        "epsilon": 0.0,
        "alpha0": a0,
        "alpha1": a1,
        "response": induced_json(&r, gamma),
        "observables": observable_means(cfg, &r.h_star_normalized)?,
    });
    if !cfg.inducing.fd_epsilons.is_empty() {
        results["fd"] = induced_fd_json(&induced_fd(&ind, &r, &cfg.inducing.fd_epsilons, gamma)?);
    }
    Ok(Outcome::new(finish(cfg, results)).table("induced_response", induced_table(&r, cfg.solver.grid)))
}

fn with_orders<T>(mut rows: Vec<T>, get: impl Fn(&T) -> (f64, f64), set: impl Fn(&mut T, Option<f64>)) -> Vec<T> {
    for i in 0..rows.len() {
        let order = i.checked_sub(1).map(|j| {
            let ((e0, r0), (e1, r1)) = (get(&rows[j]), get(&rows[i]));
            (r0 / r1).ln() / (e0 / e1).ln()
        });
        set(&mut rows[i], order);
    }
    rows
}

fn induced_fd(ind: &InducedSystem, r: &InducedResponse, eps: &[f64], gamma: f64) -> Result<Vec<InducedFdPoint>> {
    let rows = eps
        .par_iter()
        .map(|e| induced_fd_check(ind, r, &[*e], gamma).map(|v| v[0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(with_orders(rows, |p| (p.epsilon, p.h_norm_error), |p, o| p.order = o))
}

fn induced_fd_json(rows: &[InducedFdPoint]) -> Value {
    Value::Array(
        rows.iter()
            .map(|p| json!({
                "epsilon": p.epsilon, "central": p.central, "h_norm_error": num(p.h_norm_error),
                "l1_error": p.l1_error.map(num), "order": p.order.map(num),
            }))
            .collect(),
    )
}

pub fn fd_check(cfg: &RunConfig) -> Result<Outcome> {
    let sys = cfg.system()?;
    let eps = &cfg.solver.fd_epsilons;
    if uses_inducing(cfg, &sys) {
        let (a0, a1, gamma) = lsv_gamma(cfg)?;
        check_gamma(a0, a1, gamma)?;
        let ind = induced(cfg, &sys)?;
        let r = full_response(&ind)?;
        let rows = induced_fd(&ind, &r, eps, gamma)?;
        let mut t = Table::new(&["epsilon", "central", "h_norm_error", "order"]);
        for p in &rows {
            t.push(vec![p.epsilon, p.central as u8 as f64, p.h_norm_error, p.order.unwrap_or(f64::NAN)]);
        }
        let results = json!({ "induced": true, "gamma": gamma, "rows": induced_fd_json(&rows), "tail_mass": num(r.tail_mass) });
        return Ok(Outcome::new(finish(cfg, results)).table("fd", t));
    }
    let basis = cfg.solver.basis(&sys)?;
    let opts = cfg.solver.operator_options();
    let r = response(&sys, basis, &opts, &cfg.solver.observables()?)?;
    let rows: Vec<FdPoint> = eps
        .par_iter()
        .map(|e| {
            debug!("fd-check: solving at epsilon = {e}");
            finite_difference_check(&sys, &r.h_star_normalized, &opts, &[*e]).map(|v| v[0])
        })
        .collect::<Result<_>>()?;
    let rows = with_orders(rows, |p| (p.epsilon, p.sup_error), |p, o| p.order = o);
    let mut t = Table::new(&["epsilon", "central", "sup_error", "c1_error", "order"]);
    for p in &rows {
        t.push(vec![p.epsilon, p.central as u8 as f64, p.sup_error, p.c1_error, p.order.unwrap_or(f64::NAN)]);
    }
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|p| json!({
            "epsilon": p.epsilon, "central": p.central, "sup_error": num(p.sup_error),
            "c1_error": num(p.c1_error), "order": p.order.map(num),
        }))
        .collect();
    let min_order = rows.iter().filter_map(|p| p.order).fold(f64::INFINITY, f64::min);
    let results = json!({ "rows": json_rows, "min_order": num(min_order), "response": response_json(&r) });
    Ok(Outcome::new(finish(cfg, results)).table("fd", t))
}

fn orbit_spec(cfg: &RunConfig, sys: &RandomSystem, replica: usize, obs: Observable) -> OrbitSpec {
    OrbitSpec {
        system: sys.clone(),
        epsilon: cfg.solver.epsilon,
        seed: cfg.mc.seed,
        replica: replica as u64,
        burn_in: cfg.mc.burn_in,
        length: cfg.mc.length,
        bins: cfg.mc.bins,
        observables: vec![obs],
    }
}

pub fn mc(cfg: &RunConfig) -> Result<Outcome> {
    let sys = cfg.system()?;
    let obs = Observable::by_name(&cfg.mc.observable)?;
    let m = &cfg.mc;
    let stats: Vec<OrbitStats> =
        (0..m.replicas).into_par_iter().map(|r| sample_orbit(&orbit_spec(cfg, &sys, r, obs))).collect::<Result<_>>()?;
    let pooled = merge(&stats)?;
    let hist = pooled.histogram();
    let spectral_density = if uses_inducing(cfg, &sys) {
        None
    } else {
        let op = build_operator(&sys, cfg.solver.epsilon, cfg.solver.basis(&sys)?, &cfg.solver.operator_options())?;
        Some(stationary_density(&op)?.density)
    };
    let mut t = Table::new(&["bin_lo", "bin_hi", "mc", "spectral"]);
    let reference = spectral_density.as_ref().map(|h| bin_averages(h, m.bins));
    for (i, v) in hist.iter().enumerate() {
        let r = reference.as_ref().map_or(f64::NAN, |r| r[i]);
        t.push(vec![i as f64 / m.bins as f64, (i + 1) as f64 / m.bins as f64, *v, r]);
    }
    let mut results = json!({
        "epsilon": cfg.solver.epsilon,
        "samples": pooled.samples,
        "observable": { "name": obs.name, "mean": num(pooled.means[0]), "std_error": num(pooled.std_errors[0]) },
    });
    if let (Some(h), Some(r)) = (&spectral_density, &reference) {
        let b = bootstrap_l1(&stats, r, m.bootstrap, m.seed)?;
        results["stationarity"] = json!({
            "l1_distance": num(b.distance),
            "bootstrap_ci95": num(b.ci95),
            "within_3_ci": b.within(3.0),
        });
        results["observable"]["spectral_mean"] = num(h.integrate_against(obs.func));
    }
    if let (Some(de), false) = (m.response_epsilon, sys.is_epsilon_independent() || spectral_density.is_none()) {
        results["response_check"] = mc_response(cfg, &sys, obs, de)?;
    }
    Ok(Outcome::new(finish(cfg, results)).table("histogram", t))
}

fn mc_response(cfg: &RunConfig, sys: &RandomSystem, obs: Observable, de: f64) -> Result<Value> {
    if cfg.solver.epsilon != 0.0 {
        return Err(Error::Config("the Monte-Carlo response check is taken at epsilon = 0".into()));
    }
    let m = &cfg.mc;
    let opts = cfg.solver.operator_options();
    let basis = cfg.solver.basis(sys)?;
    let prediction = response(sys, basis.clone(), &opts, &[obs])?.observables[0].derivative;
    let central = sys.admits(-de) && sys.is_probability(-de);
    let (ep, em) = if central { (de, -de) } else { (de, 0.0) };
    let pairs: Vec<(f64, f64)> = (0..m.replicas)
        .into_par_iter()
        .map(|r| coupled_difference(sys, &obs, ep, em, m.seed, r as u64, m.burn_in, m.length))
        .collect::<Result<_>>()?;
    let mean_at = |e: f64| -> Result<f64> {
        Ok(stationary_density(&build_operator(sys, e, basis.clone(), &opts)?)?.density.integrate_against(obs.func))
    };
    let spectral_fd = (mean_at(ep)? - mean_at(em)?) / (ep - em);
    let c = combine_response_check(de, central, &pairs, prediction, spectral_fd);
    Ok(json!({
        "epsilon": c.epsilon,
        "central": c.central,
        "fd_estimate": num(c.fd_estimate),
        "std_error": num(c.std_error),
        "prediction": num(c.prediction),
        "bias_budget": num(c.bias),
        "z_score": num(c.z_score),
        "within_3_sigma": c.z_score.abs() <= 3.0,
    }))
}

pub fn gauss_renyi_expansion(cfg: &RunConfig) -> Result<Outcome> {
    let sys = match &cfg.system {
        Some(s) => s.build()?,
        None => RandomSystem::gauss_renyi_perturbed()?,
    };
    let basis = cfg.solver.basis(&sys)?;
    let opts = cfg.solver.operator_options();
    let r = response(&sys, basis, &opts, &cfg.solver.observables()?)?;
    let rem: Vec<(f64, f64)> = cfg
        .solver
        .expansion_epsilons
        .par_iter()
        .map(|e| second_order_remainder(&sys, &r, &opts, &[*e]).map(|v| v[0]))
        .collect::<Result<_>>()?;
    let base = rem.first().map_or(f64::NAN, |p| p.1);
    let spread = rem.iter().map(|p| (p.1 / base - 1.0).abs()).fold(0.0, f64::max);
    let gauss = |x: f64| 1.0 / ((1.0 + x) * std::f64::consts::LN_2);
    let grid = uniform_grid(cfg.solver.grid);
    let gauss_error = grid.iter().map(|&x| (r.h0.eval(x) - gauss(x)).abs()).fold(0.0, f64::max);
    let mut t = Table::new(&["x", "h0", "gauss_density", "h_star"]);
    for &x in &grid {
        t.push(vec![x, r.h0.eval(x), gauss(x), r.h_star_normalized.eval(x)]);
    }
    let results = json!({
        "h0_vs_gauss_sup_error": num(gauss_error),
        "remainders": rem.iter().map(|(e, v)| json!({ "epsilon": e, "remainder_over_eps2": num(*v) })).collect::<Vec<_>>(),
        "max_relative_spread": num(spread),
        "response": response_json(&r),
    });
    Ok(Outcome::new(finish(cfg, results)).table("gauss_renyi_expansion", t))
}

pub fn pm_half_check(cfg: &RunConfig) -> Result<Outcome> {
    let i = &cfg.inducing;
    let gamma = i.gamma_for(i.alpha0);
    let h = half_factor_check(i.alpha0, i.width, gamma, &i.options())?;
    let results = json!({
        "alpha0": h.alpha0,
        "width": i.width,
        "gamma": h.gamma,
        "h_norm_uniform": num(h.h_norm_uniform),
        "h_norm_deterministic": num(h.h_norm_deterministic),
        "ratio": num(h.ratio),
        "in_band": h.ratio >= HALF_BAND.0 && h.ratio <= HALF_BAND.1,
        "delta_deviation": num(h.delta_deviation),
        "tail_mass": num(h.tail_mass),
    });
    let mut t = Table::new(&["alpha0", "gamma", "h_norm_uniform", "h_norm_deterministic", "ratio"]);
    t.push(vec![h.alpha0, h.gamma, h.h_norm_uniform, h.h_norm_deterministic, h.ratio]);
    Ok(Outcome::new(finish(cfg, results)).table("pm_half_check", t))
}

/// Report written when a command fails after its configuration was accepted.
pub fn failure_report(cfg: &RunConfig, err: &Error) -> Value {
    let mut m = header(cfg);
    m.insert("error".into(), json!({ "class": format!("{:?}", err.class()), "message": err.to_string() }));
    Value::Object(m)
}
