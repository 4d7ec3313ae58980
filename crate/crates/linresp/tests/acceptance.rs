//! Acceptance suite. Every test prints one `PASS`/`FAIL` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` gives a
//! readable summary.

use std::time::Instant;

use linresp_core::distributions::{Interval, ParameterDistribution};
use linresp_core::function_space::Basis;
use linresp_core::inducing::{deterministic_induced, full_response, half_factor_check, InducedSystem, InducingOptions, DELTA_LO};
use linresp_core::maps::MapFamily;
use linresp_core::montecarlo::{bin_averages, bootstrap_l1, histogram_l1, sample_orbit, uniform, OrbitSpec, OrbitStats, Purpose};
use linresp_core::operator::{
    apply_pointwise, build_operator, stationary_density, ulam_operator, OperatorOptions, ACCEPTANCE_CUTOFF,
};
use linresp_core::poly::Poly;
use linresp_core::quadrature::composite_gl;
use linresp_core::response::{finite_difference_check, response, second_order_remainder};
use linresp_core::system::{composed_inverse_slope, RandomSystem};
use rayon::prelude::*;

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("[acceptance {n:>2}] {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance {n} ({name}) failed: {detail}");
}

fn opts(cutoff: usize) -> OperatorOptions {
    OperatorOptions { cutoff, ..Default::default() }
}

/// Deterministic pseudo-random coefficients in `[-1, 1)`.
fn coefficients(seed: u64, index: u64, count: usize) -> Vec<f64> {
    (0..count).map(|k| 2.0 * uniform(seed, index, k as u64, Purpose::Parameter) - 1.0).collect()
}

fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

fn deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

fn sup_on(c: &[f64], a: f64, b: f64) -> f64 {
    (0..=400).map(|i| eval(c, a + (b - a) * i as f64 / 400.0).abs()).fold(0.0, f64::max)
}

#[test]
fn gauss_density_fixture() {
    let t = Instant::now();
    let sys = RandomSystem::deterministic(linresp_core::maps::MapTemplate::Gauss, 0.0).unwrap();
    let op = build_operator(&sys, 0.0, Basis::chebyshev(40).unwrap(), &opts(ACCEPTANCE_CUTOFF)).unwrap();
    let h = stationary_density(&op).unwrap().density;
    let err = (0..=1000)
        .map(|i| i as f64 / 1000.0)
        .map(|x| (h.eval(x) - 1.0 / ((1.0 + x) * std::f64::consts::LN_2)).abs())
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    verdict(1, "Gauss density fixture", err <= 1e-6 && secs <= 30.0, format!("sup error {err:.2e} (<= 1e-6), {secs:.1} s (<= 30 s)"));
}

#[test]
fn duality_suite() {
    let cutoff = ACCEPTANCE_CUTOFF;
    let o = opts(cutoff);
    let mut worst = Vec::new();
    let mut pass = true;
    // (name, system, ε)
    let direct = [
        ("circle mixture", RandomSystem::circle_mixture(0.05).unwrap(), 0.5),
        ("Gauss-Renyi", RandomSystem::gauss_renyi(0.5).unwrap(), 0.0),
    ];
    for (name, sys, eps) in &direct {
        let tail = build_operator(sys, *eps, Basis::chebyshev(8).unwrap(), &o).unwrap().tail_bound;
        let mut excess: f64 = f64::NEG_INFINITY;
        for i in 0..20 {
            let c = coefficients(11, i, 7);
            let d1 = deriv(&c);
            let c2 = sup_on(&c, 0.0, 1.0) + sup_on(&d1, 0.0, 1.0) + sup_on(&deriv(&d1), 0.0, 1.0);
            let phi = |x: f64| eval(&c, x);
            let lhs = composite_gl(0.0, 1.0, 64, 16, |x| apply_pointwise(sys, *eps, &o, x, &phi).unwrap());
            let rhs = composite_gl(0.0, 1.0, 1, 8, phi);
            let gap = (lhs - rhs).abs() - (tail * c2 + 1e-9);
            excess = excess.max(gap);
        }
        pass &= excess <= 0.0;
        worst.push(format!("{name} worst |dual error| - bound = {excess:.2e}"));
    }
    let induced = [
        ("LSV tilted", RandomSystem::lsv_tilted(0.25, 0.45).unwrap(), 0.0),
        ("LSV uniform-to-Dirac", RandomSystem::lsv_uniform_to_dirac(0.25, 0.125).unwrap(), 0.05),
    ];
    for (name, sys, eps) in induced {
        let ind = InducedSystem::new(sys, InducingOptions { n_max: 40, ..Default::default() }).unwrap();
        let op = ind.assemble(eps).unwrap();
        let delta = ind.delta_basis().clone();
        let mut excess: f64 = f64::NEG_INFINITY;
        for i in 0..20 {
            let c = coefficients(12, i, 7);
            let f = linresp_core::function_space::DensityFunction::from_fn(delta.clone(), |x| eval(&c, x));
            let image = op.operator.apply_fn(&f).unwrap();
            let gap = (image.integrate() - f.integrate()).abs() - (op.tail_mass * sup_on(&c, DELTA_LO, 1.0) + 1e-9);
            excess = excess.max(gap);
        }
        pass &= excess <= 0.0;
        worst.push(format!("{name} (N_max 40, tail {:.1e}) worst excess {excess:.2e}", op.tail_mass));
    }
    verdict(2, "duality suite", pass, worst.join("; "));
}

fn fd_orders(name: &str, sys: &RandomSystem, basis: std::sync::Arc<Basis>, o: &OperatorOptions) -> (bool, String) {
    let r = response(sys, basis, o, &[]).unwrap();
    let eps = [1e-2, 5e-3, 2.5e-3];
    let rows: Vec<_> = eps.par_iter().map(|e| finite_difference_check(sys, &r.h_star_normalized, o, &[*e]).unwrap()[0]).collect();
    let orders: Vec<f64> = rows.windows(2).map(|w| (w[0].sup_error / w[1].sup_error).ln() / (w[0].epsilon / w[1].epsilon).ln()).collect();
    let last = rows.last().unwrap().sup_error;
    let pass = orders.iter().all(|o| *o >= 1.8) && last < 1e-4;
    (pass, format!("{name}: orders {:.3?}, error at 2.5e-3 {last:.2e}", orders))
}

#[test]
fn response_matches_finite_differences() {
    let t = Instant::now();
    let (p1, d1) = fd_orders("circle mixture", &RandomSystem::circle_mixture(0.05).unwrap(), Basis::fourier(64).unwrap(), &opts(10_000));
    let (p2, d2) = fd_orders("Gauss-Renyi", &RandomSystem::gauss_renyi(0.5).unwrap(), Basis::chebyshev(40).unwrap(), &opts(ACCEPTANCE_CUTOFF));
    let secs = t.elapsed().as_secs_f64();
    verdict(3, "response vs finite differences", p1 && p2 && secs <= 120.0, format!("{d1}; {d2}; {secs:.1} s"));
}

#[test]
fn gauss_renyi_expansion_remainder() {
    let sys = RandomSystem::gauss_renyi_perturbed().unwrap();
    let o = opts(ACCEPTANCE_CUTOFF);
    let r = response(&sys, Basis::chebyshev(40).unwrap(), &o, &[]).unwrap();
    let rem: Vec<f64> = [2e-2, 1e-2, 5e-3].par_iter().map(|e| second_order_remainder(&sys, &r, &o, &[*e]).unwrap()[0].1).collect();
    let spread = rem.iter().map(|v| (v / rem[0] - 1.0).abs()).fold(0.0, f64::max);
    verdict(4, "Gauss-Renyi expansion remainder", spread <= 0.3, format!("remainder/eps^2 = {rem:.4?}, spread {:.1}%", 100.0 * spread));
}

#[test]
fn deterministic_equivalence() {
    let o = InducingOptions::default();
    let ind = InducedSystem::new(RandomSystem::lsv_translate(0.3, 0.05).unwrap(), o).unwrap();
    let r = full_response(&ind).unwrap();
    let det = deterministic_induced(0.3, &o).unwrap();
    let grid = (0..=200).map(|i| DELTA_LO + (1.0 - DELTA_LO) * i as f64 / 200.0);
    let err = grid.map(|x| (r.h_star.eval(x) - det.h_star_at(x).unwrap()).abs()).fold(0.0, f64::max);
    verdict(5, "deterministic equivalence on Delta", err <= 1e-8, format!("sup |random - deterministic| = {err:.2e} (<= 1e-8)"));
}

#[test]
fn unfolded_density_is_invariant() {
    let t = Instant::now();
    let sys = RandomSystem::lsv_tilted(0.25, 0.45).unwrap();
    let ind = InducedSystem::new(sys.clone(), InducingOptions { n_max: 1200, lower: 1e-10, ..Default::default() }).unwrap();
    let op = ind.assemble(0.0).unwrap();
    let h_hat = stationary_density(&op.operator).unwrap().density;
    let h = op.unfold(&h_hat).unwrap();
    let o = OperatorOptions::default();
    let phi = |y: f64| h.eval(y);
    let res = (0..200)
        .into_par_iter()
        .map(|i| {
            let x = 0.1 + 0.9 * i as f64 / 199.0;
            (apply_pointwise(&sys, 0.0, &o, x, &phi).unwrap() - h.eval(x)).abs()
        })
        .reduce(|| 0.0, f64::max);
    let bound = op.tail_mass + 1e-7;
    verdict(
        6,
        "unfolded fixed point",
        res <= bound,
        format!("N_max 1200: residual {res:.2e} <= tail {:.2e} + 1e-7 ({:.1} s)", op.tail_mass, t.elapsed().as_secs_f64()),
    );
}

#[test]
fn half_factor() {
    let t = Instant::now();
    let h = half_factor_check(0.25, 0.125, 0.6, &InducingOptions { n_max: 40, ..Default::default() }).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = (0.45..=0.55).contains(&h.ratio) && secs <= 600.0;
    verdict(7, "half factor", pass, format!("H-norm ratio {:.6} (gamma 0.6), on Delta deviation {:.1e}, {secs:.1} s", h.ratio, h.delta_deviation));
}

fn mc_replicas(sys: &RandomSystem, eps: f64, bins: usize) -> Vec<OrbitStats> {
    (0..10u64)
        .into_par_iter()
        .map(|r| {
            sample_orbit(&OrbitSpec {
                system: sys.clone(),
                epsilon: eps,
                seed: 2024,
                replica: r,
                burn_in: 1_000,
                length: 1_000_000,
                bins,
                observables: Vec::new(),
            })
            .unwrap()
        })
        .collect()
}

#[test]
fn oracle_triangulation() {
    let cases = [
        ("circle mixture", RandomSystem::circle_mixture(0.05).unwrap(), 0.5, Basis::fourier(64).unwrap()),
        ("Gauss-Renyi", RandomSystem::gauss_renyi(0.5).unwrap(), 0.0, Basis::chebyshev(40).unwrap()),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, sys, eps, basis) in cases {
        let h = stationary_density(&build_operator(&sys, eps, basis, &opts(ACCEPTANCE_CUTOFF)).unwrap()).unwrap().density;
        let ulam = stationary_density(&ulam_operator(&sys, eps, 4096, 16).unwrap()).unwrap().density;
        let ulam_l1 = histogram_l1(ulam.values(), &bin_averages(&h, 4096));
        let bins = 100;
        let mc = bootstrap_l1(&mc_replicas(&sys, eps, bins), &bin_averages(&h, bins), 200, 7).unwrap();
        pass &= ulam_l1 <= 1e-2 && mc.within(3.0);
        detail.push(format!("{name}: Ulam L1 {ulam_l1:.2e} (<= 1e-2), MC L1 {:.2e} vs 3 x CI {:.2e}", mc.distance, 3.0 * mc.ci95));
    }
    verdict(8, "oracle triangulation", pass, detail.join("; "));
}

#[test]
fn hypothesis_checks() {
    let beta = MapFamily::expanding_circle(0.05).unwrap().check_expansion(1000).unwrap();
    let exact = 1.0 / (2.0 - 2.0 * std::f64::consts::PI * 0.05);
    let gg = composed_inverse_slope(MapFamily::Gauss, MapFamily::Gauss, 50, 100).unwrap();
    let pass = (beta - exact).abs() <= 1e-6 && gg <= 0.25;
    verdict(9, "hypothesis checks", pass, format!("beta {beta:.12} vs {exact:.12}; Gauss o Gauss max |g'| = {gg:.6} (<= 1/4)"));
}

#[test]
fn distribution_derivative_suite() {
    let unit = Interval::new(0.0, 1.0).unwrap();
    let families: Vec<(&str, ParameterDistribution, f64)> = vec![
        ("Dirac translate", ParameterDistribution::dirac_translate(0.3, unit).unwrap(), 0.0),
        (
            "Dirac mixture",
            ParameterDistribution::dirac_mixture(vec![0.2, 0.6], vec![Poly::linear(0.4, 2.0), Poly::linear(0.6, -2.0)], unit).unwrap(),
            0.01,
        ),
        ("smooth tilt", ParameterDistribution::linear_tilt(0.25, 0.45).unwrap(), 0.0),
        ("uniform-to-Dirac at 0", ParameterDistribution::uniform_to_dirac(0.25, unit).unwrap(), 0.0),
        ("uniform-to-Dirac at 0.05", ParameterDistribution::uniform_to_dirac(0.25, unit).unwrap(), 0.05),
    ];
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, d, eps) in &families {
        let mut worst = f64::INFINITY;
        for i in 0..20 {
            let c = coefficients(13, i, 4);
            let dc = deriv(&c);
            let r = d.fd_consistency(*eps, |u| eval(&c, u), |u| eval(&dc, u), &[1e-3, 5e-4], 16).unwrap();
            worst = worst.min(r.order);
        }
        pass &= worst >= 1.8;
        detail.push(format!("{name}: min order {worst:.3}"));
    }
    verdict(10, "distribution derivatives", pass, detail.join("; "));
}
