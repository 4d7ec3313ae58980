use linresp_core::inducing::{l1_norm, InducedSystem, InducingOptions};
use linresp_core::montecarlo::bin_averages;
use linresp_core::operator::{stationary_density, ulam_operator};
use linresp_core::system::RandomSystem;

#[test]
fn unfolded_density_matches_ulam_away_from_zero() {
    let sys = RandomSystem::lsv_tilted(0.25, 0.45).unwrap();
    let d = InducedSystem::new(sys.clone(), InducingOptions::default()).unwrap().density(0.0).unwrap();
    let h = d.h.scale(1.0 / l1_norm(&d.h));
    let k = 4096;
    let ulam = stationary_density(&ulam_operator(&sys, 0.0, k, 16).unwrap()).unwrap().density;
    let reference = bin_averages(&h, k);
    let first = (0.05 * k as f64) as usize;
    let l1: f64 = ulam.values()[first..].iter().zip(&reference[first..]).map(|(a, b)| (a - b).abs()).sum::<f64>() / k as f64;
    assert!(l1 <= 2e-2, "{l1}");
    println!("L1 over [0.05, 1]: {l1:e}");
}

#[test]
fn unfolding_is_linear() {
    let ind = InducedSystem::new(RandomSystem::lsv_tilted(0.25, 0.45).unwrap(), InducingOptions::default()).unwrap();
    let op = ind.assemble(0.0).unwrap();
    let delta = ind.delta_basis().clone();
    let f = linresp_core::function_space::DensityFunction::from_fn(delta.clone(), |x| x * x);
    let g = linresp_core::function_space::DensityFunction::from_fn(delta, |x| 1.0 - x);
    let lhs = op.unfold(&f.scale(2.0).axpy(-3.0, &g).unwrap()).unwrap();
    let rhs = op.unfold(&f).unwrap().scale(2.0).axpy(-3.0, &op.unfold(&g).unwrap()).unwrap();
    let scale = lhs.max_abs_nodal();
    assert!(lhs.sub(&rhs).unwrap().max_abs_nodal() <= 1e-13 * scale);
}
