use linresp_core::distributions::{Interval, ParameterDistribution};
use linresp_core::function_space::{Basis, DensityFunction};
use linresp_core::maps::{MapFamily, MapTemplate};
use linresp_core::montecarlo::{uniform, Purpose};
use linresp_core::operator::{apply_pointwise, build_operator, stationary_density, OperatorOptions};
use linresp_core::poly::Poly;
use linresp_core::quadrature::composite_gl;
use linresp_core::system::RandomSystem;
use proptest::prelude::*;

fn poly(coeffs: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |x| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn dpoly(coeffs: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |x| coeffs.iter().enumerate().skip(1).rev().fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn inverse_branches_invert_forward(x in 0.001f64..0.999, n in 1usize..200, alpha in 0.05f64..0.95, lambda in -0.15f64..0.15) {
        let fams = [
            (MapFamily::Gauss, n),
            (MapFamily::Renyi, n),
            (MapFamily::lsv(alpha).unwrap(), n % 2),
            (MapFamily::expanding_circle(lambda).unwrap(), n % 2),
        ];
        for (f, idx) in fams {
            let y = f.inverse(idx, x).unwrap();
            let back = f.forward(y).unwrap();
            prop_assert!((back - x).abs() < 1e-9, "{f:?} branch {idx}: {back} vs {x}");
        }
    }

    #[test]
    fn annealed_operator_preserves_integrals(coeffs in prop::collection::vec(-1.0f64..1.0, 7), p in 0.1f64..0.9, lambda in 0.0f64..0.1) {
        let phi = poly(&coeffs);
        let exact = composite_gl(0.0, 1.0, 1, 8, &phi);
        let opts = OperatorOptions::default();
        for sys in [RandomSystem::gauss_renyi(p).unwrap(), RandomSystem::circle_mixture(lambda).unwrap()] {
            let mass = composite_gl(0.0, 1.0, 64, 16, |x| apply_pointwise(&sys, 0.0, &opts, x, &phi).unwrap());
            prop_assert!((mass - exact).abs() < 1e-9, "{mass} vs {exact}");
        }
    }

    #[test]
    fn distribution_derivatives_match_differences(coeffs in prop::collection::vec(-2.0f64..2.0, 4), a in 0.1f64..0.6, eps in -0.02f64..0.02) {
        let unit = Interval::new(0.0, 1.0).unwrap();
        let phi = poly(&coeffs);
        let dphi = dpoly(&coeffs);
        let families = [
            (ParameterDistribution::dirac_translate(a, unit).unwrap(), eps),
            (
                ParameterDistribution::dirac_mixture(vec![a, a + 0.2], vec![Poly::linear(0.5, 3.0), Poly::linear(0.5, -3.0)], unit).unwrap(),
                eps,
            ),
            (ParameterDistribution::linear_tilt(0.25, 0.45).unwrap(), eps),
            (ParameterDistribution::uniform_to_dirac(a, unit).unwrap(), eps.abs()),
        ];
        for (d, e) in families {
            let r = d.fd_consistency(e, &phi, &dphi, &[1e-3, 5e-4], 8).unwrap();
            prop_assert!(r.order >= 1.8 || r.errors.iter().all(|x| *x < 1e-10), "{d:?}: {r:?}");
        }
    }

    #[test]
    fn counter_rng_is_a_pure_function(seed in any::<u64>(), replica in 0u64..100, step in any::<u64>()) {
        let u = uniform(seed, replica, step, Purpose::Family);
        prop_assert!((0.0..1.0).contains(&u));
        prop_assert_eq!(u.to_bits(), uniform(seed, replica, step, Purpose::Family).to_bits());
        prop_assert_ne!(u.to_bits(), uniform(seed, replica, step, Purpose::Parameter).to_bits());
    }

    #[test]
    fn chebyshev_interpolation_reproduces_polynomials(coeffs in prop::collection::vec(-1.0f64..1.0, 10), x in 0.0f64..1.0) {
        let b = Basis::chebyshev(12).unwrap();
        let f = DensityFunction::from_fn(b, poly(&coeffs));
        prop_assert!((f.eval(x) - poly(&coeffs)(x)).abs() < 1e-12);
        let df = f.differentiate().unwrap();
        prop_assert!((df.eval(x) - dpoly(&coeffs)(x)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn stationary_density_is_normalized_and_invariant(lambda in 0.0f64..0.12, eps in 0.0f64..1.0) {
        let sys = RandomSystem::circle_mixture(lambda).unwrap();
        let op = build_operator(&sys, eps, Basis::fourier(48).unwrap(), &OperatorOptions::default()).unwrap();
        let st = stationary_density(&op).unwrap();
        prop_assert!((st.density.integrate() - 1.0).abs() < 1e-12);
        let image = op.apply(st.density.values());
        let drift = image.iter().zip(st.density.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(drift < 1e-9);
        prop_assert!(st.density.values().iter().all(|v| *v > 0.0));
    }
}

#[test]
fn expanding_circle_template_covers_parameter_range() {
    let (lo, hi) = MapTemplate::ExpandingCircle.parameter_range().unwrap();
    for u in [0.99 * lo, 0.0, 0.99 * hi] {
        let beta = MapTemplate::ExpandingCircle.at(u).unwrap().check_expansion(200).unwrap();
        assert!(beta < 1.0);
    }
}
