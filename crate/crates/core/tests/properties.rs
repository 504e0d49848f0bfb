use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use efw_core::concurrence::global_concurrence;
use efw_core::cumulant::CumulantState;
use efw_core::dynamics::{couplings, lindblad_rhs, DecayConvention};
use efw_core::field::moments;
use efw_core::geometry::{spherical_cloud, Direction};
use efw_core::oracle::random_separable;
use efw_core::qstate::{product_state, PureState, QuantumState};
use efw_core::witness::witness_report;
use proptest::prelude::*;

fn angles(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..PI, 0.0..2.0 * PI), n)
}

fn direction() -> impl Strategy<Value = Direction> {
    (0.0..PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(t, p, chi)| Direction::from_angles(t, p).with_chi(chi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separable_states_satisfy_every_bound(n in 2usize..=5, terms in 1usize..=4, seed: u64, dir in direction()) {
        let (_, rho) = random_separable(n, terms, seed).unwrap();
        let cfg = spherical_cloud(n, 1.5, seed, 0.05).unwrap();
        let r = witness_report(&moments(&rho, &cfg, &dir).unwrap());
        prop_assert!(r.w_min >= -1e-9, "{r:?}");
    }

    #[test]
    fn product_states_have_no_concurrence(a in angles(4)) {
        let psi = product_state(&a).unwrap();
        // square roots of near-zero eigenvalues amplify rounding to ~1e-8
        let c = global_concurrence(&psi).unwrap();
        prop_assert!(c < 1e-6, "{c}");
    }

    #[test]
    fn product_correlators_match_state(a in angles(3)) {
        let from_state = CumulantState::from_state(&product_state(&a).unwrap());
        let direct = CumulantState::from_product(&a).unwrap();
        prop_assert!(from_state.max_abs_diff(&direct) < 1e-12);
    }

    #[test]
    fn decay_matrix_is_positive(n in 2usize..=8, radius in 0.2f64..3.0, seed: u64) {
        let cfg = spherical_cloud(n, radius, seed, 0.05).unwrap();
        for conv in [DecayConvention::Standard, DecayConvention::Literal] {
            let c = couplings(&cfg, conv).unwrap();
            prop_assert!(c.min_gamma_eigenvalue() > -1e-10);
            let (d, g) = (c.delta(), c.gamma());
            prop_assert!((d - d.transpose()).amax() < 1e-12 && (g - g.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity(n in 2usize..=4, seed: u64) {
        let (_, rho) = random_separable(n, 3, seed).unwrap();
        let c = couplings(&spherical_cloud(n, 1.0, seed, 0.1).unwrap(), DecayConvention::Standard).unwrap();
        let d = lindblad_rhs(&rho, &c).unwrap();
        assert_abs_diff_eq!(d.trace().re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.trace().im, 0.0, epsilon = 1e-12);
        prop_assert!((&d - d.adjoint()).iter().all(|z| z.norm() < 1e-12));
    }
}

#[test]
fn ground_state_is_stationary_and_saturates() {
    let cfg = spherical_cloud(4, 1.0, 3, 0.1).unwrap();
    let g = PureState::ground(4).unwrap();
    let c = couplings(&cfg, DecayConvention::Standard).unwrap();
    let d = lindblad_rhs(&g.to_density(), &c).unwrap();
    assert!(d.iter().all(|z| z.norm() < 1e-14));
    let r = witness_report(&moments(&g, &cfg, &Direction::from_angles(0.4, 1.0)).unwrap());
    for (_, w) in r.values() {
        assert_abs_diff_eq!(w, 0.0, epsilon = 1e-12);
    }
}
