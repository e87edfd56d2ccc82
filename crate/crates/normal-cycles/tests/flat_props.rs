//! Randomized checks of the bounded-Lipschitz solver: metric axioms, mass
//! bounds, certificate validity, and the coarsening contract.

mod common;

use common::{signed_measure, unsigned_measure};
use normal_cycles::flat::{coarsen, dbl_flow, DblInstance};
use normal_cycles::measure::DiscreteMeasure;
use proptest::prelude::*;

fn d(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    dbl_flow(&DblInstance::difference(a, b).unwrap()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unsigned_distance_is_a_metric(
        a in unsigned_measure(),
        b in unsigned_measure(),
        c in unsigned_measure(),
    ) {
        let ab = d(&a, &b);
        // canonical signs make the two orders bitwise equal
        prop_assert_eq!(ab, d(&b, &a));
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!(d(&a, &c) <= ab + d(&b, &c) + 1e-8);
    }

    #[test]
    fn distance_scales_linearly(
        a in unsigned_measure(),
        b in unsigned_measure(),
        c in 0.1..8.0f64,
    ) {
        let base = d(&a, &b);
        let scaled = d(&a.scale(c), &b.scale(c));
        prop_assert!((scaled - c * base).abs() <= 1e-10 * (1.0 + c * base), "{scaled} vs {c}*{base}");
    }

    #[test]
    fn distance_respects_mass_bounds(a in unsigned_measure(), b in unsigned_measure()) {
        let v = d(&a, &b);
        prop_assert!(v >= (a.total_mass() - b.total_mass()).abs() - 1e-9);
        prop_assert!(v <= a.total_mass() + b.total_mass() + 1e-9);
    }

    #[test]
    fn certificates_verify(a in signed_measure(), b in signed_measure()) {
        let cert = dbl_flow(&DblInstance::difference(&a, &b).unwrap()).unwrap();
        prop_assert!(
            cert.is_valid(1e-9),
            "max|f| {} pair violation {} residual {} gap {:?}",
            cert.max_abs_f, cert.max_pair_violation, cert.objective_residual, cert.duality_gap
        );
    }

    #[test]
    fn coarsening_bound_dominates_the_move(mu in signed_measure(), h in 0.01..0.3f64) {
        let (coarse, bound) = coarsen(&mu, h).unwrap();
        let moved = d(&mu, &coarse);
        prop_assert!(moved <= bound + 1e-9, "moved {moved} bound {bound}");
    }
}
