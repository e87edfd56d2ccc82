//! Randomized checks of the geometry kernel: metric projections, support
//! functions, Hausdorff certificates, and normal-bundle membership.

mod common;

use std::f64::consts::TAU;

use common::{body2, polygon};
use normal_cycles::body::ConvexBody;
use normal_cycles::hausdorff::hausdorff_distance;
use normal_cycles::measure::nor_membership;
use normal_cycles::smooth::sample_support_element;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent(body in body2(), x in prop::array::uniform2(-6.0..6.0f64)) {
        let p = body.project(x);
        prop_assert!(dist2(p, body.project(p)) <= 1e-10);
    }

    #[test]
    fn projection_contracts_distances(
        body in body2(),
        x in prop::array::uniform2(-6.0..6.0f64),
        y in prop::array::uniform2(-6.0..6.0f64),
    ) {
        let d = dist2(body.project(x), body.project(y));
        prop_assert!(d <= dist2(x, y) + 1e-10, "projected {d} original {}", dist2(x, y));
    }

    #[test]
    fn parallel_support_adds_the_radius(body in body2(), rho in 0.05..2.0f64, angle in 0.0..TAU) {
        let par = ConvexBody::parallel(body.clone(), rho).unwrap();
        let u = [angle.cos(), angle.sin()];
        let lhs = par.support(u);
        let rhs = body.support(u) + rho;
        // angle-built u is unit only to one ulp, hence the relative slack
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        for axis in [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]] {
            prop_assert_eq!(par.support(axis), body.support(axis) + rho);
        }
    }

    #[test]
    fn hausdorff_is_symmetric_and_triangular(a in polygon(), b in polygon(), c in polygon()) {
        let tol = 1e-6;
        let ab = hausdorff_distance(&a, &b, tol).unwrap();
        let ba = hausdorff_distance(&b, &a, tol).unwrap();
        prop_assert!(
            (ab.value - ba.value).abs() <= 2.0 * (ab.error_bound + ba.error_bound) + 1e-12,
            "{} vs {}", ab.value, ba.value
        );
        let ac = hausdorff_distance(&a, &c, tol).unwrap();
        let cb = hausdorff_distance(&c, &b, tol).unwrap();
        let slack = 3.0 * (ab.error_bound + ac.error_bound + cb.error_bound) + 1e-12;
        prop_assert!(
            ab.value <= ac.value + cb.value + slack,
            "{} > {} + {}", ab.value, ac.value, cb.value
        );
    }

    #[test]
    fn support_elements_lie_on_the_normal_bundle(body in body2(), seed in 0u64..(1u64 << 48)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..8 {
            let s = sample_support_element(&body, &mut rng);
            prop_assert!(nor_membership(&body, &s.x, &s.u, 1e-8), "({:?}, {:?})", s.x, s.u);
        }
    }
}
