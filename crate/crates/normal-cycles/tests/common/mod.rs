//! Shared proptest strategies for the integration suites.
#![allow(dead_code)]

use std::f64::consts::TAU;

use normal_cycles::body::ConvexBody;
use normal_cycles::measure::DiscreteMeasure;
use proptest::prelude::*;

fn shoelace_area(b: &ConvexBody<2>) -> f64 {
    let Some(p) = b.as_polytope() else { return 0.0 };
    if !p.is_full_dimensional() {
        return 0.0;
    }
    let ring = p.ring2();
    let mut twice = 0.0;
    for i in 0..ring.n_vertices() {
        let (t, h, _, _) = ring.edge(i);
        twice += t[0] * h[1] - t[1] * h[0];
    }
    0.5 * twice.abs()
}

/// Full-dimensional hulls of small random point clouds, area >= 0.05 so
/// tolerance checks are not dominated by degeneracy.
pub fn polygon() -> impl Strategy<Value = ConvexBody<2>> {
    proptest::collection::vec(prop::array::uniform2(-2.0..2.0f64), 3..12).prop_filter_map(
        "degenerate hull",
        |pts| {
            let b = ConvexBody::polytope(&pts).ok()?;
            (shoelace_area(&b) >= 0.05).then_some(b)
        },
    )
}

/// Polygons, balls, and smoothed polygons in one strategy.
pub fn body2() -> impl Strategy<Value = ConvexBody<2>> {
    prop_oneof![
        polygon(),
        (polygon(), 0.05..1.0f64)
            .prop_map(|(b, rho)| ConvexBody::parallel(b, rho).unwrap()),
        (prop::array::uniform2(-1.0..1.0f64), 0.1..1.5f64)
            .prop_map(|(c, r)| ConvexBody::ball(c, r).unwrap()),
    ]
}

fn measure_from_atoms(atoms: Vec<([f64; 2], f64, f64)>, signed: bool) -> DiscreteMeasure {
    let mut m = DiscreteMeasure::new(signed);
    for (x, th, w) in atoms {
        m.push(x.to_vec(), vec![th.cos(), th.sin()], w);
    }
    m
}

/// Nonnegative atom lists on R^2 x S^1.
pub fn unsigned_measure() -> impl Strategy<Value = DiscreteMeasure> {
    proptest::collection::vec(
        (prop::array::uniform2(-1.5..1.5f64), 0.0..TAU, 0.05..1.0f64),
        1..10,
    )
    .prop_map(|atoms| measure_from_atoms(atoms, false))
}

/// Signed atom lists with weights bounded away from zero.
pub fn signed_measure() -> impl Strategy<Value = DiscreteMeasure> {
    proptest::collection::vec(
        (
            prop::array::uniform2(-1.5..1.5f64),
            0.0..TAU,
            prop_oneof![-1.0..-0.05f64, 0.05..1.0f64],
        ),
        1..10,
    )
    .prop_map(|atoms| measure_from_atoms(atoms, true))
}
