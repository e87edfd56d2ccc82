//! Convex bodies in dimensions 2 and 3, their normal cycles, support
//! measures, and metrics between them.
//!
//! The crate is organised around three layers:
//!
//! * geometry of convex bodies: support functions, metric projections,
//!   certified Hausdorff distances, and the boundary maps between nearby
//!   smooth bodies ([`body`], [`hausdorff`], [`smooth`]);
//! * measures: exact face-decomposition support measures of polytopes,
//!   Monte Carlo local parallel measures with Vandermonde extraction, and
//!   the bounded-Lipschitz distance between discrete measures with dual
//!   LP/flow solvers ([`face_measures`], [`shell`], [`flat`]);
//! * currents: the normal bundle as an oriented patchwork, integration of
//!   differential forms over it, and continuity probes ([`cycle`],
//!   [`forms`], [`exterior`]);
//!
//! plus an experiment harness ([`sweep`]) that generates body pairs at
//! prescribed Hausdorff distances and records how the measure distances and
//! curve integrals scale.

pub mod body;
pub mod error;
pub mod exterior;
pub mod face_measures;
pub mod flat;
pub mod forms;
pub mod hausdorff;
pub mod hull2;
pub mod hull3;
pub mod measure;
pub mod poly;
pub mod shell;
pub mod smooth;
pub mod vecn;

pub mod cycle;

pub use error::Error;

/// Volume of the unit ball in dimension `n` (supported: 1, 2, 3).
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unit_ball_volume: unsupported dimension {n}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes_match_closed_forms() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert_eq!(unit_ball_volume(2), std::f64::consts::PI);
        assert_eq!(unit_ball_volume(3), 4.0 * std::f64::consts::PI / 3.0);
    }
}
