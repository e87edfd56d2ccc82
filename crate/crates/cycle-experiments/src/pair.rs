//! Body-pair generators for the sweep scenarios. Each generator returns
//! a pair at a prescribed Hausdorff distance: translations and the
//! ball-vs-polygon family hit it in closed form, rotations and vertex
//! perturbations solve for the magnitude by bisection on the measured
//! distance.

use anyhow::{anyhow, bail, Context, Result};
use normal_cycles::body::{regular_polygon, ConvexBody, Poly2};
use normal_cycles::hausdorff::hausdorff_distance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Translate,
    Rotate,
    VertexPerturb,
    BallVsPolygon,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Scenario::Translate => "translate",
            Scenario::Rotate => "rotate",
            Scenario::VertexPerturb => "vertex-perturb",
            Scenario::BallVsPolygon => "ball-vs-polygon",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub k: ConvexBody<2>,
    pub l: ConvexBody<2>,
    /// measured (or closed-form) Hausdorff distance
    pub d_h: f64,
    /// certified error bar on d_h; zero when exact
    pub d_h_bound: f64,
    /// solved magnitude: shift length, rotation angle, perturbation
    /// radius, or the polygon vertex count
    pub magnitude: f64,
}

/// Accept measured d_H inside this window relative to the target; it
/// sits strictly inside the contractual [delta/2, 2 delta].
const WINDOW: (f64, f64) = (0.6, 1.8);

/// Bisection budget before giving up and reporting the bracket.
const MAX_BISECT: usize = 200;

pub fn generate_pair(
    scenario: Scenario,
    base: Option<&ConvexBody<2>>,
    delta: f64,
    seed: u64,
) -> Result<GeneratedPair> {
    if !(delta > 0.0 && delta.is_finite()) {
        bail!("pair target distance must be positive, got {delta}");
    }
    match scenario {
        Scenario::Translate => {
            let k = required(base, scenario)?.clone();
            // d_H(K, K + t) = sup_u |<t, u>| = |t|, exactly
            let l = k.translate([delta, 0.0]);
            Ok(GeneratedPair {
                k,
                l,
                d_h: delta,
                d_h_bound: 0.0,
                magnitude: delta,
            })
        }
        Scenario::Rotate => {
            let k = required(base, scenario)?.clone();
            let (lo, hi) = k.bounding_box();
            let about = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
            let make = |angle: f64| k.rotate(angle, about);
            solve_magnitude(&k, delta, PI, &make).map(|(l, d_h, d_h_bound, magnitude)| {
                GeneratedPair { k, l, d_h, d_h_bound, magnitude }
            })
        }
        Scenario::VertexPerturb => {
            let k = required(base, scenario)?.clone();
            let verts: Vec<[f64; 2]> = match &k {
                ConvexBody::Polytope(p) => match p.ring2() {
                    Poly2::Polygon(v) => v.clone(),
                    _ => bail!("vertex perturbation needs a full-dimensional polygon"),
                },
                _ => bail!("vertex perturbation needs a polytope base body"),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let offsets: Vec<[f64; 2]> = verts
                .iter()
                .map(|_| {
                    let angle = rng.gen_range(0.0..TAU);
                    let r = rng.gen_range(0.5..1.0);
                    [r * angle.cos(), r * angle.sin()]
                })
                .collect();
            let make = |r: f64| -> ConvexBody<2> {
                let pts: Vec<[f64; 2]> = verts
                    .iter()
                    .zip(&offsets)
                    .map(|(v, o)| [v[0] + r * o[0], v[1] + r * o[1]])
                    .collect();
                ConvexBody::polytope(&pts).expect("perturbed polygon stays full-dimensional")
            };
            let cap = 10.0 * (1.0 + k.circumradius());
            solve_magnitude(&k, delta, cap, &make).map(|(l, d_h, d_h_bound, magnitude)| {
                GeneratedPair { k, l, d_h, d_h_bound, magnitude }
            })
        }
        Scenario::BallVsPolygon => {
            let m = (PI / (1.0 - delta).clamp(-1.0, 1.0).acos()).round().max(3.0) as usize;
            let k = ConvexBody::ball([0.0, 0.0], 1.0)?;
            let l = regular_polygon(m, 1.0, [0.0, 0.0], 0.0);
            // apothem formula: the worst point of the ball sits over an
            // edge midpoint, and the inscribed polygon never leaves the
            // ball
            let d_h = 1.0 - (PI / m as f64).cos();
            if d_h < delta / 2.0 || d_h > 2.0 * delta {
                bail!(
                    "no inscribed {m}-gon realizes d_H in [{}, {}] (formula gives {d_h})",
                    delta / 2.0,
                    2.0 * delta
                );
            }
            let tol = (delta * 1e-3).max(1e-6);
            let est = hausdorff_distance(&k, &l, tol)
                .context("ball-vs-polygon distance cross-check")?;
            if (est.value - d_h).abs() > est.error_bound + 1e-9 {
                bail!(
                    "apothem formula {d_h} disagrees with measured {} (bound {})",
                    est.value,
                    est.error_bound
                );
            }
            Ok(GeneratedPair {
                k,
                l,
                d_h,
                d_h_bound: 0.0,
                magnitude: m as f64,
            })
        }
    }
}

fn required<'a>(base: Option<&'a ConvexBody<2>>, s: Scenario) -> Result<&'a ConvexBody<2>> {
    base.ok_or_else(|| anyhow!("scenario '{s}' needs a base body"))
}

fn measure(k: &ConvexBody<2>, l: &ConvexBody<2>) -> Result<(f64, f64)> {
    // polytope pairs converge fast; smoothed bodies need a looser target
    let tol = if k.is_polytope() && l.is_polytope() { 1e-8 } else { 1e-5 };
    let est = hausdorff_distance(k, l, tol)?;
    Ok((est.value, est.error_bound))
}

/// Finds a magnitude whose measured d_H lands in the acceptance window
/// around `delta`: bracket by doubling, then bisect. The map m -> d_H
/// need not be exactly monotone; bisection on measured values still
/// converges for the gentle families used here, and a failed bracket is
/// reported rather than forced.
fn solve_magnitude(
    k: &ConvexBody<2>,
    delta: f64,
    cap: f64,
    make: &dyn Fn(f64) -> ConvexBody<2>,
) -> Result<(ConvexBody<2>, f64, f64, f64)> {
    let (want_lo, want_hi) = (WINDOW.0 * delta, WINDOW.1 * delta);
    let probe = |m: f64| -> Result<(ConvexBody<2>, f64, f64)> {
        let l = make(m);
        let (d, bound) = measure(k, &l)?;
        Ok((l, d, bound))
    };

    let mut lo = 0.0f64;
    let mut lo_val = 0.0f64;
    let mut hi = (delta / (1.0 + k.circumradius())).min(cap);
    let mut hi_val;
    loop {
        let (l, d, b) = probe(hi)?;
        if d >= want_lo && d <= want_hi {
            return Ok((l, d, b, hi));
        }
        if d > want_hi {
            hi_val = d;
            break;
        }
        if hi >= cap {
            bail!(
                "bracketing failed: d_H({hi}) = {d} < {want_lo} at the magnitude cap {cap} \
                 (target {delta})"
            );
        }
        lo = hi;
        lo_val = d;
        hi = (hi * 2.0).min(cap);
    }

    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        let (l, d, b) = probe(mid)?;
        if d >= want_lo && d <= want_hi {
            return Ok((l, d, b, mid));
        }
        if d < want_lo {
            lo = mid;
            lo_val = d;
        } else {
            hi = mid;
            hi_val = d;
        }
    }
    bail!(
        "bisection failed after {MAX_BISECT} steps: bracket [{lo}, {hi}] with measured \
         d_H [{lo_val}, {hi_val}], target window [{want_lo}, {want_hi}]"
    )
}
