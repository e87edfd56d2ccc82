//! Boundary and normal-bundle maps between nearby smooth bodies.
//!
//! Smoothness is structural: a body counts as epsilon-smooth exactly when
//! it is represented as Parallel(inner, epsilon), so a ball of radius
//! epsilon rolls freely inside it by construction and is never detected
//! numerically. For two such bodies within Hausdorff distance delta, the
//! nearest-point map p between the boundaries, the spherical image u_K,
//! and the bundle map G(x,u) = (p(x), u_L(p(x))) obey quantitative bounds:
//!
//!   Lip(p)   <= eps / (eps - delta)            for delta < eps/2
//!   Lip(u_K) <= 1 / eps
//!   Lip(G)   <= 2 / (eps - delta)              for delta < eps/(4n)
//!   |G - id| <= delta + 2 sqrt(delta / eps)    for delta < eps/(4n)
//!   u_L(p(x)) . u_K(x) >= 1 - 2 delta / eps
//!
//! The probe functions at the bottom hammer each bound with sampled
//! boundary pairs and count violations; the rate experiments treat a
//! clean probe report as licence to use the constants.

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::hausdorff::hausdorff_distance;
use crate::measure::nor_membership;
use crate::vecn::{axpy, dist, dot, norm, unit};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A point of a normal bundle: foot point with outer unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportElement<const N: usize> {
    pub x: [f64; N],
    pub u: [f64; N],
}

impl<const N: usize> SupportElement<N> {
    pub fn new(x: [f64; N], u: [f64; N]) -> Result<Self> {
        if (norm(u) - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition("support element needs a unit normal".into()));
        }
        Ok(SupportElement { x, u })
    }

    pub fn on_nor(&self, k: &ConvexBody<N>, tol: f64) -> bool {
        nor_membership(k, &self.x, &self.u, tol)
    }

    /// Euclidean distance in R^{2n} between bundle points.
    pub fn bundle_dist(&self, other: &Self) -> f64 {
        let dx = dist(self.x, other.x);
        let du = dist(self.u, other.u);
        (dx * dx + du * du).sqrt()
    }
}

/// Two epsilon-smooth bodies with a certified Hausdorff distance bound.
/// `delta` always overestimates d_H(K, L), so every bound derived from it
/// stays valid (they are all monotone in delta).
#[derive(Debug, Clone)]
pub struct BodyPairContext<const N: usize> {
    pub k: ConvexBody<N>,
    pub l: ConvexBody<N>,
    pub epsilon: f64,
    pub delta: f64,
}

/// The inner body of a structural epsilon-parallel representation.
fn smoothing_inner<const N: usize>(
    body: &ConvexBody<N>,
    epsilon: f64,
) -> Result<&ConvexBody<N>> {
    match body {
        ConvexBody::Parallel { inner, rho } if (rho - epsilon).abs() <= 1e-12 * (1.0 + epsilon) => {
            Ok(inner)
        }
        _ => Err(Error::Precondition(
            "body is not represented as an epsilon-parallel set".into(),
        )),
    }
}

impl<const N: usize> BodyPairContext<N> {
    pub fn new(k: ConvexBody<N>, l: ConvexBody<N>, epsilon: f64, hausdorff_tol: f64) -> Result<Self> {
        smoothing_inner(&k, epsilon)?;
        smoothing_inner(&l, epsilon)?;
        let est = hausdorff_distance(&k, &l, hausdorff_tol)?;
        Ok(BodyPairContext {
            k,
            l,
            epsilon,
            delta: est.upper(),
        })
    }

    /// delta < eps/(4n): the regime in which G is defined and preserves
    /// orientation.
    pub fn orientation_regime(&self) -> bool {
        self.delta < self.epsilon / (4.0 * N as f64)
    }

    fn require_orientation_regime(&self) -> Result<()> {
        if self.orientation_regime() {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "delta {} is not below epsilon/(4n) = {}",
                self.delta,
                self.epsilon / (4.0 * N as f64)
            )))
        }
    }
}

/// Nearest point of the boundary of `l`. Outside points project onto the
/// body; for points inside, the smooth structure gives the answer: walk
/// to the inner body's projection and back out by epsilon along the
/// normal. Fails for points at depth >= epsilon, where the smooth chart
/// no longer reaches.
fn nearest_boundary_point<const N: usize>(
    l: &ConvexBody<N>,
    epsilon: f64,
    x: [f64; N],
) -> Result<[f64; N]> {
    let inner = smoothing_inner(l, epsilon)?;
    let (d, dir) = l.distance_and_direction(x);
    if let Some(dir) = dir {
        return Ok(axpy(x, -d, dir));
    }
    match inner.distance_and_direction(x) {
        (t, Some(dir)) => Ok(axpy(axpy(x, -t, dir), epsilon, dir)),
        _ => Err(Error::Precondition(
            "point lies at depth >= epsilon inside the target body".into(),
        )),
    }
}

/// p: boundary of K -> boundary of L, x -> nearest point of the boundary.
pub fn boundary_projection_map<const N: usize>(
    ctx: &BodyPairContext<N>,
    x: [f64; N],
) -> Result<[f64; N]> {
    let sd = ctx.k.signed_distance(x);
    let tol = ctx.k.boundary_tol();
    if sd.abs() > tol {
        return Err(Error::NotOnBoundary {
            signed_distance: sd,
            tolerance: tol,
        });
    }
    nearest_boundary_point(&ctx.l, ctx.epsilon, x)
}

/// The unique outer unit normal of a smooth body at a boundary point,
/// read off the structural representation: the direction from the inner
/// body's projection.
pub fn spherical_image<const N: usize>(k: &ConvexBody<N>, x: [f64; N]) -> Result<[f64; N]> {
    let ConvexBody::Parallel { inner, .. } = k else {
        return Err(Error::Precondition(
            "spherical image needs a structural parallel body".into(),
        ));
    };
    let sd = k.signed_distance(x);
    let tol = k.boundary_tol();
    if sd.abs() > tol {
        return Err(Error::NotOnBoundary {
            signed_distance: sd,
            tolerance: tol,
        });
    }
    match inner.distance_and_direction(x) {
        (_, Some(dir)) => Ok(dir),
        _ => Err(Error::NotOnBoundary {
            signed_distance: sd,
            tolerance: tol,
        }),
    }
}

/// G: Nor K -> Nor L, (x, u) -> (p(x), u_L(p(x))).
pub fn bundle_projection_map<const N: usize>(
    ctx: &BodyPairContext<N>,
    s: &SupportElement<N>,
) -> Result<SupportElement<N>> {
    ctx.require_orientation_regime()?;
    let tol = 1e-6 * (1.0 + ctx.k.circumradius());
    if !s.on_nor(&ctx.k, tol) {
        return Err(Error::NotOnBoundary {
            signed_distance: ctx.k.signed_distance(s.x),
            tolerance: tol,
        });
    }
    let z = nearest_boundary_point(&ctx.l, ctx.epsilon, s.x)?;
    let v = spherical_image(&ctx.l, z)?;
    SupportElement::new(z, v)
}

fn random_unit<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    loop {
        let v: [f64; N] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = norm(v);
        if n >= 1e-3 && n <= 1.0 {
            if let Some(u) = unit(v) {
                return u;
            }
        }
    }
}

/// Exact support element obtained by projecting a far point: for any z
/// outside K, (p(K,z), u(K,z)) lies on Nor K with no tolerance at all.
pub fn sample_support_element<const N: usize>(
    k: &ConvexBody<N>,
    rng: &mut ChaCha8Rng,
) -> SupportElement<N> {
    let dir: [f64; N] = random_unit(rng);
    support_element_from_direction(k, dir)
}

fn support_element_from_direction<const N: usize>(
    k: &ConvexBody<N>,
    dir: [f64; N],
) -> SupportElement<N> {
    let r = 8.0 * (1.0 + k.circumradius());
    let z = axpy(k.anchor(), r, dir);
    let (d, u) = k.distance_and_direction(z);
    let u = u.expect("anchor + 8(1+R) dir lies outside the body");
    SupportElement {
        x: axpy(z, -d, u),
        u,
    }
}

/// Half the pairs are independent draws, half are local: the second
/// direction is a perturbation of the first at a log-uniform scale, so
/// the probes see the short-distance regime where Lipschitz suprema live.
fn sample_pair<const N: usize>(
    k: &ConvexBody<N>,
    rng: &mut ChaCha8Rng,
    local: bool,
) -> (SupportElement<N>, SupportElement<N>) {
    let d1: [f64; N] = random_unit(rng);
    let d2 = if local {
        let spread = 10f64.powf(rng.gen_range(-5.0..-0.5));
        let v: [f64; N] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        unit(axpy(d1, spread, v)).unwrap_or(d1)
    } else {
        random_unit(rng)
    };
    (
        support_element_from_direction(k, d1),
        support_element_from_direction(k, d2),
    )
}

/// Outcome of an empirical bound check. For the Lipschitz and
/// displacement probes `worst` is the largest observed left-hand side and
/// must stay below `bound + slack`; for the alignment probe `worst` is
/// the smallest observed dot product and must stay above `bound - slack`.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub pairs: usize,
    pub bound: f64,
    pub worst: f64,
    pub slack: f64,
    pub violations: usize,
    pub rejected: usize,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Lip(p) <= eps/(eps - delta) over sampled boundary pairs.
pub fn probe_projection_lipschitz<const N: usize>(
    ctx: &BodyPairContext<N>,
    pairs: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if !(ctx.delta < 0.5 * ctx.epsilon) {
        return Err(Error::Precondition(
            "projection bound needs delta < epsilon/2".into(),
        ));
    }
    let bound = ctx.epsilon / (ctx.epsilon - ctx.delta);
    probe_quotient(ctx, pairs, seed, bound, |ctx, s1, s2| {
        let p1 = nearest_boundary_point(&ctx.l, ctx.epsilon, s1.x)?;
        let p2 = nearest_boundary_point(&ctx.l, ctx.epsilon, s2.x)?;
        Ok((dist(p1, p2), dist(s1.x, s2.x)))
    })
}

/// Lip(u_K) <= 1/eps over sampled boundary pairs of a single smooth body.
pub fn probe_spherical_image_lipschitz<const N: usize>(
    k: &ConvexBody<N>,
    pairs: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let ConvexBody::Parallel { rho, .. } = k else {
        return Err(Error::Precondition(
            "spherical image probe needs a structural parallel body".into(),
        ));
    };
    let bound = 1.0 / rho;
    let min_sep = 1e-6 * (1.0 + k.circumradius());
    let slack = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut rejected, mut violations) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    while done < pairs {
        let (s1, s2) = sample_pair(k, &mut rng, done % 2 == 1);
        let dx = dist(s1.x, s2.x);
        if dx < min_sep {
            rejected += 1;
            continue;
        }
        let ratio = dist(s1.u, s2.u) / dx;
        worst = worst.max(ratio);
        if ratio > bound + slack {
            violations += 1;
        }
        done += 1;
    }
    Ok(ProbeReport {
        pairs,
        bound,
        worst,
        slack,
        violations,
        rejected,
    })
}

/// Lip(G) <= 2/(eps - delta) in the Euclidean metric of R^{2n}.
pub fn probe_bundle_map_lipschitz<const N: usize>(
    ctx: &BodyPairContext<N>,
    pairs: usize,
    seed: u64,
) -> Result<ProbeReport> {
    ctx.require_orientation_regime()?;
    let bound = 2.0 / (ctx.epsilon - ctx.delta);
    probe_quotient(ctx, pairs, seed, bound, |ctx, s1, s2| {
        let g1 = transport(ctx, s1)?;
        let g2 = transport(ctx, s2)?;
        Ok((g1.bundle_dist(&g2), s1.bundle_dist(s2)))
    })
}

/// |G(s) - s| <= delta + 2 sqrt(delta/eps) over sampled bundle points.
pub fn probe_displacement<const N: usize>(
    ctx: &BodyPairContext<N>,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    ctx.require_orientation_regime()?;
    let bound = ctx.delta + 2.0 * (ctx.delta / ctx.epsilon).sqrt();
    let slack = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut violations = 0usize;
    for _ in 0..samples {
        let s = sample_support_element(&ctx.k, &mut rng);
        let g = transport(ctx, &s)?;
        let disp = g.bundle_dist(&s);
        worst = worst.max(disp);
        if disp > bound + slack {
            violations += 1;
        }
    }
    Ok(ProbeReport {
        pairs: samples,
        bound,
        worst,
        slack,
        violations,
        rejected: 0,
    })
}

/// u_L(p(x)) . u_K(x) >= 1 - 2 delta/eps over sampled boundary points.
pub fn probe_normal_alignment<const N: usize>(
    ctx: &BodyPairContext<N>,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    ctx.require_orientation_regime()?;
    let bound = 1.0 - 2.0 * ctx.delta / ctx.epsilon;
    let slack = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..samples {
        let s = sample_support_element(&ctx.k, &mut rng);
        let g = transport(ctx, &s)?;
        let align = dot(g.u, s.u);
        worst = worst.min(align);
        if align < bound - slack {
            violations += 1;
        }
    }
    Ok(ProbeReport {
        pairs: samples,
        bound,
        worst,
        slack,
        violations,
        rejected: 0,
    })
}

/// G without the per-call Nor membership test; probe samples are exact
/// bundle points by construction.
pub(crate) fn transport<const N: usize>(
    ctx: &BodyPairContext<N>,
    s: &SupportElement<N>,
) -> Result<SupportElement<N>> {
    let z = nearest_boundary_point(&ctx.l, ctx.epsilon, s.x)?;
    let v = spherical_image(&ctx.l, z)?;
    Ok(SupportElement { x: z, u: v })
}

fn probe_quotient<const N: usize>(
    ctx: &BodyPairContext<N>,
    pairs: usize,
    seed: u64,
    bound: f64,
    mut quotient: impl FnMut(
        &BodyPairContext<N>,
        &SupportElement<N>,
        &SupportElement<N>,
    ) -> Result<(f64, f64)>,
) -> Result<ProbeReport> {
    let min_sep = 1e-6 * (1.0 + ctx.k.circumradius());
    let slack = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut done, mut rejected, mut violations) = (0usize, 0usize, 0usize);
    let mut worst = 0.0f64;
    while done < pairs {
        let (s1, s2) = sample_pair(&ctx.k, &mut rng, done % 2 == 1);
        if dist(s1.x, s2.x) < min_sep {
            rejected += 1;
            continue;
        }
        let (num, den) = quotient(ctx, &s1, &s2)?;
        if den < min_sep {
            rejected += 1;
            continue;
        }
        let ratio = num / den;
        worst = worst.max(ratio);
        if ratio > bound + slack {
            violations += 1;
        }
        done += 1;
    }
    Ok(ProbeReport {
        pairs,
        bound,
        worst,
        slack,
        violations,
        rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{unit_square, ConvexBody};
    use crate::vecn::{add, sub};

    fn point2(x: f64, y: f64) -> ConvexBody<2> {
        ConvexBody::polytope(&[[x, y]]).unwrap()
    }

    fn ball_via_parallel(cx: f64, cy: f64, r: f64, eps: f64) -> ConvexBody<2> {
        // B(c, r) with smoothing radius eps <= r, represented structurally
        let inner = if r > eps {
            ConvexBody::ball([cx, cy], r - eps).unwrap()
        } else {
            point2(cx, cy)
        };
        ConvexBody::parallel(inner, eps).unwrap()
    }

    fn smooth_square(eps: f64) -> ConvexBody<2> {
        ConvexBody::parallel(unit_square(), eps).unwrap()
    }

    #[test]
    fn context_requires_structural_smoothing() {
        assert!(BodyPairContext::new(unit_square(), smooth_square(1.0), 1.0, 1e-7).is_err());
        let ctx = BodyPairContext::new(
            smooth_square(1.0),
            smooth_square(1.0).translate([0.01, 0.0]),
            1.0,
            1e-7,
        )
        .unwrap();
        assert!(ctx.delta >= 0.01 && ctx.delta <= 0.01 + 1e-6, "{}", ctx.delta);
        assert!(ctx.orientation_regime());
    }

    #[test]
    fn projection_moves_between_boundaries_as_in_the_radial_cases() {
        // concentric balls: radial offset
        let ctx = BodyPairContext::new(
            ball_via_parallel(0.0, 0.0, 1.0, 1.0),
            ball_via_parallel(0.0, 0.0, 1.01, 1.0),
            1.0,
            1e-5,
        )
        .unwrap();
        let p = boundary_projection_map(&ctx, [1.0, 0.0]).unwrap();
        assert!(dist(p, [1.01, 0.0]) <= 1e-9, "{p:?}");
        assert!(dist(p, [1.0, 0.0]) <= ctx.delta + 1e-9);

        // translated ball: x outside L projects straight onto it
        let ctx = BodyPairContext::new(
            ball_via_parallel(0.0, 0.0, 1.0, 1.0),
            ball_via_parallel(0.01, 0.0, 1.0, 1.0),
            1.0,
            1e-5,
        )
        .unwrap();
        let p = boundary_projection_map(&ctx, [-1.0, 0.0]).unwrap();
        assert!(dist(p, [-0.99, 0.0]) <= 1e-9, "{p:?}");
    }

    #[test]
    fn projection_on_flat_parts_follows_the_active_side() {
        let ctx = BodyPairContext::new(
            smooth_square(1.0),
            smooth_square(1.0).translate([0.01, 0.0]),
            1.0,
            1e-7,
        )
        .unwrap();
        // top side is insensitive to a horizontal shift
        let p = boundary_projection_map(&ctx, [0.5, 2.0]).unwrap();
        assert!(dist(p, [0.5, 2.0]) <= 1e-9, "{p:?}");
        // right side moves with it
        let p = boundary_projection_map(&ctx, [2.0, 0.5]).unwrap();
        assert!(dist(p, [2.01, 0.5]) <= 1e-9, "{p:?}");
        // off-boundary input is rejected
        assert!(matches!(
            boundary_projection_map(&ctx, [0.5, 0.5]),
            Err(Error::NotOnBoundary { .. })
        ));
    }

    #[test]
    fn projection_agrees_with_a_dense_boundary_mesh() {
        let ctx = BodyPairContext::new(
            smooth_square(1.0),
            smooth_square(1.0).translate([0.01, 0.0]),
            1.0,
            1e-7,
        )
        .unwrap();
        // walk the offset boundary of L explicitly: edges pushed out by
        // the outward normal, vertices blown up into quarter arcs
        let inner = unit_square().translate([0.01, 0.0]);
        let ring = inner.as_polytope().unwrap().ring2().clone();
        let mut mesh: Vec<[f64; 2]> = Vec::new();
        let m = ring.n_vertices();
        let per_cell = 2000;
        for i in 0..m {
            let (a, b, n, _len) = ring.edge(i);
            for j in 0..per_cell {
                let t = (j as f64 + 0.5) / per_cell as f64;
                mesh.push(add(axpy(a, t, sub(b, a)), n));
            }
            let (_, _, n_next, _) = ring.edge((i + 1) % m);
            let (a0, a1) = (n[1].atan2(n[0]), n_next[1].atan2(n_next[0]));
            let a1 = if a1 < a0 { a1 + std::f64::consts::TAU } else { a1 };
            for j in 0..per_cell {
                let th = a0 + (a1 - a0) * (j as f64 + 0.5) / per_cell as f64;
                mesh.push(add(b, [th.cos(), th.sin()]));
            }
        }
        let spacing = 4.0 / per_cell as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = sample_support_element(&ctx.k, &mut rng);
            let p = boundary_projection_map(&ctx, s.x).unwrap();
            let best = mesh
                .iter()
                .map(|mp| dist(*mp, s.x))
                .fold(f64::INFINITY, f64::min);
            let claimed = dist(p, s.x);
            // p is no farther than the best mesh point, and the mesh can
            // only beat it by its own resolution
            assert!(claimed <= best + 1e-12, "{claimed} vs mesh {best}");
            assert!(best <= claimed + spacing, "{claimed} vs mesh {best}");
        }
    }

    #[test]
    fn spherical_image_reads_the_structural_normal() {
        let ball = ball_via_parallel(0.0, 0.0, 2.0, 1.0);
        let u = spherical_image(&ball, [2.0, 0.0]).unwrap();
        assert!(dist(u, [1.0, 0.0]) <= 1e-12);

        let sq = smooth_square(1.0);
        let u = spherical_image(&sq, [0.5, 2.0]).unwrap();
        assert!(dist(u, [0.0, 1.0]) <= 1e-12);
        let c = std::f64::consts::FRAC_PI_4.cos();
        let u = spherical_image(&sq, [1.0 + c, 1.0 + c]).unwrap();
        assert!(dist(u, [c, c]) <= 1e-9);

        assert!(spherical_image(&sq, [0.0, 0.0]).is_err());
        assert!(spherical_image(&unit_square(), [0.0, 0.5]).is_err());
    }

    #[test]
    fn bundle_map_on_concentric_balls_is_the_radial_offset() {
        let ctx = BodyPairContext::new(
            ball_via_parallel(0.0, 0.0, 1.0, 1.0),
            ball_via_parallel(0.0, 0.0, 1.01, 1.0),
            1.0,
            1e-5,
        )
        .unwrap();
        let s = SupportElement::new([1.0, 0.0], [1.0, 0.0]).unwrap();
        let g = bundle_projection_map(&ctx, &s).unwrap();
        assert!(dist(g.x, [1.01, 0.0]) <= 1e-9);
        assert!(dist(g.u, [1.0, 0.0]) <= 1e-9);
        let disp = g.bundle_dist(&s);
        assert!(disp <= ctx.delta + 2.0 * (ctx.delta / ctx.epsilon).sqrt() + 1e-9);
    }

    #[test]
    fn bundle_map_is_the_identity_for_equal_bodies() {
        let ctx =
            BodyPairContext::new(smooth_square(1.0), smooth_square(1.0), 1.0, 1e-7).unwrap();
        assert_eq!(ctx.delta, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = sample_support_element(&ctx.k, &mut rng);
            let g = bundle_projection_map(&ctx, &s).unwrap();
            assert!(g.bundle_dist(&s) <= 1e-9);
        }
    }

    #[test]
    fn bundle_map_rejects_out_of_regime_pairs() {
        // delta = 0.2 >= eps/(4n) = 0.125
        let ctx = BodyPairContext::new(
            smooth_square(1.0),
            smooth_square(1.0).translate([0.2, 0.0]),
            1.0,
            1e-7,
        )
        .unwrap();
        assert!(!ctx.orientation_regime());
        let s = SupportElement::new([0.5, 2.0], [0.0, 1.0]).unwrap();
        assert!(bundle_projection_map(&ctx, &s).is_err());
    }

    #[test]
    fn all_five_probes_pass_on_translated_smooth_squares() {
        let ctx = BodyPairContext::new(
            smooth_square(1.0),
            smooth_square(1.0).translate([0.01, 0.0]),
            1.0,
            1e-7,
        )
        .unwrap();
        let reports = [
            probe_projection_lipschitz(&ctx, 10_000, 21).unwrap(),
            probe_spherical_image_lipschitz(&ctx.k, 10_000, 22).unwrap(),
            probe_bundle_map_lipschitz(&ctx, 10_000, 23).unwrap(),
            probe_displacement(&ctx, 10_000, 24).unwrap(),
            probe_normal_alignment(&ctx, 10_000, 25).unwrap(),
        ];
        for (i, r) in reports.iter().enumerate() {
            assert!(r.passed(), "probe {i}: {r:?}");
        }
        // the spherical image bound 1/eps is attained on the corner arcs
        assert!(reports[1].worst >= 0.99 * reports[1].bound, "{:?}", reports[1]);
    }

    #[test]
    fn probes_pass_on_rotated_smooth_squares() {
        let angle = 0.5f64.to_radians();
        let rotated = unit_square().rotate(angle, [0.5, 0.5]);
        let ctx = BodyPairContext::new(
            smooth_square(1.0),
            ConvexBody::parallel(rotated, 1.0).unwrap(),
            1.0,
            1e-7,
        )
        .unwrap();
        // rotation about the centroid keeps the pair deep in regime
        assert!(ctx.delta < ctx.epsilon / 16.0, "{}", ctx.delta);
        assert!(probe_displacement(&ctx, 10_000, 31).unwrap().passed());
        assert!(probe_normal_alignment(&ctx, 10_000, 32).unwrap().passed());
        assert!(probe_bundle_map_lipschitz(&ctx, 5_000, 33).unwrap().passed());
    }

    #[test]
    fn deep_interior_points_are_rejected() {
        let l = smooth_square(1.0);
        // centroid of the inner square sits at depth > epsilon
        assert!(nearest_boundary_point(&l, 1.0, [0.5, 0.5]).is_err());
        // a point of the smooth collar projects back out
        let p = nearest_boundary_point(&l, 1.0, [0.5, 1.5]).unwrap();
        assert!(dist(p, [0.5, 2.0]) <= 1e-12, "{p:?}");
    }
}
