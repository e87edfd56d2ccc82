//! Convex bodies: polytopes, balls, and outer parallel bodies.
//!
//! A body is one of
//! * `Polytope(points)` -- the convex hull of finitely many points, cleaned
//!   to its vertex set on construction;
//! * `Ball { center, radius }`;
//! * `Parallel { inner, rho }` -- the Minkowski sum `inner + rho * B`, kept
//!   structural so that support evaluation and boundary maps stay exact.
//!
//! Lower-dimensional polytopes (segments, points, planar clouds in R^3) are
//! accepted and support distance and projection queries; operations that
//! need a full-dimensional body check and report degeneracy themselves.

use crate::error::{Error, Result};
use crate::hull2::{self, Hull2};
use crate::hull3::{self, Hull3};
use crate::unit_ball_volume;
use crate::vecn::{add, axpy, dist, dot, norm, project_segment, scale, sub, unit};
use serde::{Deserialize, Serialize};

/// Cleaned planar polytope.
#[derive(Debug, Clone)]
pub enum Poly2 {
    Point([f64; 2]),
    Segment([f64; 2], [f64; 2]),
    /// Counter-clockwise vertices in strictly convex position.
    Polygon(Vec<[f64; 2]>),
}

impl Poly2 {
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        match self {
            Poly2::Point(p) => vec![*p],
            Poly2::Segment(a, b) => vec![*a, *b],
            Poly2::Polygon(v) => v.clone(),
        }
    }

    /// Edge `i`: `(tail, head, outward unit normal, length)`.
    pub fn edge(&self, i: usize) -> ([f64; 2], [f64; 2], [f64; 2], f64) {
        let v = match self {
            Poly2::Polygon(v) => v,
            _ => panic!("edge() on degenerate polytope"),
        };
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        let t = unit(sub(b, a)).expect("zero-length polygon edge");
        // CCW ring: outward normal is the tangent rotated by -90 degrees.
        let n = [t[1], -t[0]];
        (a, b, n, dist(a, b))
    }

    pub fn n_vertices(&self) -> usize {
        match self {
            Poly2::Point(_) => 1,
            Poly2::Segment(..) => 2,
            Poly2::Polygon(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum PolyRep {
    D2(Poly2),
    D3(Hull3),
}

/// A cleaned polytope in dimension `N` (2 or 3).
#[derive(Debug, Clone)]
pub struct Polytope<const N: usize> {
    vertices: Vec<[f64; N]>,
    rep: PolyRep,
}

impl<const N: usize> Polytope<N> {
    pub fn vertices(&self) -> &[[f64; N]] {
        &self.vertices
    }

    pub fn ring2(&self) -> &Poly2 {
        match &self.rep {
            PolyRep::D2(p) => p,
            _ => unreachable!("2D accessor on 3D polytope"),
        }
    }

    pub fn hull3(&self) -> &Hull3 {
        match &self.rep {
            PolyRep::D3(h) => h,
            _ => unreachable!("3D accessor on 2D polytope"),
        }
    }

    pub fn is_full_dimensional(&self) -> bool {
        match &self.rep {
            PolyRep::D2(Poly2::Polygon(_)) => true,
            PolyRep::D3(Hull3::Solid(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ConvexBody<const N: usize> {
    Polytope(Polytope<N>),
    Ball { center: [f64; N], radius: f64 },
    Parallel { inner: Box<ConvexBody<N>>, rho: f64 },
}

fn to2<const N: usize>(p: [f64; N]) -> [f64; 2] {
    [p[0], p[1]]
}
fn to3<const N: usize>(p: [f64; N]) -> [f64; 3] {
    [p[0], p[1], p[2]]
}
fn from2<const N: usize>(p: [f64; 2]) -> [f64; N] {
    std::array::from_fn(|i| p[i])
}
fn from3<const N: usize>(p: [f64; 3]) -> [f64; N] {
    std::array::from_fn(|i| p[i])
}

impl<const N: usize> ConvexBody<N> {
    /// Builds a polytope from a point cloud; the hull is computed once and
    /// collinear/coplanar input is cleaned away.
    pub fn polytope(points: &[[f64; N]]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateBody("empty vertex list".into()));
        }
        for p in points {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidConfig("non-finite vertex coordinate".into()));
            }
        }
        let rep = match N {
            2 => {
                let pts: Vec<[f64; 2]> = points.iter().map(|&p| to2(p)).collect();
                PolyRep::D2(match hull2::convex_hull2(&pts) {
                    Hull2::Point(p) => Poly2::Point(p),
                    Hull2::Segment(a, b) => Poly2::Segment(a, b),
                    Hull2::Polygon(v) => Poly2::Polygon(v),
                })
            }
            3 => {
                let pts: Vec<[f64; 3]> = points.iter().map(|&p| to3(p)).collect();
                PolyRep::D3(hull3::convex_hull3(&pts)?)
            }
            d => {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: d,
                })
            }
        };
        let vertices: Vec<[f64; N]> = match &rep {
            PolyRep::D2(p) => p.vertices().into_iter().map(from2).collect(),
            PolyRep::D3(h) => match h {
                Hull3::Point(p) => vec![from3(*p)],
                Hull3::Segment(a, b) => vec![from3(*a), from3(*b)],
                Hull3::Planar { vertices, .. } => {
                    vertices.iter().map(|&p| from3(p)).collect()
                }
                Hull3::Solid(s) => s.vertices.iter().map(|&p| from3(p)).collect(),
            },
        };
        Ok(ConvexBody::Polytope(Polytope { vertices, rep }))
    }

    pub fn ball(center: [f64; N], radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("ball needs finite center and radius > 0".into()));
        }
        Ok(ConvexBody::Ball { center, radius })
    }

    pub fn parallel(inner: ConvexBody<N>, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::InvalidConfig("parallel body needs rho > 0".into()));
        }
        Ok(ConvexBody::Parallel {
            inner: Box::new(inner),
            rho,
        })
    }

    /// Support function h(u) = sup { <x, u> : x in K }, exact for every
    /// variant; `u` need not be a unit vector.
    pub fn support(&self, u: [f64; N]) -> f64 {
        match self {
            ConvexBody::Polytope(p) => p
                .vertices
                .iter()
                .map(|v| dot(*v, u))
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexBody::Ball { center, radius } => dot(*center, u) + radius * norm(u),
            ConvexBody::Parallel { inner, rho } => inner.support(u) + rho * norm(u),
        }
    }

    /// Metric projection (nearest point map).
    pub fn project(&self, x: [f64; N]) -> [f64; N] {
        match self {
            ConvexBody::Polytope(p) => match &p.rep {
                PolyRep::D2(poly) => from2(project_poly2(poly, to2(x))),
                PolyRep::D3(h) => from3(project_hull3(h, to3(x))),
            },
            ConvexBody::Ball { center, radius } => {
                let d = sub(x, *center);
                let n = norm(d);
                if n <= *radius {
                    x
                } else {
                    axpy(*center, *radius / n, d)
                }
            }
            ConvexBody::Parallel { inner, rho } => {
                let (d, dir) = inner.distance_and_direction(x);
                if d <= *rho {
                    x
                } else {
                    let u = dir.expect("positive distance implies a direction");
                    axpy(inner.project(x), *rho, u)
                }
            }
        }
    }

    /// Unsigned distance d(K, x).
    pub fn distance(&self, x: [f64; N]) -> f64 {
        match self {
            ConvexBody::Ball { center, radius } => (dist(x, *center) - radius).max(0.0),
            ConvexBody::Parallel { inner, rho } => (inner.distance(x) - rho).max(0.0),
            ConvexBody::Polytope(_) => dist(x, self.project(x)),
        }
    }

    /// Distance together with the unit direction from the foot point to `x`
    /// (`None` when `x` lies in the body).
    pub fn distance_and_direction(&self, x: [f64; N]) -> (f64, Option<[f64; N]>) {
        match self {
            ConvexBody::Ball { center, radius } => {
                let d = sub(x, *center);
                let n = norm(d);
                if n <= *radius {
                    (0.0, None)
                } else {
                    ((n - radius), Some(scale(1.0 / n, d)))
                }
            }
            ConvexBody::Parallel { inner, rho } => {
                let (d, dir) = inner.distance_and_direction(x);
                if d <= *rho {
                    (0.0, None)
                } else {
                    (d - rho, dir)
                }
            }
            ConvexBody::Polytope(_) => {
                let p = self.project(x);
                let d = dist(x, p);
                if d <= 0.0 {
                    (0.0, None)
                } else {
                    (d, Some(scale(1.0 / d, sub(x, p))))
                }
            }
        }
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, x: [f64; N]) -> f64 {
        match self {
            ConvexBody::Ball { center, radius } => dist(x, *center) - radius,
            ConvexBody::Parallel { inner, rho } => inner.signed_distance(x) - rho,
            ConvexBody::Polytope(p) => match &p.rep {
                PolyRep::D2(Poly2::Polygon(v)) => {
                    let q = to2(x);
                    let m = v.len();
                    let mut max_side = f64::NEG_INFINITY;
                    for i in 0..m {
                        let a = v[i];
                        let b = v[(i + 1) % m];
                        let t = unit(sub(b, a)).unwrap();
                        let n = [t[1], -t[0]];
                        max_side = max_side.max(dot(sub(q, a), n));
                    }
                    if max_side <= 0.0 {
                        // interior: plane distances are attained on the facets
                        max_side
                    } else {
                        self.distance(x)
                    }
                }
                PolyRep::D3(Hull3::Solid(s)) => {
                    let q = to3(x);
                    let mut max_side = f64::NEG_INFINITY;
                    for f in &s.facets {
                        max_side = max_side.max(dot(f.normal, q) - f.offset);
                    }
                    if max_side <= 0.0 {
                        max_side
                    } else {
                        self.distance(x)
                    }
                }
                // lower-dimensional bodies have empty interior
                _ => self.distance(x),
            },
        }
    }

    pub fn contains(&self, x: [f64; N], tol: f64) -> bool {
        self.distance(x) <= tol
    }

    /// max |y| over the body (circumradius about the origin).
    pub fn circumradius(&self) -> f64 {
        match self {
            ConvexBody::Polytope(p) => p
                .vertices
                .iter()
                .map(|v| norm(*v))
                .fold(0.0, f64::max),
            ConvexBody::Ball { center, radius } => norm(*center) + radius,
            ConvexBody::Parallel { inner, rho } => inner.circumradius() + rho,
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`.
    pub fn bounding_box(&self) -> ([f64; N], [f64; N]) {
        match self {
            ConvexBody::Polytope(p) => {
                let mut lo = [f64::INFINITY; N];
                let mut hi = [f64::NEG_INFINITY; N];
                for v in &p.vertices {
                    for i in 0..N {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (lo, hi)
            }
            ConvexBody::Ball { center, radius } => (
                std::array::from_fn(|i| center[i] - radius),
                std::array::from_fn(|i| center[i] + radius),
            ),
            ConvexBody::Parallel { inner, rho } => {
                let (lo, hi) = inner.bounding_box();
                (
                    std::array::from_fn(|i| lo[i] - rho),
                    std::array::from_fn(|i| hi[i] + rho),
                )
            }
        }
    }

    /// Lebesgue volume where a closed form exists (`None` for parallel
    /// bodies over polytopes; those are handled by the Steiner machinery).
    pub fn volume(&self) -> Option<f64> {
        match self {
            ConvexBody::Ball { radius, .. } => Some(unit_ball_volume(N) * radius.powi(N as i32)),
            ConvexBody::Polytope(p) => match &p.rep {
                PolyRep::D2(Poly2::Polygon(v)) => Some(hull2::signed_area(v)),
                PolyRep::D3(Hull3::Solid(s)) => Some(s.volume()),
                _ => Some(0.0),
            },
            ConvexBody::Parallel { inner, rho } => match inner.as_ref() {
                ConvexBody::Ball { radius, .. } => {
                    Some(unit_ball_volume(N) * (radius + rho).powi(N as i32))
                }
                _ => None,
            },
        }
    }

    /// Structural smoothness radius: the largest eps such that the body is
    /// an outer parallel body at distance eps (0 for bare polytopes).
    pub fn smoothness(&self) -> f64 {
        match self {
            ConvexBody::Polytope(_) => 0.0,
            ConvexBody::Ball { radius, .. } => *radius,
            ConvexBody::Parallel { inner, rho } => inner.smoothness() + rho,
        }
    }

    /// Boundary membership tolerance used by the boundary maps.
    pub fn boundary_tol(&self) -> f64 {
        1e-9 * (1.0 + self.circumradius())
    }

    pub fn translate(&self, t: [f64; N]) -> Self {
        match self {
            ConvexBody::Polytope(p) => {
                let moved: Vec<[f64; N]> = p.vertices.iter().map(|&v| add(v, t)).collect();
                ConvexBody::polytope(&moved).expect("translate preserves validity")
            }
            ConvexBody::Ball { center, radius } => ConvexBody::Ball {
                center: add(*center, t),
                radius: *radius,
            },
            ConvexBody::Parallel { inner, rho } => ConvexBody::Parallel {
                inner: Box::new(inner.translate(t)),
                rho: *rho,
            },
        }
    }

    /// Applies a linear isometry given by its matrix action on points.
    pub fn map_points(&self, f: &dyn Fn([f64; N]) -> [f64; N]) -> Result<Self> {
        Ok(match self {
            ConvexBody::Polytope(p) => {
                let moved: Vec<[f64; N]> = p.vertices.iter().map(|&v| f(v)).collect();
                ConvexBody::polytope(&moved)?
            }
            ConvexBody::Ball { center, radius } => ConvexBody::Ball {
                center: f(*center),
                radius: *radius,
            },
            ConvexBody::Parallel { inner, rho } => ConvexBody::Parallel {
                inner: Box::new(inner.map_points(f)?),
                rho: *rho,
            },
        })
    }

    pub fn as_polytope(&self) -> Option<&Polytope<N>> {
        match self {
            ConvexBody::Polytope(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_polytope(&self) -> bool {
        matches!(self, ConvexBody::Polytope(_))
    }

    /// Exact structural equality (same variant, bitwise-equal data, with
    /// polytopes compared by their cleaned vertex sets). Used to
    /// short-circuit zero Hausdorff distance, which a Lipschitz-certified
    /// grid search cannot witness.
    pub fn structurally_equal(&self, other: &Self) -> bool {
        match (self, other) {
            (ConvexBody::Polytope(a), ConvexBody::Polytope(b)) => {
                // vertices are already canonical up to rotation of the ring;
                // compare as sorted sets
                let mut va = a.vertices.clone();
                let mut vb = b.vertices.clone();
                let key = |p: &[f64; N]| p.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
                va.sort_by_key(key);
                vb.sort_by_key(key);
                va == vb
            }
            (
                ConvexBody::Ball { center: c1, radius: r1 },
                ConvexBody::Ball { center: c2, radius: r2 },
            ) => c1 == c2 && r1 == r2,
            (
                ConvexBody::Parallel { inner: i1, rho: r1 },
                ConvexBody::Parallel { inner: i2, rho: r2 },
            ) => r1 == r2 && i1.structurally_equal(i2),
            _ => false,
        }
    }

    /// Centroid of the vertex set / center; a convenient rotation anchor.
    pub fn anchor(&self) -> [f64; N] {
        match self {
            ConvexBody::Polytope(p) => {
                let mut c = [0.0; N];
                for v in &p.vertices {
                    c = add(c, *v);
                }
                scale(1.0 / p.vertices.len() as f64, c)
            }
            ConvexBody::Ball { center, .. } => *center,
            ConvexBody::Parallel { inner, .. } => inner.anchor(),
        }
    }
}

impl ConvexBody<2> {
    pub fn rotate(&self, angle: f64, about: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        let f = move |p: [f64; 2]| {
            let d = sub(p, about);
            add(about, [c * d[0] - s * d[1], s * d[0] + c * d[1]])
        };
        self.map_points(&f).expect("rotation preserves validity")
    }
}

fn project_poly2(poly: &Poly2, x: [f64; 2]) -> [f64; 2] {
    match poly {
        Poly2::Point(p) => *p,
        Poly2::Segment(a, b) => project_segment(x, *a, *b),
        Poly2::Polygon(v) => {
            let m = v.len();
            let mut inside = true;
            for i in 0..m {
                let a = v[i];
                let b = v[(i + 1) % m];
                if crate::vecn::cross2(sub(b, a), sub(x, a)) < 0.0 {
                    inside = false;
                    break;
                }
            }
            if inside {
                return x;
            }
            let mut best = v[0];
            let mut best_d = f64::INFINITY;
            for i in 0..m {
                let a = v[i];
                let b = v[(i + 1) % m];
                let q = project_segment(x, a, b);
                let d = dist(q, x);
                if d < best_d {
                    best_d = d;
                    best = q;
                }
            }
            best
        }
    }
}

fn project_hull3(h: &Hull3, x: [f64; 3]) -> [f64; 3] {
    match h {
        Hull3::Point(p) => *p,
        Hull3::Segment(a, b) => project_segment(x, *a, *b),
        Hull3::Planar { vertices, normal } => {
            // nearest point of a convex polygon embedded in a plane
            let q = sub(x, scale(dot(*normal, x) - dot(*normal, vertices[0]), *normal));
            let m = vertices.len();
            let inside = (0..m).all(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                dot(crate::vecn::cross(sub(b, a), sub(q, a)), *normal) >= 0.0
            });
            if inside {
                return q;
            }
            let mut best = vertices[0];
            let mut best_d = f64::INFINITY;
            for i in 0..m {
                let a = vertices[i];
                let b = vertices[(i + 1) % m];
                let c = project_segment(x, a, b);
                let d = dist(c, x);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            best
        }
        Hull3::Solid(s) => s.project(x),
    }
}

/// 2D rotation helper for test code and sweeps.
pub fn rotation2(angle: f64) -> impl Fn([f64; 2]) -> [f64; 2] {
    let (s, c) = angle.sin_cos();
    move |p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

// ---------------------------------------------------------------------------
// JSON interface
// ---------------------------------------------------------------------------

/// Raw JSON schema for bodies.
///
/// ```json
/// {"dim": 2, "type": "polytope", "vertices": [[0,0],[1,0],[1,1],[0,1]]}
/// {"type": "ball", "center": [0,0], "radius": 1.0}
/// {"type": "parallel", "inner": {...}, "rho": 0.5}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BodySpec {
    Polytope {
        #[serde(skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        vertices: Vec<Vec<f64>>,
    },
    Ball {
        #[serde(skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        center: Vec<f64>,
        radius: f64,
    },
    Parallel {
        #[serde(skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
        inner: Box<BodySpec>,
        rho: f64,
    },
}

impl BodySpec {
    pub fn dimension(&self) -> Result<usize> {
        let d = match self {
            BodySpec::Polytope { dim, vertices } => {
                let from_data = vertices.first().map(|v| v.len());
                dim.or(from_data)
                    .ok_or_else(|| Error::InvalidConfig("polytope without vertices".into()))?
            }
            BodySpec::Ball { dim, center, .. } => dim.unwrap_or(center.len()),
            BodySpec::Parallel { dim, inner, .. } => match dim {
                Some(d) => *d,
                None => inner.dimension()?,
            },
        };
        if d != 2 && d != 3 {
            return Err(Error::DimensionMismatch { expected: 2, got: d });
        }
        Ok(d)
    }
}

/// A body of either supported dimension, as parsed from JSON.
#[derive(Debug, Clone)]
pub enum AnyBody {
    D2(ConvexBody<2>),
    D3(ConvexBody<3>),
}

impl AnyBody {
    pub fn dim(&self) -> usize {
        match self {
            AnyBody::D2(_) => 2,
            AnyBody::D3(_) => 3,
        }
    }
}

fn collect_points<const N: usize>(raw: &[Vec<f64>]) -> Result<Vec<[f64; N]>> {
    raw.iter()
        .map(|v| {
            if v.len() != N {
                return Err(Error::DimensionMismatch {
                    expected: N,
                    got: v.len(),
                });
            }
            Ok(std::array::from_fn(|i| v[i]))
        })
        .collect()
}

fn body_from_spec<const N: usize>(spec: &BodySpec) -> Result<ConvexBody<N>> {
    match spec {
        BodySpec::Polytope { vertices, .. } => {
            let pts = collect_points::<N>(vertices)?;
            ConvexBody::polytope(&pts)
        }
        BodySpec::Ball { center, radius, .. } => {
            if center.len() != N {
                return Err(Error::DimensionMismatch {
                    expected: N,
                    got: center.len(),
                });
            }
            ConvexBody::ball(std::array::from_fn(|i| center[i]), *radius)
        }
        BodySpec::Parallel { inner, rho, .. } => {
            ConvexBody::parallel(body_from_spec::<N>(inner)?, *rho)
        }
    }
}

pub fn parse_body(json: &str) -> Result<AnyBody> {
    let spec: BodySpec = serde_json::from_str(json)?;
    body_from_bodyspec(&spec)
}

pub fn body_from_bodyspec(spec: &BodySpec) -> Result<AnyBody> {
    match spec.dimension()? {
        2 => Ok(AnyBody::D2(body_from_spec::<2>(spec)?)),
        3 => Ok(AnyBody::D3(body_from_spec::<3>(spec)?)),
        d => Err(Error::DimensionMismatch { expected: 2, got: d }),
    }
}

impl<const N: usize> ConvexBody<N> {
    pub fn to_spec(&self) -> BodySpec {
        match self {
            ConvexBody::Polytope(p) => BodySpec::Polytope {
                dim: Some(N),
                vertices: p.vertices.iter().map(|v| v.to_vec()).collect(),
            },
            ConvexBody::Ball { center, radius } => BodySpec::Ball {
                dim: Some(N),
                center: center.to_vec(),
                radius: *radius,
            },
            ConvexBody::Parallel { inner, rho } => BodySpec::Parallel {
                dim: Some(N),
                inner: Box::new(inner.to_spec()),
                rho: *rho,
            },
        }
    }
}

/// The unit square `[0,1]^2`.
pub fn unit_square() -> ConvexBody<2> {
    ConvexBody::polytope(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap()
}

/// The unit cube `[0,1]^3`.
pub fn unit_cube() -> ConvexBody<3> {
    let mut v = Vec::new();
    for &x in &[0.0, 1.0] {
        for &y in &[0.0, 1.0] {
            for &z in &[0.0, 1.0] {
                v.push([x, y, z]);
            }
        }
    }
    ConvexBody::polytope(&v).unwrap()
}

/// Regular `m`-gon inscribed in the circle of radius `r` about `center`,
/// with vertex phase `phase`.
pub fn regular_polygon(m: usize, r: f64, center: [f64; 2], phase: f64) -> ConvexBody<2> {
    let pts: Vec<[f64; 2]> = (0..m)
        .map(|k| {
            let a = phase + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect();
    ConvexBody::polytope(&pts).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_of_square_and_parallel_square() {
        let k = unit_square();
        // flat side looking down
        assert_eq!(k.support([0.0, -1.0]), 0.0);
        assert_eq!(k.support([1.0, 1.0]), 2.0);
        let kp = ConvexBody::parallel(k, 0.5).unwrap();
        assert_eq!(kp.support([0.0, -1.0]), 0.5);
    }

    #[test]
    fn projection_of_outside_corner_point() {
        let k = unit_square();
        let p = k.project([2.0, 2.0]);
        assert!(dist(p, [1.0, 1.0]) < 1e-15);
        let (d, u) = k.distance_and_direction([2.0, 2.0]);
        assert!((d - std::f64::consts::SQRT_2).abs() < 1e-15);
        let u = u.unwrap();
        assert!(dist(u, [0.5f64.sqrt(), 0.5f64.sqrt()]) < 1e-15);
    }

    #[test]
    fn signed_distance_examples() {
        let disk = ConvexBody::<2>::ball([0.0, 0.0], 1.0).unwrap();
        assert_eq!(disk.signed_distance([0.0, 0.0]), -1.0);
        let k = unit_square();
        assert!((k.signed_distance([0.5, 0.5]) + 0.5).abs() < 1e-15);
        assert!((k.signed_distance([2.0, 0.5]) - 1.0).abs() < 1e-15);
        // parallel body: signed distance shifts by rho everywhere
        let kp = ConvexBody::parallel(k.clone(), 0.25).unwrap();
        assert!((kp.signed_distance([0.5, 0.5]) + 0.75).abs() < 1e-15);
        assert!((kp.signed_distance([2.0, 0.5]) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn parallel_projection_walks_along_the_normal_ray() {
        let k = unit_square();
        let kp = ConvexBody::parallel(k, 1.0).unwrap();
        // on the corner arc
        let x = [2.0, 2.0];
        let p = kp.project(x);
        let expect = [1.0 + 0.5f64.sqrt(), 1.0 + 0.5f64.sqrt()];
        assert!(dist(p, expect) < 1e-12);
        // inside stays put
        assert_eq!(kp.project([1.5, 0.5]), [1.5, 0.5]);
    }

    #[test]
    fn degenerate_polytopes_support_distance_queries() {
        let seg = ConvexBody::<2>::polytope(&[[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]]).unwrap();
        match &seg {
            ConvexBody::Polytope(p) => assert!(!p.is_full_dimensional()),
            _ => unreachable!(),
        }
        assert!((seg.distance([1.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn smoothness_accumulates_through_parallel_nesting() {
        let k = unit_square();
        assert_eq!(k.smoothness(), 0.0);
        let kp = ConvexBody::parallel(k, 0.5).unwrap();
        assert_eq!(kp.smoothness(), 0.5);
        let kpp = ConvexBody::parallel(kp, 0.25).unwrap();
        assert_eq!(kpp.smoothness(), 0.75);
        let b = ConvexBody::<2>::ball([1.0, 2.0], 2.0).unwrap();
        assert_eq!(b.smoothness(), 2.0);
    }

    #[test]
    fn json_round_trip() {
        let txt = r#"{"dim":2,"type":"polytope","vertices":[[0,0],[1,0],[1,1],[0,1]]}"#;
        let body = parse_body(txt).unwrap();
        let k = match body {
            AnyBody::D2(k) => k,
            _ => panic!("wrong dimension"),
        };
        let spec = k.to_spec();
        let back = serde_json::to_string(&spec).unwrap();
        let again = parse_body(&back).unwrap();
        assert_eq!(again.dim(), 2);

        let ball = r#"{"type":"ball","center":[0,0,0],"radius":1.5}"#;
        assert_eq!(parse_body(ball).unwrap().dim(), 3);

        let par = r#"{"type":"parallel","inner":{"type":"ball","center":[0,0],"radius":1},"rho":0.5}"#;
        assert_eq!(parse_body(par).unwrap().dim(), 2);
    }

    #[test]
    fn invalid_bodies_are_rejected() {
        assert!(parse_body(r#"{"type":"ball","center":[0,0],"radius":-1}"#).is_err());
        assert!(parse_body(r#"{"type":"polytope","vertices":[]}"#).is_err());
        assert!(parse_body(r#"{"type":"polytope","vertices":[[0,0,0,0]]}"#).is_err());
    }
}
