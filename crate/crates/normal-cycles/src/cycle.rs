//! Normal cycles of polytopes, balls and their parallel bodies.
//!
//! The normal bundle Nor K is covered by product patches: affine face
//! cells crossed with the spherical cells of their normal cones. The
//! orienting (n-1)-vector a_K on each patch is fixed by the positivity
//! rule
//!
//!   < /\_{n-1}(Pi_1 + rho Pi_2) a_K(x,u) ^ u, Omega_n >  >  0
//!
//! for every rho > 0, which in concrete terms says: edge tangents run
//! clockwise in 2D, facet frames wedge to the outward normal in 3D, and
//! fibers are oriented outward on the sphere. Parallel bodies reuse the
//! polytope patches through the offset map (x, u) -> (x + eps u, u); the
//! offset stretches fiber speeds by sqrt(1 + eps^2) per angular factor
//! and never flips the orientation sign.
//!
//! Evaluation T_K(phi) = int <a_K, phi> dH^{n-1} uses composite
//! Gauss-Legendre panels on affine and angular factors, a degree-5
//! triangle rule on facets, and recursive geodesic subdivision on
//! spherical cells; the error estimate is the difference between two
//! consecutive refinement levels.

use crate::body::{ConvexBody, Poly2};
use crate::error::{Error, Result};
use crate::exterior::{wedge_of_vectors, MultiVector};
use crate::face_measures::spherical_triangle_area;
use crate::forms::DifferentialForm;
use crate::hull3::Hull3;
use crate::poly::Poly;
use crate::smooth::{sample_support_element, transport, BodyPairContext, SupportElement};
use crate::vecn::{add, axpy, cross, cross2, dist, dot, norm, scale, sub, unit};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Gauss-Legendre 8-point rule on [-1, 1].
const GL8_X: [f64; 8] = [
    -0.9602898564975363,
    -0.7966664774136267,
    -0.5255324099163290,
    -0.1834346424956498,
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_W: [f64; 8] = [
    0.1012285362903763,
    0.2223810344533745,
    0.3137066458778873,
    0.3626837833783620,
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

/// One product cell of Nor K. The base lives in R^n offset by eps along
/// the fiber normal; the fiber is a cell of the unit sphere.
#[derive(Debug, Clone)]
pub struct NormalBundlePatch {
    pub ambient: usize,
    /// parallel-body offset of the underlying polytope cell
    pub epsilon: f64,
    pub kind: PatchKind,
}

#[derive(Debug, Clone)]
pub enum PatchKind {
    /// edge of a polygon crossed with its single outward normal
    EdgeTimesNormal2 {
        tail: [f64; 2],
        head: [f64; 2],
        u: [f64; 2],
    },
    /// polygon vertex crossed with its normal-cone arc, angles lifted so
    /// that from < to and the sweep is counterclockwise
    VertexTimesArc2 {
        vertex: [f64; 2],
        from: f64,
        to: f64,
    },
    /// facet polygon crossed with its outward normal
    FacetTimesNormal3 {
        ring: Vec<[f64; 3]>,
        normal: [f64; 3],
    },
    /// edge crossed with the dihedral arc u(t) = cos(t) p + sin(t) q,
    /// t in [0, angle]; the edge direction head - tail equals -(p x q),
    /// which is what the orientation rule demands
    EdgeTimesArc3 {
        tail: [f64; 3],
        head: [f64; 3],
        p: [f64; 3],
        q: [f64; 3],
        angle: f64,
    },
    /// vertex crossed with its normal-cone spherical polygon, stored as
    /// outward-oriented spherical triangles
    VertexTimesCell3 {
        vertex: [f64; 3],
        triangles: Vec<[[f64; 3]; 3]>,
    },
}

/// Quadrature node: position, normal, H^{n-1} weight and the unit simple
/// orienting (n-1)-vector in the lexicographic basis of R^{2n}.
#[derive(Debug, Clone)]
pub struct QuadNode {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub weight: f64,
    pub frame: MultiVector,
}

/// Innermost non-parallel body and the total smoothing radius wrapped
/// around it.
fn split_smooth<const N: usize>(body: &ConvexBody<N>) -> (&ConvexBody<N>, f64) {
    match body {
        ConvexBody::Parallel { inner, rho } => {
            let (core, eps) = split_smooth(inner);
            (core, eps + rho)
        }
        _ => (body, 0.0),
    }
}

pub fn normal_bundle<const N: usize>(body: &ConvexBody<N>) -> Result<Vec<NormalBundlePatch>> {
    match N {
        2 => bundle2(body),
        3 => bundle3(body),
        _ => Err(Error::DimensionMismatch { expected: 2, got: N }),
    }
}

fn bundle2<const N: usize>(body: &ConvexBody<N>) -> Result<Vec<NormalBundlePatch>> {
    let (core, eps) = split_smooth(body);
    let full_circle = |c: [f64; 2], r: f64| -> Result<Vec<NormalBundlePatch>> {
        if r <= 0.0 {
            return Err(Error::DegenerateBody(
                "a point has no normal cycle without smoothing".into(),
            ));
        }
        Ok(vec![NormalBundlePatch {
            ambient: 2,
            epsilon: r,
            kind: PatchKind::VertexTimesArc2 {
                vertex: c,
                from: 0.0,
                to: TAU,
            },
        }])
    };
    match core {
        ConvexBody::Ball { center, radius } => full_circle([center[0], center[1]], eps + radius),
        ConvexBody::Polytope(p) => match p.ring2() {
            Poly2::Point(v) => full_circle(*v, eps),
            Poly2::Segment(..) => Err(Error::DegenerateBody(
                "segment bodies are not covered by the patch generator".into(),
            )),
            Poly2::Polygon(_) => {
                let ring = p.ring2();
                let m = ring.n_vertices();
                let mut patches = Vec::with_capacity(2 * m);
                for i in 0..m {
                    let (tail, head, u, _len) = ring.edge(i);
                    patches.push(NormalBundlePatch {
                        ambient: 2,
                        epsilon: eps,
                        kind: PatchKind::EdgeTimesNormal2 { tail, head, u },
                    });
                }
                for i in 0..m {
                    // the arc at the shared vertex of edges i and i+1
                    let (_, vertex, n_in, _) = ring.edge(i);
                    let (_, _, n_out, _) = ring.edge((i + 1) % m);
                    let from = n_in[1].atan2(n_in[0]);
                    let mut to = n_out[1].atan2(n_out[0]);
                    while to <= from {
                        to += TAU;
                    }
                    patches.push(NormalBundlePatch {
                        ambient: 2,
                        epsilon: eps,
                        kind: PatchKind::VertexTimesArc2 { vertex, from, to },
                    });
                }
                Ok(patches)
            }
        },
        ConvexBody::Parallel { .. } => unreachable!("split_smooth strips parallel layers"),
    }
}

/// Eight outward-oriented octant triangles covering the unit sphere.
fn octant_triangles() -> Vec<[[f64; 3]; 3]> {
    let mut tris = Vec::with_capacity(8);
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0f64, -1.0] {
                let (a, b, c) = (
                    [sx, 0.0, 0.0],
                    [0.0, sy, 0.0],
                    [0.0, 0.0, sz],
                );
                if sx * sy * sz > 0.0 {
                    tris.push([a, b, c]);
                } else {
                    tris.push([a, c, b]);
                }
            }
        }
    }
    tris
}

fn bundle3<const N: usize>(body: &ConvexBody<N>) -> Result<Vec<NormalBundlePatch>> {
    let (core, eps) = split_smooth(body);
    let full_sphere = |c: [f64; 3], r: f64| -> Result<Vec<NormalBundlePatch>> {
        if r <= 0.0 {
            return Err(Error::DegenerateBody(
                "a point has no normal cycle without smoothing".into(),
            ));
        }
        Ok(vec![NormalBundlePatch {
            ambient: 3,
            epsilon: r,
            kind: PatchKind::VertexTimesCell3 {
                vertex: c,
                triangles: octant_triangles(),
            },
        }])
    };
    match core {
        ConvexBody::Ball { center, radius } => {
            full_sphere([center[0], center[1], center[2]], eps + radius)
        }
        ConvexBody::Polytope(p) => {
            let poly = match p.hull3() {
                Hull3::Point(v) => return full_sphere(*v, eps),
                Hull3::Solid(poly) => poly,
                _ => {
                    return Err(Error::DegenerateBody(
                        "lower-dimensional 3D bodies are not covered by the patch generator"
                            .into(),
                    ))
                }
            };
            let mut patches = Vec::new();
            for f in &poly.facets {
                patches.push(NormalBundlePatch {
                    ambient: 3,
                    epsilon: eps,
                    kind: PatchKind::FacetTimesNormal3 {
                        ring: f.ring.iter().map(|&vi| poly.vertices[vi]).collect(),
                        normal: f.normal,
                    },
                });
            }
            for e in &poly.edges {
                let n0 = poly.facets[e.facets[0]].normal;
                let n1 = poly.facets[e.facets[1]].normal;
                let p_axis = n0;
                let q_raw = axpy(n1, -dot(n1, n0), n0);
                let q_axis = unit(q_raw).ok_or_else(|| {
                    Error::DegenerateBody("coincident facet normals across an edge".into())
                })?;
                let angle = dot(n0, n1).clamp(-1.0, 1.0).acos();
                // the rule det[w, u', u] > 0 forces w = -(p x q)
                let w_req = scale(-1.0, cross(p_axis, q_axis));
                let (a, b) = (poly.vertices[e.ends[0]], poly.vertices[e.ends[1]]);
                let along = dot(sub(b, a), w_req);
                let (tail, head) = if along > 0.0 { (a, b) } else { (b, a) };
                patches.push(NormalBundlePatch {
                    ambient: 3,
                    epsilon: eps,
                    kind: PatchKind::EdgeTimesArc3 {
                        tail,
                        head,
                        p: p_axis,
                        q: q_axis,
                        angle,
                    },
                });
            }
            for (vi, facets) in poly.vertex_facets.iter().enumerate() {
                let normals: Vec<[f64; 3]> =
                    facets.iter().map(|&fi| poly.facets[fi].normal).collect();
                let centroid = unit(normals.iter().fold([0.0; 3], |acc, n| add(acc, *n)))
                    .ok_or_else(|| {
                        Error::DegenerateBody("vertex normal cone has no interior".into())
                    })?;
                let mut triangles = Vec::new();
                for k in 0..normals.len() {
                    let (b, c) = (normals[k], normals[(k + 1) % normals.len()]);
                    let orient = dot(centroid, cross(b, c));
                    if orient.abs() < 1e-14 {
                        continue;
                    }
                    if orient > 0.0 {
                        triangles.push([centroid, b, c]);
                    } else {
                        triangles.push([centroid, c, b]);
                    }
                }
                patches.push(NormalBundlePatch {
                    ambient: 3,
                    epsilon: eps,
                    kind: PatchKind::VertexTimesCell3 {
                        vertex: poly.vertices[vi],
                        triangles,
                    },
                });
            }
            Ok(patches)
        }
        ConvexBody::Parallel { .. } => unreachable!("split_smooth strips parallel layers"),
    }
}

/// Composite GL-8 nodes over [lo, hi] with 2^level panels: (t, weight).
fn gl_panels(lo: f64, hi: f64, level: usize) -> Vec<(f64, f64)> {
    let panels = 1usize << level;
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(8 * panels);
    for k in 0..panels {
        let a = lo + k as f64 * width;
        for (xi, wi) in GL8_X.iter().zip(&GL8_W) {
            out.push((a + (xi + 1.0) * 0.5 * width, wi * 0.5 * width));
        }
    }
    out
}

/// Degree-5 seven-point triangle rule: barycentric coordinates and
/// weights relative to the triangle area.
fn triangle_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 1200.0;
    let wb = (155.0 + s15) / 1200.0;
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 0.225),
        ([1.0 - 2.0 * a, a, a], wa),
        ([a, 1.0 - 2.0 * a, a], wa),
        ([a, a, 1.0 - 2.0 * a], wa),
        ([1.0 - 2.0 * b, b, b], wb),
        ([b, 1.0 - 2.0 * b, b], wb),
        ([b, b, 1.0 - 2.0 * b], wb),
    ]
}

fn split_triangle_flat(t: [[f64; 3]; 3], depth: usize, out: &mut Vec<[[f64; 3]; 3]>) {
    if depth == 0 {
        out.push(t);
        return;
    }
    let m01 = scale(0.5, add(t[0], t[1]));
    let m12 = scale(0.5, add(t[1], t[2]));
    let m20 = scale(0.5, add(t[2], t[0]));
    split_triangle_flat([t[0], m01, m20], depth - 1, out);
    split_triangle_flat([m01, t[1], m12], depth - 1, out);
    split_triangle_flat([m20, m12, t[2]], depth - 1, out);
    split_triangle_flat([m01, m12, m20], depth - 1, out);
}

fn split_triangle_sphere(t: [[f64; 3]; 3], depth: usize, out: &mut Vec<[[f64; 3]; 3]>) {
    if depth == 0 {
        out.push(t);
        return;
    }
    let m01 = unit(add(t[0], t[1])).expect("midpoint of non-antipodal unit vectors");
    let m12 = unit(add(t[1], t[2])).expect("midpoint of non-antipodal unit vectors");
    let m20 = unit(add(t[2], t[0])).expect("midpoint of non-antipodal unit vectors");
    split_triangle_sphere([t[0], m01, m20], depth - 1, out);
    split_triangle_sphere([m01, t[1], m12], depth - 1, out);
    split_triangle_sphere([m20, m12, t[2]], depth - 1, out);
    split_triangle_sphere([m01, m12, m20], depth - 1, out);
}

/// Orthonormal right-handed tangent frame (s1, s2) at u: s1 x s2 = u.
fn sphere_frame(u: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let k = (0..3).min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs())).unwrap();
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let s1 = unit(axpy(e, -dot(e, u), u)).expect("axis chosen away from u");
    let s2 = cross(u, s1);
    (s1, s2)
}

fn concat3(x: [f64; 3], y: [f64; 3]) -> Vec<f64> {
    vec![x[0], x[1], x[2], y[0], y[1], y[2]]
}

impl NormalBundlePatch {
    /// H^{n-1} measure of the patch inside Nor K.
    pub fn measure(&self) -> f64 {
        let eps = self.epsilon;
        match &self.kind {
            PatchKind::EdgeTimesNormal2 { tail, head, .. } => dist(*tail, *head),
            PatchKind::VertexTimesArc2 { from, to, .. } => {
                (to - from) * (1.0 + eps * eps).sqrt()
            }
            PatchKind::FacetTimesNormal3 { ring, .. } => {
                let mut area = 0.0;
                for k in 1..ring.len() - 1 {
                    area += 0.5 * norm(cross(sub(ring[k], ring[0]), sub(ring[k + 1], ring[0])));
                }
                area
            }
            PatchKind::EdgeTimesArc3 { tail, head, angle, .. } => {
                dist(*tail, *head) * angle * (1.0 + eps * eps).sqrt()
            }
            PatchKind::VertexTimesCell3 { triangles, .. } => {
                let solid: f64 = triangles
                    .iter()
                    .map(|t| spherical_triangle_area(t[0], t[1], t[2]))
                    .sum();
                solid * (1.0 + eps * eps)
            }
        }
    }

    /// Quadrature nodes at the given refinement level; level 0 is the
    /// base rule and each level strictly refines the previous one.
    pub fn nodes(&self, level: usize) -> Vec<QuadNode> {
        let eps = self.epsilon;
        match &self.kind {
            PatchKind::EdgeTimesNormal2 { tail, head, u } => {
                // clockwise tangent (u2, -u1) satisfies det[t, u] > 0
                let frame = MultiVector::from_vector(&[u[1], -u[0], 0.0, 0.0]);
                let len = dist(*tail, *head);
                let dir = scale(1.0 / len, sub(*head, *tail));
                gl_panels(0.0, len, level)
                    .into_iter()
                    .map(|(s, w)| {
                        let x = add(axpy(*tail, s, dir), scale(eps, *u));
                        QuadNode {
                            x: x.to_vec(),
                            u: u.to_vec(),
                            weight: w,
                            frame: frame.clone(),
                        }
                    })
                    .collect()
            }
            PatchKind::VertexTimesArc2 { vertex, from, to } => {
                let speed = (1.0 + eps * eps).sqrt();
                gl_panels(*from, *to, level)
                    .into_iter()
                    .map(|(th, w)| {
                        let u = [th.cos(), th.sin()];
                        let cw = [th.sin(), -th.cos()];
                        let frame = MultiVector::from_vector(&[
                            eps * cw[0] / speed,
                            eps * cw[1] / speed,
                            cw[0] / speed,
                            cw[1] / speed,
                        ]);
                        QuadNode {
                            x: axpy(*vertex, eps, u).to_vec(),
                            u: u.to_vec(),
                            weight: w * speed,
                            frame,
                        }
                    })
                    .collect()
            }
            PatchKind::FacetTimesNormal3 { ring, normal } => {
                let rule = triangle_rule();
                let mut fan = Vec::new();
                for k in 1..ring.len() - 1 {
                    let (mut b, mut c) = (ring[k], ring[k + 1]);
                    if dot(cross(sub(b, ring[0]), sub(c, ring[0])), *normal) < 0.0 {
                        std::mem::swap(&mut b, &mut c);
                    }
                    split_triangle_flat([ring[0], b, c], level, &mut fan);
                }
                // the oriented unit 2-vector of the facet plane is shared
                // by every positively oriented triangle in it
                let e = sub(fan[0][1], fan[0][0]);
                let f = sub(fan[0][2], fan[0][0]);
                let raw = wedge_of_vectors(&[concat3(e, [0.0; 3]), concat3(f, [0.0; 3])]);
                let frame = raw.scale(1.0 / raw.norm());
                let mut out = Vec::with_capacity(7 * fan.len());
                for t in fan {
                    let area = 0.5 * norm(cross(sub(t[1], t[0]), sub(t[2], t[0])));
                    for (bary, w) in rule {
                        let x = add(
                            add(scale(bary[0], t[0]), scale(bary[1], t[1])),
                            scale(bary[2], t[2]),
                        );
                        out.push(QuadNode {
                            x: axpy(x, eps, *normal).to_vec(),
                            u: normal.to_vec(),
                            weight: w * area,
                            frame: frame.clone(),
                        });
                    }
                }
                out
            }
            PatchKind::EdgeTimesArc3 { tail, head, p, q, angle } => {
                let len = dist(*tail, *head);
                let w_dir = scale(1.0 / len, sub(*head, *tail));
                let speed = (1.0 + eps * eps).sqrt();
                let s_nodes = gl_panels(0.0, len, level);
                let t_nodes = gl_panels(0.0, *angle, level);
                let mut out = Vec::with_capacity(s_nodes.len() * t_nodes.len());
                for (th, wt) in &t_nodes {
                    let u = add(scale(th.cos(), *p), scale(th.sin(), *q));
                    let du = add(scale(-th.sin(), *p), scale(th.cos(), *q));
                    let raw = wedge_of_vectors(&[
                        concat3(w_dir, [0.0; 3]),
                        concat3(scale(eps, du), du),
                    ]);
                    let frame = raw.scale(1.0 / speed);
                    for (s, ws) in &s_nodes {
                        let x = add(axpy(*tail, *s, w_dir), scale(eps, u));
                        out.push(QuadNode {
                            x: x.to_vec(),
                            u: u.to_vec(),
                            weight: ws * wt * speed,
                            frame: frame.clone(),
                        });
                    }
                }
                out
            }
            PatchKind::VertexTimesCell3 { vertex, triangles } => {
                let mut leaves = Vec::new();
                for t in triangles {
                    split_triangle_sphere(*t, level + 2, &mut leaves);
                }
                let metric = 1.0 + eps * eps;
                leaves
                    .into_iter()
                    .map(|t| {
                        let u = unit(add(add(t[0], t[1]), t[2]))
                            .expect("centroid of a small spherical triangle");
                        let area = spherical_triangle_area(t[0], t[1], t[2]);
                        let (s1, s2) = sphere_frame(u);
                        let raw = wedge_of_vectors(&[
                            concat3(scale(eps, s1), s1),
                            concat3(scale(eps, s2), s2),
                        ]);
                        QuadNode {
                            x: axpy(*vertex, eps, u).to_vec(),
                            u: u.to_vec(),
                            weight: area * metric,
                            frame: raw.scale(1.0 / metric),
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Sum of <a_K, phi> over all patch nodes; patches evaluate concurrently
/// but accumulate in patch order, so the result is reproducible.
pub fn evaluate_patches(
    patches: &[NormalBundlePatch],
    form: &DifferentialForm,
    level: usize,
) -> f64 {
    let partial: Vec<f64> = patches
        .par_iter()
        .map(|patch| {
            patch
                .nodes(level)
                .iter()
                .map(|nd| {
                    let mut z = nd.x.clone();
                    z.extend_from_slice(&nd.u);
                    nd.weight * nd.frame.pair(&form.eval(&z))
                })
                .sum()
        })
        .collect();
    partial.iter().sum()
}

/// T_K(phi) with an error estimate from differencing refinement levels.
pub fn evaluate_normal_cycle<const N: usize>(
    body: &ConvexBody<N>,
    form: &DifferentialForm,
    level: usize,
) -> Result<(f64, f64)> {
    if form.ambient != N {
        return Err(Error::DimensionMismatch {
            expected: N,
            got: form.ambient,
        });
    }
    let patches = normal_bundle(body)?;
    let level = level.max(1);
    let coarse = evaluate_patches(&patches, form, level - 1);
    let fine = evaluate_patches(&patches, form, level);
    Ok((fine, (fine - coarse).abs()))
}

/// Refines until err_est <= tol; fails with the last estimate if the
/// level budget runs out.
pub fn evaluate_to_tolerance<const N: usize>(
    body: &ConvexBody<N>,
    form: &DifferentialForm,
    tol: f64,
    max_level: usize,
) -> Result<(f64, f64)> {
    let mut last = f64::INFINITY;
    for level in 1..=max_level {
        let (v, err) = evaluate_normal_cycle(body, form, level)?;
        if err <= tol {
            return Ok((v, err));
        }
        last = err;
    }
    Err(Error::ToleranceUnachievable {
        requested: tol,
        achieved: last,
    })
}

#[derive(Debug, Clone)]
pub struct OrientationReport {
    pub nodes: usize,
    pub violations: usize,
    pub min_pairing: f64,
}

/// The pairing < /\_{n-1}(Pi_1 + rho Pi_2) a ^ u, Omega_n > at one node.
pub fn orientation_pairing(node: &QuadNode, rho: f64) -> f64 {
    let n = node.u.len();
    let mut m = vec![vec![0.0; 2 * n]; n];
    for i in 0..n {
        m[i][i] = 1.0;
        m[i][n + i] = rho;
    }
    let projected = node.frame.apply_linear(&m);
    let full = projected.wedge(&MultiVector::from_vector(&node.u));
    full.coeffs[0]
}

/// Checks the positivity rule at every quadrature node of every patch.
pub fn orientation_check(
    patches: &[NormalBundlePatch],
    level: usize,
    rhos: &[f64],
) -> OrientationReport {
    let mut report = OrientationReport {
        nodes: 0,
        violations: 0,
        min_pairing: f64::INFINITY,
    };
    for patch in patches {
        for node in patch.nodes(level) {
            report.nodes += 1;
            for &rho in rhos {
                let v = orientation_pairing(&node, rho);
                report.min_pairing = report.min_pairing.min(v);
                if v <= 0.0 {
                    report.violations += 1;
                }
            }
        }
    }
    report
}

/// Rows (eps, |T_{K_eps}(phi) - T_K(phi)|) over an epsilon grid.
pub fn parallel_rate_probe<const N: usize>(
    body: &ConvexBody<N>,
    form: &DifferentialForm,
    eps_grid: &[f64],
    level: usize,
) -> Result<Vec<(f64, f64)>> {
    if eps_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::Precondition(
            "rate probe needs an epsilon grid inside (0, 1]".into(),
        ));
    }
    let (base, _) = evaluate_normal_cycle(body, form, level)?;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let offset = ConvexBody::parallel(body.clone(), eps)?;
        let (v, _) = evaluate_normal_cycle(&offset, form, level)?;
        rows.push((eps, (v - base).abs()));
    }
    Ok(rows)
}

/// T_K(df) for a polynomial f on R^4; Nor K is a closed curve in 2D, so
/// the result must vanish up to quadrature error.
pub fn closedness_probe(body: &ConvexBody<2>, f: &Poly, level: usize) -> Result<f64> {
    let (lo, hi) = body.bounding_box();
    let pad = 1.0 + body.smoothness();
    let box_lo = vec![lo[0] - pad, lo[1] - pad, -1.0, -1.0];
    let box_hi = vec![hi[0] + pad, hi[1] + pad, 1.0, 1.0];
    let df = crate::forms::exact_differential(f, &box_lo, &box_hi)?;
    Ok(evaluate_normal_cycle(body, &df, level)?.0)
}

/// Local chart of the normal bundle of a smooth 2D body at one of its
/// support elements: either a flat stretch (u frozen) or a circular arc
/// (x glued to u). `margin` is the chart-parameter distance to the
/// nearest stratum boundary.
enum Chart2 {
    Edge { t_cw: [f64; 2] },
    Arc { center: [f64; 2], radius: f64, theta: f64 },
}

fn chart_point(chart: &Chart2, s: &SupportElement<2>, h: f64) -> SupportElement<2> {
    match chart {
        Chart2::Edge { t_cw } => SupportElement {
            x: axpy(s.x, h, *t_cw),
            u: s.u,
        },
        Chart2::Arc { center, radius, theta } => {
            let th = theta + h;
            let u = [th.cos(), th.sin()];
            SupportElement {
                x: axpy(*center, *radius, u),
                u,
            }
        }
    }
}

/// Clockwise unit tangent of Nor at the chart point, as a 4-vector; this
/// is the direction the orientation rule selects.
fn chart_cw_tangent(chart: &Chart2, u: [f64; 2]) -> [f64; 4] {
    match chart {
        Chart2::Edge { t_cw } => [t_cw[0], t_cw[1], 0.0, 0.0],
        Chart2::Arc { radius, theta, .. } => {
            let speed = (radius * radius + 1.0).sqrt();
            let cw = [theta.sin(), -theta.cos()];
            debug_assert!(cross2([radius * cw[0] + cw[0], radius * cw[1] + cw[1]], u) > 0.0);
            [
                radius * cw[0] / speed,
                radius * cw[1] / speed,
                cw[0] / speed,
                cw[1] / speed,
            ]
        }
    }
}

fn lift_angle(theta: f64, base: f64) -> f64 {
    let mut t = theta;
    while t < base {
        t += TAU;
    }
    while t >= base + TAU {
        t -= TAU;
    }
    t
}

/// Identifies the stratum of Nor K carrying the support element (x, u).
/// Returns None when the identification is ambiguous; the caller
/// resamples.
fn nor_chart_2d(k: &ConvexBody<2>, x: [f64; 2], u: [f64; 2]) -> Result<Option<(Chart2, f64)>> {
    let (core, eps) = split_smooth(k);
    if eps <= 0.0 {
        return Err(Error::Precondition(
            "normal bundle charts need a smooth body".into(),
        ));
    }
    let scale_tol = 1e-7 * (1.0 + k.circumradius());
    match core {
        ConvexBody::Ball { center, radius } => {
            let theta = u[1].atan2(u[0]);
            Ok(Some((
                Chart2::Arc {
                    center: *center,
                    radius: radius + eps,
                    theta,
                },
                f64::INFINITY,
            )))
        }
        ConvexBody::Polytope(p) => {
            let ring = p.ring2();
            if let Poly2::Point(v) = ring {
                let theta = u[1].atan2(u[0]);
                return Ok(Some((
                    Chart2::Arc {
                        center: *v,
                        radius: eps,
                        theta,
                    },
                    f64::INFINITY,
                )));
            }
            let m = ring.n_vertices();
            let pc = axpy(x, -eps, u);
            // vertex strata first: the support point sits on the vertex
            for i in 0..m {
                let (_, vertex, n_in, _) = ring.edge(i);
                if dist(pc, vertex) > scale_tol {
                    continue;
                }
                let (_, _, n_out, _) = ring.edge((i + 1) % m);
                let from = n_in[1].atan2(n_in[0]);
                let to = lift_angle(n_out[1].atan2(n_out[0]), from);
                let theta = lift_angle(u[1].atan2(u[0]), from);
                if theta > to {
                    return Ok(None);
                }
                let margin = (theta - from).min(to - theta);
                return Ok(Some((
                    Chart2::Arc {
                        center: vertex,
                        radius: eps,
                        theta,
                    },
                    margin,
                )));
            }
            for i in 0..m {
                let (tail, head, n, len) = ring.edge(i);
                let t_dir = scale(1.0 / len, sub(head, tail));
                let rel = sub(pc, tail);
                let along = dot(rel, t_dir);
                let off = cross2(rel, t_dir).abs();
                if off <= scale_tol && (-scale_tol..=len + scale_tol).contains(&along) {
                    if dot(u, n) < 1.0 - 1e-9 {
                        return Ok(None);
                    }
                    let margin = along.min(len - along);
                    return Ok(Some((Chart2::Edge { t_cw: [n[1], -n[0]] }, margin)));
                }
            }
            Ok(None)
        }
        ConvexBody::Parallel { .. } => unreachable!("split_smooth strips parallel layers"),
    }
}

#[derive(Debug, Clone)]
pub struct OrientationProbe {
    pub samples: usize,
    pub matched: usize,
    pub resampled: usize,
}

impl OrientationProbe {
    pub fn fraction(&self) -> f64 {
        self.matched as f64 / self.samples as f64
    }
}

/// Pushes sampled tangents of Nor K through a finite-difference
/// differential of G and compares the orientation sign against the
/// clockwise tangent of Nor L at the image point.
pub fn orientation_preservation_probe(
    ctx: &BodyPairContext<2>,
    samples: usize,
    seed: u64,
) -> Result<OrientationProbe> {
    if !ctx.orientation_regime() {
        return Err(Error::Precondition(
            "orientation probe needs delta < epsilon/(4n)".into(),
        ));
    }
    let h = 1e-5;
    let min_margin = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = OrientationProbe {
        samples,
        matched: 0,
        resampled: 0,
    };
    let mut done = 0usize;
    let mut attempts = 0usize;
    let attempt_cap = 60 * samples + 10_000;
    while done < samples {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::SolverStalled {
                iterations: attempts,
                context: "orientation probe kept hitting stratum boundaries".into(),
            });
        }
        let s = sample_support_element(&ctx.k, &mut rng);
        let Some((chart, margin)) = nor_chart_2d(&ctx.k, s.x, s.u)? else {
            probe.resampled += 1;
            continue;
        };
        if margin < min_margin {
            probe.resampled += 1;
            continue;
        }
        let sp = chart_point(&chart, &s, h);
        let sm = chart_point(&chart, &s, -h);
        let tau = [
            sp.x[0] - sm.x[0],
            sp.x[1] - sm.x[1],
            sp.u[0] - sm.u[0],
            sp.u[1] - sm.u[1],
        ];
        // orient tau by the rule at rho = 1 (the sign is rho-independent
        // on a genuine tangent)
        let sgn = cross2([tau[0] + tau[2], tau[1] + tau[3]], s.u);
        if sgn.abs() < 1e-12 {
            probe.resampled += 1;
            continue;
        }
        let sgn = sgn.signum();
        let g0 = transport(ctx, &s)?;
        let gp = transport(ctx, &sp)?;
        let gm = transport(ctx, &sm)?;
        let Some((chart_l, margin_l)) = nor_chart_2d(&ctx.l, g0.x, g0.u)? else {
            probe.resampled += 1;
            continue;
        };
        if margin_l < min_margin {
            probe.resampled += 1;
            continue;
        }
        let pushed = [
            sgn * (gp.x[0] - gm.x[0]),
            sgn * (gp.x[1] - gm.x[1]),
            sgn * (gp.u[0] - gm.u[0]),
            sgn * (gp.u[1] - gm.u[1]),
        ];
        let target = chart_cw_tangent(&chart_l, g0.u);
        if dot(pushed, target) > 0.0 {
            probe.matched += 1;
        }
        done += 1;
    }
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{regular_polygon, unit_cube, unit_square, ConvexBody};
    use crate::forms::{catalog, centered_box_2d, centered_box_3d, DifferentialForm};
    use crate::poly::{random_poly, Poly};
    use rand::Rng;
    use std::f64::consts::PI;

    fn perimeter_form() -> DifferentialForm {
        let (lo, hi) = centered_box_2d(8.0);
        catalog("perimeter2d", &lo, &hi).unwrap()
    }

    fn turning_form() -> DifferentialForm {
        let (lo, hi) = centered_box_2d(8.0);
        catalog("turning2d", &lo, &hi).unwrap()
    }

    #[test]
    fn square_patch_census() {
        let patches = normal_bundle(&unit_square()).unwrap();
        assert_eq!(patches.len(), 8);
        let edges: Vec<_> = patches
            .iter()
            .filter(|p| matches!(p.kind, PatchKind::EdgeTimesNormal2 { .. }))
            .collect();
        let arcs: Vec<_> = patches
            .iter()
            .filter(|p| matches!(p.kind, PatchKind::VertexTimesArc2 { .. }))
            .collect();
        assert_eq!((edges.len(), arcs.len()), (4, 4));
        let edge_len: f64 = edges.iter().map(|p| p.measure()).sum();
        let fiber_angle: f64 = arcs.iter().map(|p| p.measure()).sum();
        assert!((edge_len - 4.0).abs() < 1e-12);
        assert!((fiber_angle - TAU).abs() < 1e-12);
    }

    #[test]
    fn parallel_square_patches_are_offset_and_stretched() {
        let eps = 0.5;
        let body = ConvexBody::parallel(unit_square(), eps).unwrap();
        let patches = normal_bundle(&body).unwrap();
        assert_eq!(patches.len(), 8);
        for p in &patches {
            assert_eq!(p.epsilon, eps);
            for nd in p.nodes(1) {
                // every node sits on the boundary of the parallel body
                let x = [nd.x[0], nd.x[1]];
                assert!(body.signed_distance(x).abs() <= 1e-9);
            }
        }
        let arc_total: f64 = patches
            .iter()
            .filter(|p| matches!(p.kind, PatchKind::VertexTimesArc2 { .. }))
            .map(|p| p.measure())
            .sum();
        assert!((arc_total - TAU * (1.0 + eps * eps).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cube_patch_census() {
        let patches = normal_bundle(&unit_cube()).unwrap();
        let mut counts = [0usize; 3];
        for p in &patches {
            match p.kind {
                PatchKind::FacetTimesNormal3 { .. } => counts[0] += 1,
                PatchKind::EdgeTimesArc3 { .. } => counts[1] += 1,
                PatchKind::VertexTimesCell3 { .. } => counts[2] += 1,
                _ => panic!("2D patch on a cube"),
            }
        }
        assert_eq!(counts, [6, 12, 8]);
        for p in &patches {
            let m = p.measure();
            match p.kind {
                PatchKind::FacetTimesNormal3 { .. } => assert!((m - 1.0).abs() < 1e-12),
                PatchKind::EdgeTimesArc3 { .. } => assert!((m - PI / 2.0).abs() < 1e-12),
                PatchKind::VertexTimesCell3 { .. } => assert!((m - PI / 2.0).abs() < 1e-9),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn square_perimeter_and_turning_have_the_pinned_signs() {
        let sq = unit_square();
        let (per, err_per) = evaluate_normal_cycle(&sq, &perimeter_form(), 3).unwrap();
        assert!((per - 4.0).abs() <= 1e-10, "perimeter pairing {per}");
        assert!(err_per <= 1e-10);
        let (turn, err_turn) = evaluate_normal_cycle(&sq, &turning_form(), 3).unwrap();
        assert!((turn - TAU).abs() <= 1e-10, "turning pairing {turn}");
        assert!(err_turn <= 1e-10);
    }

    #[test]
    fn zero_form_evaluates_to_zero_exactly() {
        let zero = DifferentialForm::from_polys(
            "zero",
            2,
            vec![Poly::zero(4); 4],
            &centered_box_2d(4.0).0,
            &centered_box_2d(4.0).1,
        )
        .unwrap();
        let (v, e) = evaluate_normal_cycle(&unit_square(), &zero, 2).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn ball_normal_cycle_measures_its_perimeter() {
        // B(0, 1) built as a smoothed point
        let point = ConvexBody::polytope(&[[0.25, -0.5]]).unwrap();
        let ball = ConvexBody::parallel(point, 1.0).unwrap();
        let (v, err) = evaluate_normal_cycle(&ball, &perimeter_form(), 3).unwrap();
        assert!((v - TAU).abs() <= 1e-9, "{v}");
        assert!(err <= 1e-9);
        let (t, _) = evaluate_normal_cycle(&ball, &turning_form(), 3).unwrap();
        assert!((t - TAU).abs() <= 1e-9, "{t}");
    }

    #[test]
    fn evaluation_is_linear_in_the_form() {
        let body = regular_polygon(5, 1.3, [0.2, 0.1], 0.4);
        let (lo, hi) = centered_box_2d(8.0);
        let phi = catalog("poly:11", &lo, &hi).unwrap();
        let psi = catalog("poly:12", &lo, &hi).unwrap();
        let alpha = -1.7;
        let combo = DifferentialForm::combine(alpha, &phi, &psi);
        let (v_combo, _) = evaluate_normal_cycle(&body, &combo, 2).unwrap();
        let (v_phi, _) = evaluate_normal_cycle(&body, &phi, 2).unwrap();
        let (v_psi, _) = evaluate_normal_cycle(&body, &psi, 2).unwrap();
        assert!(
            (v_combo - (alpha * v_phi + v_psi)).abs() <= 1e-12 * (1.0 + v_combo.abs()),
            "{v_combo} vs {}",
            alpha * v_phi + v_psi
        );
    }

    #[test]
    fn rotations_commute_with_evaluation_through_the_pullback() {
        let body = regular_polygon(5, 1.1, [0.3, -0.2], 0.2);
        let angle = 0.7;
        let rotated = body.rotate(angle, [0.0, 0.0]);
        let (lo, hi) = centered_box_2d(8.0);
        for name in ["perimeter2d", "turning2d", "poly:5"] {
            let phi = catalog(name, &lo, &hi).unwrap();
            let c = angle.cos();
            let s = angle.sin();
            let g = vec![vec![c, -s], vec![s, c]];
            let pulled = phi.pullback_rotation(&g);
            let (v_rot, _) = evaluate_normal_cycle(&rotated, &phi, 3).unwrap();
            let (v_pull, _) = evaluate_normal_cycle(&body, &pulled, 3).unwrap();
            assert!(
                (v_rot - v_pull).abs() <= 1e-9 * (1.0 + v_rot.abs()),
                "{name}: {v_rot} vs {v_pull}"
            );
        }
    }

    #[test]
    fn orientation_rule_holds_at_every_node() {
        let rhos = [0.1, 1.0, 10.0];
        let bodies2: Vec<ConvexBody<2>> = vec![
            unit_square(),
            regular_polygon(7, 0.8, [0.1, 0.4], 0.15),
            ConvexBody::parallel(unit_square(), 0.6).unwrap(),
        ];
        for b in &bodies2 {
            let patches = normal_bundle(b).unwrap();
            let rep = orientation_check(&patches, 2, &rhos);
            assert_eq!(rep.violations, 0, "{rep:?}");
            assert!(rep.min_pairing > 0.0);
        }
        let bodies3: Vec<ConvexBody<3>> = vec![
            unit_cube(),
            ConvexBody::parallel(unit_cube(), 0.4).unwrap(),
        ];
        for b in &bodies3 {
            let patches = normal_bundle(b).unwrap();
            let rep = orientation_check(&patches, 1, &rhos);
            assert_eq!(rep.violations, 0, "{rep:?}");
            assert!(rep.min_pairing > 0.0);
        }
    }

    #[test]
    fn rate_probe_on_the_square_is_exactly_linear() {
        let grid = [0.1, 0.2, 0.4, 0.8, 1.0];
        let rows = parallel_rate_probe(&unit_square(), &perimeter_form(), &grid, 3).unwrap();
        for (eps, diff) in &rows {
            assert!((diff - TAU * eps).abs() <= 1e-10, "eps {eps}: {diff}");
        }
        let rows = parallel_rate_probe(&unit_square(), &turning_form(), &grid, 3).unwrap();
        for (eps, diff) in &rows {
            assert!(*diff <= 1e-10, "eps {eps}: {diff}");
        }
    }

    #[test]
    fn closed_forms_integrate_to_zero_over_the_closed_bundle() {
        let sq = unit_square();
        let f_x1 = Poly::var(4, 0);
        assert!(closedness_probe(&sq, &f_x1, 3).unwrap().abs() <= 1e-9);
        // f = x1^2 u2
        let f = Poly::var(4, 0).mul(&Poly::var(4, 0)).mul(&Poly::var(4, 3));
        assert!(closedness_probe(&sq, &f, 3).unwrap().abs() <= 1e-8);
        let constant = Poly::constant(4, 3.25);
        assert_eq!(closedness_probe(&sq, &constant, 2).unwrap(), 0.0);

        let pentagon = regular_polygon(5, 0.9, [0.05, -0.3], 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..6 {
            let f = random_poly(&mut rng, 4, 4, 5);
            for body in [&sq, &pentagon] {
                let v = closedness_probe(body, &f, 3).unwrap();
                assert!(v.abs() <= 1e-8, "T(df) = {v}");
            }
        }
    }

    #[test]
    fn cube_area_and_gauss_forms_match_steiner_values() {
        let (lo, hi) = centered_box_3d(8.0);
        let area = catalog("area3d", &lo, &hi).unwrap();
        let gauss = catalog("gauss3d", &lo, &hi).unwrap();
        let cube = unit_cube();
        let (a, _) = evaluate_normal_cycle(&cube, &area, 2).unwrap();
        assert!((a - 6.0).abs() <= 1e-9, "{a}");
        let (g, _) = evaluate_normal_cycle(&cube, &gauss, 1).unwrap();
        assert!((g - 2.0 * TAU).abs() <= 1e-9, "{g}");

        let eps = 0.3;
        let fat = ConvexBody::parallel(unit_cube(), eps).unwrap();
        let (a_eps, _) = evaluate_normal_cycle(&fat, &area, 2).unwrap();
        let expect = 6.0 + 6.0 * PI * eps + 2.0 * TAU * eps * eps;
        assert!((a_eps - expect).abs() <= 1e-9, "{a_eps} vs {expect}");
        let (g_eps, _) = evaluate_normal_cycle(&fat, &gauss, 1).unwrap();
        assert!((g_eps - 2.0 * TAU).abs() <= 1e-9, "{g_eps}");
    }

    #[test]
    fn random_polytope_total_curvature_is_a_full_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<[f64; 3]> = (0..40)
            .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
            .collect();
        let body: ConvexBody<3> = ConvexBody::polytope(&pts).unwrap();
        let (lo, hi) = centered_box_3d(8.0);
        let gauss = catalog("gauss3d", &lo, &hi).unwrap();
        let (g, _) = evaluate_normal_cycle(&body, &gauss, 1).unwrap();
        assert!((g - 2.0 * TAU).abs() <= 1e-9, "{g}");
    }

    #[test]
    fn degenerate_bodies_are_rejected() {
        let seg: ConvexBody<2> = ConvexBody::polytope(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert!(normal_bundle(&seg).is_err());
        let pt: ConvexBody<2> = ConvexBody::polytope(&[[0.0, 0.0]]).unwrap();
        assert!(normal_bundle(&pt).is_err());
        // dimension mismatch between body and form
        let cube = unit_cube();
        assert!(evaluate_normal_cycle(&cube, &perimeter_form(), 2).is_err());
    }

    #[test]
    fn orientation_probe_identity_and_concentric_balls() {
        let smooth_square = ConvexBody::parallel(unit_square(), 1.0).unwrap();
        let ctx =
            BodyPairContext::new(smooth_square.clone(), smooth_square, 1.0, 1e-7).unwrap();
        let probe = orientation_preservation_probe(&ctx, 1_000, 5).unwrap();
        assert_eq!(probe.matched, probe.samples, "{probe:?}");

        let point = ConvexBody::polytope(&[[0.0, 0.0]]).unwrap();
        let k = ConvexBody::parallel(point, 1.0).unwrap();
        let l = ConvexBody::parallel(ConvexBody::ball([0.0, 0.0], 0.01).unwrap(), 1.0).unwrap();
        let ctx = BodyPairContext::new(k, l, 1.0, 1e-5).unwrap();
        let probe = orientation_preservation_probe(&ctx, 1_000, 6).unwrap();
        assert_eq!(probe.matched, probe.samples, "{probe:?}");
    }

    #[test]
    fn orientation_probe_rotated_parallel_squares() {
        let eps = 1.0;
        let angle = 0.2f64.to_radians();
        let k = ConvexBody::parallel(unit_square(), eps).unwrap();
        let l = ConvexBody::parallel(unit_square().rotate(angle, [0.5, 0.5]), eps).unwrap();
        let ctx = BodyPairContext::new(k, l, eps, 1e-7).unwrap();
        // deep inside the regime: delta < eps/(8n)
        assert!(ctx.delta < eps / 16.0, "{}", ctx.delta);
        let probe = orientation_preservation_probe(&ctx, 2_000, 7).unwrap();
        assert_eq!(probe.matched, probe.samples, "{probe:?}");
    }
}
