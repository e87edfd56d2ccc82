//! Exact support measures of polytopes from the face / normal-cone
//! decomposition of the boundary.
//!
//! Every i-face F of a polytope P carries the product of H^i restricted to
//! F and the spherical measure of its normal cone N(P,F) intersected with
//! S^{n-1}. Scaled by 1/((n-i) kappa_{n-i}) these products are exactly the
//! support measures Lambda_i(P, .) obtained by radial integration over the
//! parallel shell; total masses are the intrinsic volumes.
//!
//! The normal cones of all faces tile the sphere: vertex cells alone cover
//! it up to measure zero (arcs in 2D, spherical polygons in 3D), which the
//! tests pin down as 2 pi and 4 pi totals.

use crate::body::{Poly2, Polytope};
use crate::error::{Error, Result};
use crate::hull3::{Hull3, Polyhedron};
use crate::measure::DiscreteMeasure;
use crate::unit_ball_volume;
use crate::vecn::{add, dist, dot, norm, scale, sub, unit};

/// Spherical cell of directions attached to a face.
#[derive(Debug, Clone)]
pub enum NormalCell {
    /// Single outward direction (facets; 2D edges).
    Point(Vec<f64>),
    /// 2D vertex cone: angles [a0, a1] swept counter-clockwise, a1 > a0.
    PlanarArc { a0: f64, a1: f64 },
    /// 3D edge cone: great-circle arc between adjacent facet normals.
    GreatArc { from: [f64; 3], to: [f64; 3] },
    /// 3D vertex cone: convex spherical polygon of incident facet normals.
    SphericalPolygon(Vec<[f64; 3]>),
}

#[derive(Debug, Clone)]
pub struct FaceCell {
    pub face_dim: usize,
    /// Vertex list of the affine face (1 point, 2 edge ends, facet ring).
    pub face_geometry: Vec<Vec<f64>>,
    pub normal_cell: NormalCell,
    /// H^i of the face.
    pub face_measure: f64,
    /// H^{n-1-i} of the normal cone on the sphere (counting measure for
    /// Point cells).
    pub normal_measure: f64,
}

/// Complete stratification of the boundary of a full-dimensional polytope.
pub fn face_decomposition<const N: usize>(p: &Polytope<N>) -> Result<Vec<FaceCell>> {
    if !p.is_full_dimensional() {
        return Err(Error::DegenerateBody(
            "face decomposition needs a full-dimensional polytope".into(),
        ));
    }
    match N {
        2 => Ok(decomp2(p.ring2())),
        3 => decomp3(match p.hull3() {
            Hull3::Solid(poly) => poly,
            _ => unreachable!("full-dimensional 3D polytope must be solid"),
        }),
        _ => Err(Error::DimensionMismatch { expected: 2, got: N }),
    }
}

fn decomp2(ring: &Poly2) -> Vec<FaceCell> {
    let verts = ring.vertices();
    let m = verts.len();
    let mut cells = Vec::with_capacity(2 * m);
    for i in 0..m {
        let (a, b, n, len) = ring.edge(i);
        cells.push(FaceCell {
            face_dim: 1,
            face_geometry: vec![a.to_vec(), b.to_vec()],
            normal_cell: NormalCell::Point(n.to_vec()),
            face_measure: len,
            normal_measure: 1.0,
        });
    }
    for i in 0..m {
        // normal cone at vertex i spans from the normal of the incoming
        // edge (i-1 -> i) to the normal of the outgoing edge (i -> i+1)
        let (.., n_in, _) = ring.edge((i + m - 1) % m);
        let (.., n_out, _) = ring.edge(i);
        let a0 = n_in[1].atan2(n_in[0]);
        let mut a1 = n_out[1].atan2(n_out[0]);
        // CCW ring: normals advance counter-clockwise by the exterior angle
        while a1 <= a0 {
            a1 += 2.0 * std::f64::consts::PI;
        }
        cells.push(FaceCell {
            face_dim: 0,
            face_geometry: vec![verts[i].to_vec()],
            normal_cell: NormalCell::PlanarArc { a0, a1 },
            face_measure: 1.0,
            normal_measure: a1 - a0,
        });
    }
    cells
}

fn decomp3(poly: &Polyhedron) -> Result<Vec<FaceCell>> {
    let mut cells = Vec::new();
    for (fi, f) in poly.facets.iter().enumerate() {
        cells.push(FaceCell {
            face_dim: 2,
            face_geometry: f.ring.iter().map(|&v| poly.vertices[v].to_vec()).collect(),
            normal_cell: NormalCell::Point(f.normal.to_vec()),
            face_measure: poly.facet_area(fi),
            normal_measure: 1.0,
        });
    }
    for e in &poly.edges {
        let (a, b) = (poly.vertices[e.ends[0]], poly.vertices[e.ends[1]]);
        let n0 = poly.facets[e.facets[0]].normal;
        let n1 = poly.facets[e.facets[1]].normal;
        let angle = dot(n0, n1).clamp(-1.0, 1.0).acos();
        cells.push(FaceCell {
            face_dim: 1,
            face_geometry: vec![a.to_vec(), b.to_vec()],
            normal_cell: NormalCell::GreatArc { from: n0, to: n1 },
            face_measure: dist(a, b),
            normal_measure: angle,
        });
    }
    for (vi, incident) in poly.vertex_facets.iter().enumerate() {
        let ring: Vec<[f64; 3]> = incident.iter().map(|&fi| poly.facets[fi].normal).collect();
        if ring.len() < 3 {
            return Err(Error::DegenerateBody(format!(
                "vertex {vi} has fewer than 3 incident facets"
            )));
        }
        let area = spherical_polygon_area(&ring);
        cells.push(FaceCell {
            face_dim: 0,
            face_geometry: vec![poly.vertices[vi].to_vec()],
            normal_cell: NormalCell::SphericalPolygon(ring),
            face_measure: 1.0,
            normal_measure: area,
        });
    }
    Ok(cells)
}

/// Area of a convex spherical polygon by angle excess:
/// sum of interior angles minus (k-2) pi.
pub fn spherical_polygon_area(verts: &[[f64; 3]]) -> f64 {
    let k = verts.len();
    let mut total = 0.0;
    for j in 0..k {
        let p = verts[j];
        let prev = verts[(j + k - 1) % k];
        let next = verts[(j + 1) % k];
        // tangents of the great-circle arcs leaving p
        let t0 = unit(sub(prev, scale(dot(prev, p), p))).expect("repeated spherical vertex");
        let t1 = unit(sub(next, scale(dot(next, p), p))).expect("repeated spherical vertex");
        total += dot(t0, t1).clamp(-1.0, 1.0).acos();
    }
    total - (k as f64 - 2.0) * std::f64::consts::PI
}

/// Solid angle of a spherical triangle (Van Oosterom-Strackee), robust for
/// small triangles.
pub fn spherical_triangle_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let cross_bc = crate::vecn::cross(b, c);
    let num = dot(a, cross_bc).abs();
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

/// Intrinsic volume V_i(P) = total mass of Lambda_i(P, .).
pub fn intrinsic_volume<const N: usize>(p: &Polytope<N>, i: usize) -> Result<f64> {
    if i >= N {
        return Err(Error::Precondition(format!("intrinsic volume index {i} out of range for n={N}")));
    }
    let norm_const = (N - i) as f64 * unit_ball_volume(N - i);
    Ok(face_decomposition(p)?
        .iter()
        .filter(|c| c.face_dim == i)
        .map(|c| c.face_measure * c.normal_measure / norm_const)
        .sum())
}

/// Conversion between the two normalizations in use for support measures:
/// n kappa_{n-i} Lambda_i = C(n,i) Theta_i.
pub fn theta_from_lambda(n: usize, i: usize, lambda_mass: f64) -> f64 {
    let binom = match (n, i) {
        (_, 0) => 1.0,
        (n, i) if i == n => 1.0,
        (2, 1) => 2.0,
        (3, 1) | (3, 2) => 3.0,
        _ => panic!("binomial for n={n}, i={i} not tabulated"),
    };
    n as f64 * unit_ball_volume(n - i) * lambda_mass / binom
}

/// Quadrature discretization of Lambda_i(P, .): every i-face cell is meshed
/// into product subcells of diameter at most h in both factors, one atom at
/// each centroid pair. Returns the measure and the coarsening bound
/// h * total_mass on d_bL(discretization, true measure): a 1-Lipschitz test
/// function moves by at most the cell radius across each subcell.
pub fn exact_support_measure<const N: usize>(
    p: &Polytope<N>,
    i: usize,
    h: f64,
) -> Result<(DiscreteMeasure, f64)> {
    if i >= N {
        return Err(Error::Precondition(format!("support measure index {i} out of range for n={N}")));
    }
    if !(h > 0.0) {
        return Err(Error::Precondition("mesh size must be positive".into()));
    }
    let norm_const = (N - i) as f64 * unit_ball_volume(N - i);
    let mut out = DiscreteMeasure::new(false);
    for cell in face_decomposition(p)?.iter().filter(|c| c.face_dim == i) {
        let base: Vec<(Vec<f64>, f64)> = match cell.face_dim {
            0 => vec![(cell.face_geometry[0].clone(), 1.0)],
            1 => mesh_segment(&cell.face_geometry[0], &cell.face_geometry[1], h),
            2 => mesh_polygon3(&cell.face_geometry, h),
            _ => unreachable!(),
        };
        let fiber: Vec<(Vec<f64>, f64)> = match &cell.normal_cell {
            NormalCell::Point(u) => vec![(u.clone(), 1.0)],
            NormalCell::PlanarArc { a0, a1 } => mesh_planar_arc(*a0, *a1, h),
            NormalCell::GreatArc { from, to } => mesh_great_arc(*from, *to, h),
            NormalCell::SphericalPolygon(verts) => mesh_spherical_polygon(verts, h),
        };
        for (x, mx) in &base {
            for (u, mu) in &fiber {
                out.push(x.clone(), u.clone(), mx * mu / norm_const);
            }
        }
    }
    let bound = h * out.total_mass();
    Ok((out, bound))
}

fn mesh_segment(a: &[f64], b: &[f64], h: f64) -> Vec<(Vec<f64>, f64)> {
    let len: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let parts = (len / h).ceil().max(1.0) as usize;
    (0..parts)
        .map(|k| {
            let t = (k as f64 + 0.5) / parts as f64;
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
            (mid, len / parts as f64)
        })
        .collect()
}

fn mesh_planar_arc(a0: f64, a1: f64, h: f64) -> Vec<(Vec<f64>, f64)> {
    let sweep = a1 - a0;
    let parts = (sweep / h).ceil().max(1.0) as usize;
    (0..parts)
        .map(|k| {
            let t = a0 + sweep * (k as f64 + 0.5) / parts as f64;
            (vec![t.cos(), t.sin()], sweep / parts as f64)
        })
        .collect()
}

fn mesh_great_arc(from: [f64; 3], to: [f64; 3], h: f64) -> Vec<(Vec<f64>, f64)> {
    let total = dot(from, to).clamp(-1.0, 1.0).acos();
    if total < 1e-15 {
        return vec![(from.to_vec(), total)];
    }
    let parts = (total / h).ceil().max(1.0) as usize;
    let sin_total = total.sin();
    (0..parts)
        .map(|k| {
            let t = (k as f64 + 0.5) / parts as f64;
            // slerp midpoint of the k-th arc piece
            let w0 = ((1.0 - t) * total).sin() / sin_total;
            let w1 = (t * total).sin() / sin_total;
            let mid = unit(add(scale(w0, from), scale(w1, to))).expect("degenerate arc");
            (mid.to_vec(), total / parts as f64)
        })
        .collect()
}

/// Mesh a planar facet ring in R^3: fan-triangulate about the ring centroid
/// and split triangles by edge midpoints until the diameter is below h.
fn mesh_polygon3(ring: &[Vec<f64>], h: f64) -> Vec<(Vec<f64>, f64)> {
    let k = ring.len();
    let to3 = |v: &Vec<f64>| -> [f64; 3] { [v[0], v[1], v[2]] };
    let mut centroid = [0.0; 3];
    for v in ring {
        centroid = add(centroid, to3(v));
    }
    let centroid = scale(1.0 / k as f64, centroid);
    let mut out = Vec::new();
    for j in 0..k {
        let tri = [centroid, to3(&ring[j]), to3(&ring[(j + 1) % k])];
        mesh_triangle_rec(tri, h, &mut out, 0);
    }
    out
}

fn mesh_triangle_rec(tri: [[f64; 3]; 3], h: f64, out: &mut Vec<(Vec<f64>, f64)>, depth: usize) {
    let diam = dist(tri[0], tri[1])
        .max(dist(tri[1], tri[2]))
        .max(dist(tri[2], tri[0]));
    if diam <= h || depth >= 12 {
        let area = 0.5 * norm(crate::vecn::cross(sub(tri[1], tri[0]), sub(tri[2], tri[0])));
        let c = scale(1.0 / 3.0, add(add(tri[0], tri[1]), tri[2]));
        out.push((c.to_vec(), area));
        return;
    }
    let m01 = scale(0.5, add(tri[0], tri[1]));
    let m12 = scale(0.5, add(tri[1], tri[2]));
    let m20 = scale(0.5, add(tri[2], tri[0]));
    for t in [
        [tri[0], m01, m20],
        [m01, tri[1], m12],
        [m20, m12, tri[2]],
        [m01, m12, m20],
    ] {
        mesh_triangle_rec(t, h, out, depth + 1);
    }
}

/// Mesh a convex spherical polygon: fan about the first vertex, then split
/// spherical triangles by normalized edge midpoints until chords are below h.
fn mesh_spherical_polygon(verts: &[[f64; 3]], h: f64) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::new();
    for j in 1..verts.len() - 1 {
        mesh_sph_tri_rec([verts[0], verts[j], verts[j + 1]], h, &mut out, 0);
    }
    out
}

fn mesh_sph_tri_rec(tri: [[f64; 3]; 3], h: f64, out: &mut Vec<(Vec<f64>, f64)>, depth: usize) {
    let diam = dist(tri[0], tri[1])
        .max(dist(tri[1], tri[2]))
        .max(dist(tri[2], tri[0]));
    if diam <= h || depth >= 12 {
        let area = spherical_triangle_area(tri[0], tri[1], tri[2]);
        if area > 0.0 {
            let c = unit(add(add(tri[0], tri[1]), tri[2])).expect("degenerate spherical cell");
            out.push((c.to_vec(), area));
        }
        return;
    }
    let mid = |a: [f64; 3], b: [f64; 3]| unit(add(a, b)).expect("antipodal midpoint");
    let (m01, m12, m20) = (mid(tri[0], tri[1]), mid(tri[1], tri[2]), mid(tri[2], tri[0]));
    for t in [
        [tri[0], m01, m20],
        [m01, tri[1], m12],
        [m20, m12, tri[2]],
        [m01, m12, m20],
    ] {
        mesh_sph_tri_rec(t, h, out, depth + 1);
    }
}
