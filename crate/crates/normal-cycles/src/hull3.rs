//! Incremental convex hulls in R^3 with a merged face lattice.
//!
//! The hull is first built as a triangulation, then coplanar triangles are
//! merged so that the combinatorics (facets, edges, vertex links) match the
//! geometric face lattice. Inputs are expected to be numerically benign
//! (exact or randomly perturbed coordinates); near-degenerate adversarial
//! clouds are outside the contract.

use crate::error::{Error, Result};
use crate::vecn::{add, cross, dist, dot, norm, scale, sub, unit};
use std::collections::BTreeMap;

/// A merged planar facet. `ring` lists vertex indices counter-clockwise as
/// seen from outside; consecutive ring vertices are genuine polygon corners.
#[derive(Debug, Clone)]
pub struct Facet {
    pub normal: [f64; 3],
    /// Support value of the facet plane: `normal . x = offset` on the plane.
    pub offset: f64,
    pub ring: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct EdgeInfo {
    pub ends: [usize; 2],
    pub facets: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct Polyhedron {
    pub vertices: Vec<[f64; 3]>,
    pub facets: Vec<Facet>,
    pub edges: Vec<EdgeInfo>,
    /// Facets incident to each vertex, in cyclic order around the vertex.
    pub vertex_facets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub enum Hull3 {
    Point([f64; 3]),
    Segment([f64; 3], [f64; 3]),
    /// Coplanar cloud: convex position vertices, counter-clockwise about
    /// `normal`.
    Planar {
        vertices: Vec<[f64; 3]>,
        normal: [f64; 3],
    },
    Solid(Polyhedron),
}

#[derive(Debug, Clone)]
struct Tri {
    v: [usize; 3],
    n: [f64; 3],
    off: f64,
    alive: bool,
}

fn tri_plane(pts: &[[f64; 3]], v: [usize; 3]) -> ([f64; 3], f64) {
    let n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
    let n = unit(n).expect("degenerate hull triangle");
    (n, dot(n, pts[v[0]]))
}

pub fn convex_hull3(points: &[[f64; 3]]) -> Result<Hull3> {
    if points.is_empty() {
        return Err(Error::DegenerateBody("empty point set".into()));
    }
    let coord_scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, &c| m.max(c.abs()));
    let eps = 1e-9 * (1.0 + coord_scale);

    let mut pts: Vec<[f64; 3]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("non-finite vertex coordinate"));
    pts.dedup_by(|a, b| dist(*a, *b) <= 1e-12 * (1.0 + coord_scale));

    // Initial simplex: spread apart as far as possible.
    let p0 = 0;
    let p1 = match (1..pts.len()).max_by(|&i, &j| {
        dist(pts[i], pts[p0])
            .partial_cmp(&dist(pts[j], pts[p0]))
            .unwrap()
    }) {
        Some(i) if dist(pts[i], pts[p0]) > eps => i,
        _ => return Ok(Hull3::Point(pts[p0])),
    };
    let line_dir = unit(sub(pts[p1], pts[p0])).unwrap();
    let line_dist = |q: [f64; 3]| {
        let d = sub(q, pts[p0]);
        norm(sub(d, scale(dot(d, line_dir), line_dir)))
    };
    let p2 = match (0..pts.len())
        .filter(|&i| i != p0 && i != p1)
        .max_by(|&i, &j| line_dist(pts[i]).partial_cmp(&line_dist(pts[j])).unwrap())
    {
        Some(i) if line_dist(pts[i]) > eps => i,
        _ => return Ok(Hull3::Segment(pts[p0], pts[p1])),
    };
    let (plane_n, plane_off) = tri_plane(&pts, [p0, p1, p2]);
    let p3 = match (0..pts.len())
        .filter(|&i| i != p0 && i != p1 && i != p2)
        .max_by(|&i, &j| {
            (dot(plane_n, pts[i]) - plane_off)
                .abs()
                .partial_cmp(&(dot(plane_n, pts[j]) - plane_off).abs())
                .unwrap()
        }) {
        Some(i) if (dot(plane_n, pts[i]) - plane_off).abs() > eps => i,
        _ => return planar_hull(&pts, plane_n),
    };

    // Orient the seed tetrahedron outward.
    let mut tris: Vec<Tri> = Vec::new();
    let seed = if dot(plane_n, pts[p3]) - plane_off > 0.0 {
        [[p0, p2, p1], [p0, p1, p3], [p1, p2, p3], [p2, p0, p3]]
    } else {
        [[p0, p1, p2], [p1, p0, p3], [p2, p1, p3], [p0, p2, p3]]
    };
    for v in seed {
        let (n, off) = tri_plane(&pts, v);
        tris.push(Tri { v, n, off, alive: true });
    }
    let interior = scale(
        0.25,
        add(add(pts[p0], pts[p1]), add(pts[p2], pts[p3])),
    );
    for t in &tris {
        debug_assert!(dot(t.n, interior) < t.off, "seed tetrahedron inside out");
    }

    for idx in 0..pts.len() {
        if idx == p0 || idx == p1 || idx == p2 || idx == p3 {
            continue;
        }
        let p = pts[idx];
        let visible: Vec<usize> = (0..tris.len())
            .filter(|&t| tris[t].alive && dot(tris[t].n, p) - tris[t].off > eps)
            .collect();
        if visible.is_empty() {
            continue; // interior (or on the boundary) of the current hull
        }
        // Map directed edges of alive triangles to their owner.
        let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (t, tri) in tris.iter().enumerate() {
            if !tri.alive {
                continue;
            }
            for k in 0..3 {
                owner.insert((tri.v[k], tri.v[(k + 1) % 3]), t);
            }
        }
        let is_visible = |t: usize, tris: &[Tri]| dot(tris[t].n, p) - tris[t].off > eps;
        let mut horizon: Vec<(usize, usize)> = Vec::new();
        for &t in &visible {
            let v = tris[t].v;
            for k in 0..3 {
                let (a, b) = (v[k], v[(k + 1) % 3]);
                let opp = *owner
                    .get(&(b, a))
                    .ok_or_else(|| Error::DegenerateBody("non-manifold hull state".into()))?;
                if !is_visible(opp, &tris) {
                    horizon.push((a, b));
                }
            }
        }
        for &t in &visible {
            tris[t].alive = false;
        }
        for (a, b) in horizon {
            let v = [a, b, idx];
            let (n, off) = tri_plane(&pts, v);
            if dot(n, interior) - off >= 0.0 {
                return Err(Error::DegenerateBody(
                    "hull update produced an inward facing triangle".into(),
                ));
            }
            tris.push(Tri { v, n, off, alive: true });
        }
    }
    tris.retain(|t| t.alive);

    merge_coplanar(&pts, &tris, coord_scale)
}

fn planar_hull(pts: &[[f64; 3]], n: [f64; 3]) -> Result<Hull3> {
    // Orthonormal basis of the plane.
    let a = unit(cross(n, if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] }))
        .expect("plane basis");
    let b = cross(n, a);
    let flat: Vec<[f64; 2]> = pts.iter().map(|&p| [dot(p, a), dot(p, b)]).collect();
    match crate::hull2::convex_hull2(&flat) {
        crate::hull2::Hull2::Point(_) => Ok(Hull3::Point(pts[0])),
        crate::hull2::Hull2::Segment(s, t) => {
            let lift = |q: [f64; 2]| {
                let in_plane = add(scale(q[0], a), scale(q[1], b));
                let off = dot(n, pts[0]);
                add(in_plane, scale(off, n))
            };
            Ok(Hull3::Segment(lift(s), lift(t)))
        }
        crate::hull2::Hull2::Polygon(ring) => {
            let off = dot(n, pts[0]);
            let lifted: Vec<[f64; 3]> = ring
                .iter()
                .map(|&q| add(add(scale(q[0], a), scale(q[1], b)), scale(off, n)))
                .collect();
            Ok(Hull3::Planar {
                vertices: lifted,
                normal: n,
            })
        }
    }
}

fn merge_coplanar(pts: &[[f64; 3]], tris: &[Tri], coord_scale: f64) -> Result<Hull3> {
    let angle_tol = 1e-9;
    let off_tol = 1e-9 * (1.0 + coord_scale);

    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for k in 0..3 {
            owner.insert((tri.v[k], tri.v[(k + 1) % 3]), t);
        }
    }

    // Group triangles into maximal coplanar patches.
    let mut group = vec![usize::MAX; tris.len()];
    let mut n_groups = 0;
    for start in 0..tris.len() {
        if group[start] != usize::MAX {
            continue;
        }
        let g = n_groups;
        n_groups += 1;
        let mut stack = vec![start];
        group[start] = g;
        while let Some(t) = stack.pop() {
            let v = tris[t].v;
            for k in 0..3 {
                let opp = owner[&(v[(k + 1) % 3], v[k])];
                if group[opp] == usize::MAX
                    && dot(tris[t].n, tris[opp].n) >= 1.0 - angle_tol
                    && (tris[t].off - tris[opp].off).abs() <= off_tol
                {
                    group[opp] = g;
                    stack.push(opp);
                }
            }
        }
    }

    // Boundary ring of each group, chained tail -> head.
    let mut facets: Vec<Facet> = Vec::new();
    for g in 0..n_groups {
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        let mut normal = [0.0; 3];
        for (t, tri) in tris.iter().enumerate() {
            if group[t] != g {
                continue;
            }
            normal = add(normal, cross(sub(pts[tri.v[1]], pts[tri.v[0]]), sub(pts[tri.v[2]], pts[tri.v[0]])));
            for k in 0..3 {
                let (a, b) = (tri.v[k], tri.v[(k + 1) % 3]);
                if group[owner[&(b, a)]] != g {
                    if next.insert(a, b).is_some() {
                        return Err(Error::DegenerateBody(
                            "merged facet boundary is not a simple cycle".into(),
                        ));
                    }
                }
            }
        }
        let normal = unit(normal).expect("zero-area facet group");
        let &start = next.keys().next().expect("facet group without boundary");
        let mut ring = vec![start];
        let mut cur = next[&start];
        while cur != start {
            ring.push(cur);
            cur = *next
                .get(&cur)
                .ok_or_else(|| Error::DegenerateBody("broken facet boundary chain".into()))?;
            if ring.len() > next.len() {
                return Err(Error::DegenerateBody("facet boundary chain loops".into()));
            }
        }
        if ring.len() != next.len() {
            return Err(Error::DegenerateBody(
                "merged facet boundary has several components".into(),
            ));
        }
        // Drop ring vertices that sit in the interior of a lattice edge.
        let col_tol = 1e-9 * (1.0 + coord_scale);
        loop {
            let m = ring.len();
            if m <= 3 {
                break;
            }
            let mut dropped = false;
            let mut kept: Vec<usize> = Vec::with_capacity(m);
            for i in 0..m {
                let a = pts[ring[(i + m - 1) % m]];
                let v = pts[ring[i]];
                let b = pts[ring[(i + 1) % m]];
                let area2 = norm(cross(sub(v, a), sub(b, a)));
                if area2 <= col_tol * norm(sub(b, a)).max(1e-300) {
                    dropped = true;
                } else {
                    kept.push(ring[i]);
                }
            }
            ring = kept;
            if !dropped {
                break;
            }
        }
        let offset = ring.iter().map(|&i| dot(normal, pts[i])).sum::<f64>() / ring.len() as f64;
        facets.push(Facet {
            normal,
            offset,
            ring,
        });
    }

    // Reindex vertices to those used by facet rings.
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &facets {
        for &v in &f.ring {
            let next_id = remap.len();
            remap.entry(v).or_insert(next_id);
        }
    }
    let mut vertices = vec![[0.0; 3]; remap.len()];
    for (&old, &new) in &remap {
        vertices[new] = pts[old];
    }
    for f in &mut facets {
        for v in &mut f.ring {
            *v = remap[v];
        }
    }

    // Lattice edges.
    let mut edge_map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (fi, f) in facets.iter().enumerate() {
        for i in 0..f.ring.len() {
            let a = f.ring[i];
            let b = f.ring[(i + 1) % f.ring.len()];
            let key = (a.min(b), a.max(b));
            edge_map.entry(key).or_default().push(fi);
        }
    }
    let mut edges = Vec::new();
    for ((a, b), fs) in &edge_map {
        if fs.len() != 2 {
            return Err(Error::DegenerateBody(format!(
                "lattice edge ({a},{b}) borders {} facets",
                fs.len()
            )));
        }
        edges.push(EdgeInfo {
            ends: [*a, *b],
            facets: [fs[0], fs[1]],
        });
    }

    // Cyclic facet order around each vertex.
    let mut out_head: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); vertices.len()];
    for (fi, f) in facets.iter().enumerate() {
        let m = f.ring.len();
        for i in 0..m {
            out_head[f.ring[i]].insert(fi, f.ring[(i + 1) % m]);
        }
    }
    let other_facet = |a: usize, b: usize, fi: usize| -> Result<usize> {
        let fs = &edge_map[&(a.min(b), a.max(b))];
        Ok(if fs[0] == fi { fs[1] } else { fs[0] })
    };
    let mut vertex_facets = Vec::with_capacity(vertices.len());
    for v in 0..vertices.len() {
        let incident = &out_head[v];
        let &first = incident.keys().next().expect("isolated hull vertex");
        let mut cyc = vec![first];
        let mut cur = first;
        loop {
            let head = incident[&cur];
            let nxt = other_facet(v, head, cur)?;
            if nxt == first {
                break;
            }
            cyc.push(nxt);
            cur = nxt;
            if cyc.len() > incident.len() {
                return Err(Error::DegenerateBody(format!(
                    "vertex {v} link is not a simple cycle"
                )));
            }
        }
        if cyc.len() != incident.len() {
            return Err(Error::DegenerateBody(format!(
                "vertex {v} link does not close up"
            )));
        }
        vertex_facets.push(cyc);
    }

    Ok(Hull3::Solid(Polyhedron {
        vertices,
        facets,
        edges,
        vertex_facets,
    }))
}

impl Polyhedron {
    /// Volume by the divergence theorem over fan triangles.
    pub fn volume(&self) -> f64 {
        let mut v6 = 0.0;
        for f in &self.facets {
            let o = self.vertices[f.ring[0]];
            for i in 1..f.ring.len() - 1 {
                let a = self.vertices[f.ring[i]];
                let b = self.vertices[f.ring[i + 1]];
                v6 += dot(o, cross(a, b));
            }
        }
        v6 / 6.0
    }

    pub fn facet_area(&self, fi: usize) -> f64 {
        let f = &self.facets[fi];
        let o = self.vertices[f.ring[0]];
        let mut s = [0.0; 3];
        for i in 1..f.ring.len() - 1 {
            let a = self.vertices[f.ring[i]];
            let b = self.vertices[f.ring[i + 1]];
            s = add(s, cross(sub(a, o), sub(b, o)));
        }
        0.5 * norm(s)
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.facets.len()).map(|f| self.facet_area(f)).sum()
    }

    pub fn contains(&self, x: [f64; 3], tol: f64) -> bool {
        self.facets
            .iter()
            .all(|f| dot(f.normal, x) <= f.offset + tol)
    }

    /// Nearest point of the solid to `x`.
    pub fn project(&self, x: [f64; 3]) -> [f64; 3] {
        if self.contains(x, 0.0) {
            return x;
        }
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for (fi, f) in self.facets.iter().enumerate() {
            let q = self.project_facet(fi, x);
            let d = dist(q, x);
            if d < best_d {
                best_d = d;
                best = q;
            }
            let _ = f;
        }
        best
    }

    /// Nearest point of the closed facet polygon `fi` to `x`.
    pub fn project_facet(&self, fi: usize, x: [f64; 3]) -> [f64; 3] {
        let f = &self.facets[fi];
        let q = sub(x, scale(dot(f.normal, x) - f.offset, f.normal));
        let m = f.ring.len();
        let mut inside = true;
        for i in 0..m {
            let a = self.vertices[f.ring[i]];
            let b = self.vertices[f.ring[(i + 1) % m]];
            if dot(cross(sub(b, a), sub(q, a)), f.normal) < 0.0 {
                inside = false;
                break;
            }
        }
        if inside {
            return q;
        }
        let mut best = self.vertices[f.ring[0]];
        let mut best_d = f64::INFINITY;
        for i in 0..m {
            let a = self.vertices[f.ring[i]];
            let b = self.vertices[f.ring[(i + 1) % m]];
            let c = crate::vecn::project_segment(x, a, b);
            let d = dist(c, x);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    }
}
