//! Planar convex hulls with degenerate cases kept explicit.

use crate::vecn::{cross2, dist, sub};

/// Result of hulling a planar point cloud.
#[derive(Debug, Clone, PartialEq)]
pub enum Hull2 {
    Point([f64; 2]),
    /// Two distinct endpoints of a segment.
    Segment([f64; 2], [f64; 2]),
    /// At least three vertices, counter-clockwise, no three consecutive
    /// vertices collinear.
    Polygon(Vec<[f64; 2]>),
}

/// Andrew's monotone chain. Collinear points on the hull boundary are
/// dropped, so `Polygon` vertices are in strictly convex position.
pub fn convex_hull2(points: &[[f64; 2]]) -> Hull2 {
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |m, &c| m.max(c.abs()));
    // cross products of hull edge vectors scale like length^2, so the
    // collinearity threshold must be relative to scale^2 or tiny bodies
    // would collapse
    let eps = 1e-12 * scale * scale;

    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("non-finite vertex coordinate"));
    pts.dedup_by(|a, b| dist(*a, *b) <= 1e-12 * scale);
    if pts.is_empty() {
        panic!("convex_hull2 on empty point set");
    }
    if pts.len() == 1 {
        return Hull2::Point(pts[0]);
    }

    let build = |iter: &mut dyn Iterator<Item = [f64; 2]>| -> Vec<[f64; 2]> {
        let mut chain: Vec<[f64; 2]> = Vec::new();
        for p in iter {
            while chain.len() >= 2 {
                let a = chain[chain.len() - 2];
                let b = chain[chain.len() - 1];
                // keep only strict left turns
                if cross2(sub(b, a), sub(p, a)) <= eps {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(p);
        }
        chain
    };

    let lower = build(&mut pts.iter().copied());
    let upper = build(&mut pts.iter().rev().copied());

    let mut hull = lower;
    hull.pop();
    hull.extend(upper.iter().take(upper.len().saturating_sub(1)));

    if hull.len() <= 1 {
        // all points collinear: extremes are the sorted endpoints
        return Hull2::Segment(pts[0], *pts.last().unwrap());
    }
    if hull.len() == 2 {
        return Hull2::Segment(hull[0], hull[1]);
    }
    Hull2::Polygon(hull)
}

/// Signed area of a simple polygon (positive for counter-clockwise).
pub fn signed_area(vertices: &[[f64; 2]]) -> f64 {
    let mut s = 0.0;
    for i in 0..vertices.len() {
        let a = vertices[i];
        let b = vertices[(i + 1) % vertices.len()];
        s += cross2(a, b);
    }
    0.5 * s
}
