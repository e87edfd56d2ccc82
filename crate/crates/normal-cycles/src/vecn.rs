//! Small fixed-dimension vector helpers over `[f64; N]`.
//!
//! The crate works in ambient dimensions 2 and 3 (and their doubles 4 and 6
//! for points of the sphere bundle), so plain arrays with free functions are
//! lighter than a generic linear-algebra dependency.

pub fn add<const N: usize>(a: [f64; N], b: [f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] + b[i])
}

pub fn sub<const N: usize>(a: [f64; N], b: [f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] - b[i])
}

pub fn scale<const N: usize>(t: f64, a: [f64; N]) -> [f64; N] {
    std::array::from_fn(|i| t * a[i])
}

/// `a + t * b`.
pub fn axpy<const N: usize>(a: [f64; N], t: f64, b: [f64; N]) -> [f64; N] {
    std::array::from_fn(|i| a[i] + t * b[i])
}

pub fn dot<const N: usize>(a: [f64; N], b: [f64; N]) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        s += a[i] * b[i];
    }
    s
}

pub fn norm<const N: usize>(a: [f64; N]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist<const N: usize>(a: [f64; N], b: [f64; N]) -> f64 {
    norm(sub(a, b))
}

/// Normalizes `a`; returns `None` for vectors shorter than `tiny`.
pub fn unit<const N: usize>(a: [f64; N]) -> Option<[f64; N]> {
    let n = norm(a);
    if n < 1e-300 {
        None
    } else {
        Some(scale(1.0 / n, a))
    }
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// 2D cross product (z-component of the 3D cross of the embeddings).
pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Rotates a 2D vector by +90 degrees.
pub fn perp(a: [f64; 2]) -> [f64; 2] {
    [-a[1], a[0]]
}

/// Concatenates a base point and a direction into a point of R^{2N}.
pub fn concat<const N: usize, const M: usize>(x: [f64; N], u: [f64; N]) -> [f64; M] {
    assert_eq!(M, 2 * N);
    std::array::from_fn(|i| if i < N { x[i] } else { u[i - N] })
}

/// Nearest point of the segment `[a, b]` to `p`.
pub fn project_segment<const N: usize>(p: [f64; N], a: [f64; N], b: [f64; N]) -> [f64; N] {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 <= 0.0 {
        return a;
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    axpy(a, t, ab)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_projection_clamps_to_endpoints() {
        let a = [0.0, 0.0];
        let b = [1.0, 0.0];
        assert_eq!(project_segment([-1.0, 1.0], a, b), a);
        assert_eq!(project_segment([2.0, -3.0], a, b), b);
        assert_eq!(project_segment([0.25, 7.0], a, b), [0.25, 0.0]);
    }

    #[test]
    fn cross2_is_signed_area() {
        assert_eq!(cross2([1.0, 0.0], [0.0, 1.0]), 1.0);
        assert_eq!(cross2([0.0, 1.0], [1.0, 0.0]), -1.0);
    }
}
