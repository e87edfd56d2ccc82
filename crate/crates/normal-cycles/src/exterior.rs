//! Exterior algebra over R^d for small d (at most 6 here).
//!
//! A `MultiVector` of degree m stores coefficients in the basis of blades
//! `e_I = e_{i1} ^ ... ^ e_{im}` with `i1 < ... < im`, ordered
//! lexicographically. Covectors of degree m use the dual basis, so the dual
//! pairing of a multivector with a form value is the plain dot product of
//! coefficient vectors, and the Euclidean norm of the coefficients is the
//! mass norm used in the pairing and wedge inequalities
//! `|xi ^ eta| <= |xi| |eta|` (for simple factors) and
//! `|<xi, Phi>| <= |xi| |Phi|`.

/// Lexicographically ordered m-element subsets of {0, .., dim-1}.
pub fn basis_blades(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..=dim.saturating_sub(left) {
            cur.push(i);
            rec(i + 1, dim, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, dim, degree, &mut Vec::new(), &mut out);
    out
}

/// Number of basis blades, C(dim, degree).
pub fn blade_count(dim: usize, degree: usize) -> usize {
    if degree > dim {
        return 0;
    }
    let mut c = 1usize;
    for i in 0..degree {
        c = c * (dim - i) / (i + 1);
    }
    c
}

/// Rank of a strictly increasing subset in the lexicographic order of
/// `basis_blades(dim, k)`.
fn blade_rank(dim: usize, blade: &[usize]) -> usize {
    let k = blade.len();
    let mut rank = 0usize;
    let mut prev: isize = -1;
    for (pos, &b) in blade.iter().enumerate() {
        for skipped in (prev + 1) as usize..b {
            rank += blade_count(dim - skipped - 1, k - pos - 1);
        }
        prev = b as isize;
    }
    rank
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl MultiVector {
    pub fn zero(dim: usize, degree: usize) -> Self {
        MultiVector {
            dim,
            degree,
            coeffs: vec![0.0; blade_count(dim, degree)],
        }
    }

    pub fn from_vector(v: &[f64]) -> Self {
        MultiVector {
            dim: v.len(),
            degree: 1,
            coeffs: v.to_vec(),
        }
    }

    /// The top-degree volume blade `e_1 ^ ... ^ e_dim`.
    pub fn volume_blade(dim: usize) -> Self {
        MultiVector {
            dim,
            degree: dim,
            coeffs: vec![1.0],
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        MultiVector {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| t * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        MultiVector {
            dim: self.dim,
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Dual pairing with a covector given in the dual blade basis.
    pub fn pair(&self, dual_coeffs: &[f64]) -> f64 {
        assert_eq!(self.coeffs.len(), dual_coeffs.len(), "degree mismatch in pairing");
        self.coeffs
            .iter()
            .zip(dual_coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn wedge(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let dim = self.dim;
        let deg = self.degree + other.degree;
        let mut out = MultiVector::zero(dim, deg);
        if deg > dim {
            return out;
        }
        let left = basis_blades(dim, self.degree);
        let right = basis_blades(dim, other.degree);
        for (i, bi) in left.iter().enumerate() {
            let a = self.coeffs[i];
            if a == 0.0 {
                continue;
            }
            'outer: for (j, bj) in right.iter().enumerate() {
                let b = other.coeffs[j];
                if b == 0.0 {
                    continue;
                }
                // merge with inversion-count sign; skip repeated indices
                let mut merged = Vec::with_capacity(deg);
                let mut sign = 1.0;
                let (mut p, mut q) = (0, 0);
                while p < bi.len() || q < bj.len() {
                    if q >= bj.len() || (p < bi.len() && bi[p] < bj[q]) {
                        merged.push(bi[p]);
                        p += 1;
                    } else if p < bi.len() && bi[p] == bj[q] {
                        continue 'outer;
                    } else {
                        // bj[q] jumps over the remaining entries of bi
                        if (bi.len() - p) % 2 == 1 {
                            sign = -sign;
                        }
                        merged.push(bj[q]);
                        q += 1;
                    }
                }
                let r = blade_rank(dim, &merged);
                out.coeffs[r] += sign * a * b;
            }
        }
        out
    }

    /// Pushforward along a linear map `m` (rows index the target space):
    /// the degree-m exterior power acts by minors,
    /// `(Lambda_m M e_I) = sum_J det(M[J, I]) e_J`.
    pub fn apply_linear(&self, m: &[Vec<f64>]) -> Self {
        let out_dim = m.len();
        let in_dim = self.dim;
        for row in m {
            assert_eq!(row.len(), in_dim, "matrix shape mismatch");
        }
        let k = self.degree;
        let src = basis_blades(in_dim, k);
        let dst = basis_blades(out_dim, k);
        let mut out = MultiVector::zero(out_dim, k);
        for (j, bj) in dst.iter().enumerate() {
            let mut acc = 0.0;
            for (i, bi) in src.iter().enumerate() {
                let a = self.coeffs[i];
                if a == 0.0 {
                    continue;
                }
                acc += a * minor_det(m, bj, bi);
            }
            out.coeffs[j] = acc;
        }
        out
    }
}

/// Full matrix of the degree-m exterior power: entry [J][I] = det(M[J, I]),
/// rows indexed by target blades, columns by source blades.
pub fn exterior_power_matrix(m: &[Vec<f64>], degree: usize) -> Vec<Vec<f64>> {
    let out_dim = m.len();
    let in_dim = if out_dim == 0 { 0 } else { m[0].len() };
    let dst = basis_blades(out_dim, degree);
    let src = basis_blades(in_dim, degree);
    dst.iter()
        .map(|bj| src.iter().map(|bi| minor_det(m, bj, bi)).collect())
        .collect()
}

fn minor_det(m: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => m[rows[0]][cols[0]],
        2 => {
            m[rows[0]][cols[0]] * m[rows[1]][cols[1]]
                - m[rows[0]][cols[1]] * m[rows[1]][cols[0]]
        }
        3 => {
            let a = |r: usize, c: usize| m[rows[r]][cols[c]];
            a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1))
                - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
                + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
        }
        _ => panic!("minor_det: degree {} not supported", rows.len()),
    }
}

/// Wedge of a list of vectors (a simple multivector).
pub fn wedge_of_vectors(vs: &[Vec<f64>]) -> MultiVector {
    let dim = vs[0].len();
    let mut acc = MultiVector::from_vector(&vs[0]);
    for v in &vs[1..] {
        assert_eq!(v.len(), dim);
        acc = acc.wedge(&MultiVector::from_vector(v));
    }
    acc
}
