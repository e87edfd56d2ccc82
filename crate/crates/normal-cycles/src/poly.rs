//! Sparse multivariate polynomials with exact partial derivatives and
//! certified sup / Lipschitz bounds over axis-aligned boxes.
//!
//! Bounds are deliberately crude (triangle inequality term by term); they
//! only need to be valid upper bounds, not sharp ones.

use rand::Rng;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    /// (coefficient, exponent vector), exponents deduplicated and sorted.
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        if c != 0.0 {
            p.terms.push((c, vec![0; nvars]));
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly { nvars, terms: vec![(1.0, e)] }
    }

    pub fn from_terms(nvars: usize, terms: Vec<(f64, Vec<u32>)>) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (c, e) in terms {
            assert_eq!(e.len(), nvars);
            *map.entry(e).or_insert(0.0) += c;
        }
        Poly {
            nvars,
            terms: map
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(e, c)| (c, e))
                .collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Poly::from_terms(self.nvars, terms)
    }

    pub fn scale(&self, t: f64) -> Poly {
        Poly::from_terms(
            self.nvars,
            self.terms.iter().map(|(c, e)| (t * c, e.clone())).collect(),
        )
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = Vec::new();
        for (a, ea) in &self.terms {
            for (b, eb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                terms.push((a * b, e));
            }
        }
        Poly::from_terms(self.nvars, terms)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.nvars);
        let mut acc = 0.0;
        for (c, e) in &self.terms {
            let mut m = *c;
            for (zi, &ei) in z.iter().zip(e) {
                for _ in 0..ei {
                    m *= zi;
                }
            }
            acc += m;
        }
        acc
    }

    /// Exact partial derivative with respect to variable `i`.
    pub fn partial(&self, i: usize) -> Poly {
        assert!(i < self.nvars);
        let mut terms = Vec::new();
        for (c, e) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut en = e.clone();
            en[i] -= 1;
            terms.push((c * e[i] as f64, en));
        }
        Poly::from_terms(self.nvars, terms)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Certified upper bound on sup |p| over the box [lo, hi]:
    /// sum over terms of |c| * prod_i max(|lo_i|, |hi_i|)^{e_i}.
    pub fn sup_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        assert_eq!(lo.len(), self.nvars);
        assert_eq!(hi.len(), self.nvars);
        let mx: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs())).collect();
        let mut acc = 0.0;
        for (c, e) in &self.terms {
            let mut m = c.abs();
            for (&mi, &ei) in mx.iter().zip(e) {
                for _ in 0..ei {
                    m *= mi;
                }
            }
            acc += m;
        }
        acc
    }

    /// Certified Lipschitz bound over the box: Euclidean norm of the vector
    /// of per-variable sup bounds of the partial derivatives.
    pub fn lipschitz_bound(&self, lo: &[f64], hi: &[f64]) -> f64 {
        (0..self.nvars)
            .map(|i| {
                let b = self.partial(i).sup_bound(lo, hi);
                b * b
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Random sparse polynomial: `nterms` monomials of total degree at most
/// `max_degree`, coefficients uniform in [-1, 1].
pub fn random_poly<R: Rng>(rng: &mut R, nvars: usize, max_degree: u32, nterms: usize) -> Poly {
    let mut terms = Vec::with_capacity(nterms);
    for _ in 0..nterms {
        let c: f64 = rng.gen_range(-1.0..=1.0);
        let mut e = vec![0u32; nvars];
        let d = rng.gen_range(0..=max_degree);
        for _ in 0..d {
            e[rng.gen_range(0..nvars)] += 1;
        }
        terms.push((c, e));
    }
    Poly::from_terms(nvars, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_and_partial_agree_with_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = random_poly(&mut rng, 4, 3, 8);
            let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for i in 0..4 {
                let h = 1e-6;
                let mut zp = z.clone();
                zp[i] += h;
                let mut zm = z.clone();
                zm[i] -= h;
                let fd = (p.eval(&zp) - p.eval(&zm)) / (2.0 * h);
                let exact = p.partial(i).eval(&z);
                assert!(
                    (fd - exact).abs() < 1e-6 * (1.0 + exact.abs()),
                    "partial {i} mismatch: fd {fd}, exact {exact}"
                );
            }
        }
    }

    #[test]
    fn sup_bound_dominates_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let p = random_poly(&mut rng, 3, 4, 10);
            let lo = [-1.5, -0.5, -2.0];
            let hi = [0.5, 1.0, 0.25];
            let bound = p.sup_bound(&lo, &hi);
            for _ in 0..200 {
                let z: Vec<f64> = (0..3).map(|i| rng.gen_range(lo[i]..=hi[i])).collect();
                assert!(p.eval(&z).abs() <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn lipschitz_bound_dominates_sampled_difference_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let p = random_poly(&mut rng, 3, 3, 8);
            let lo = [-1.0, -1.0, -1.0];
            let hi = [1.0, 1.0, 1.0];
            let lip = p.lipschitz_bound(&lo, &hi);
            for _ in 0..200 {
                let a: Vec<f64> = (0..3).map(|i| rng.gen_range(lo[i]..=hi[i])).collect();
                let b: Vec<f64> = (0..3).map(|i| rng.gen_range(lo[i]..=hi[i])).collect();
                let dist: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                if dist < 1e-12 {
                    continue;
                }
                let dq = (p.eval(&a) - p.eval(&b)).abs() / dist;
                assert!(dq <= lip + 1e-9, "difference quotient {dq} exceeds bound {lip}");
            }
        }
    }

    #[test]
    fn arithmetic_identities() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        // (x + y)^2 = x^2 + 2xy + y^2
        let s = x.add(&y);
        let sq = s.mul(&s);
        let z = [0.7, -1.3];
        let expect = (z[0] + z[1]) * (z[0] + z[1]);
        assert!((sq.eval(&z) - expect).abs() < 1e-15);
        assert_eq!(sq.total_degree(), 2);
        assert_eq!(sq.terms.len(), 3);
    }
}
