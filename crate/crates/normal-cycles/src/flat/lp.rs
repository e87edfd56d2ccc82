//! Exact LP oracle for the bounded Lipschitz distance.
//!
//! Substituting g = f + 1 in [0, 2] makes every variable nonnegative and
//! every right-hand side nonnegative, so the slack basis is feasible and a
//! single-phase dense simplex suffices. Lipschitz rows |g_k - g_l| <= d_kl
//! are generated lazily: pairs at distance >= 2 are implied by the box and
//! never added, the rest only when the current solution violates them.
//! Bland's rule keeps every solve finite.

use super::{DblCertificate, DblInstance};
use crate::error::{Error, Result};

pub const DEFAULT_LP_CAP: usize = 400;

const PIVOT_TOL: f64 = 1e-11;
const VIOLATION_TOL: f64 = 1e-10;

/// One inequality sum coeff_j g_j <= rhs with at most two structural terms.
#[derive(Clone, Copy)]
struct Row {
    plus: usize,
    minus: Option<usize>,
    rhs: f64,
}

pub fn dbl_lp(inst: &DblInstance) -> Result<DblCertificate> {
    if inst.len() > DEFAULT_LP_CAP {
        return Err(Error::Precondition(format!(
            "LP oracle capped at {DEFAULT_LP_CAP} atoms, got {}; use dbl_flow",
            inst.len()
        )));
    }
    let (canon, flipped) = inst.canonical();
    let n = canon.len();

    // box rows g_k <= 2 are always present
    let mut rows: Vec<Row> = (0..n).map(|k| Row { plus: k, minus: None, rhs: 2.0 }).collect();
    let w_sum: f64 = canon.weights.iter().sum();

    let mut g = vec![0.0; n];
    for round in 0..200 {
        g = simplex_max(&canon.weights, &rows)?;

        // collect violated Lipschitz rows, most violated first
        let mut violated: Vec<(f64, Row)> = Vec::new();
        for k in 0..n {
            for l in k + 1..n {
                let d = canon.distance(k, l);
                if d >= 2.0 {
                    continue;
                }
                let gap = g[k] - g[l];
                if gap > d + VIOLATION_TOL {
                    violated.push((gap - d, Row { plus: k, minus: Some(l), rhs: d }));
                } else if -gap > d + VIOLATION_TOL {
                    violated.push((-gap - d, Row { plus: l, minus: Some(k), rhs: d }));
                }
            }
        }
        if violated.is_empty() {
            let f: Vec<f64> = g.iter().map(|gk| gk - 1.0).collect();
            let value: f64 = canon.weights.iter().zip(&g).map(|(w, gk)| w * gk).sum::<f64>() - w_sum;
            let f_out: Vec<f64> = if flipped { f.iter().map(|v| -v).collect() } else { f };
            return Ok(DblCertificate::verify(inst, value, &f_out, None));
        }
        violated.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        violated.truncate(4 * n.max(8));
        rows.extend(violated.into_iter().map(|(_, r)| r));
        if round == 199 {
            return Err(Error::SolverStalled {
                iterations: 200,
                context: "LP row generation did not close".into(),
            });
        }
    }
    unreachable!()
}

/// maximize c . g over the rows (all rhs >= 0, g >= 0) by a dense tableau
/// simplex starting from the slack basis, Bland's rule throughout.
fn simplex_max(c: &[f64], rows: &[Row]) -> Result<Vec<f64>> {
    let n = c.len();
    let m = rows.len();
    let cols = n + m + 1; // structural, slack, rhs
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (r, row) in rows.iter().enumerate() {
        let mut line = vec![0.0; cols];
        line[row.plus] = 1.0;
        if let Some(minus) = row.minus {
            line[minus] = -1.0;
        }
        line[n + r] = 1.0;
        line[cols - 1] = row.rhs;
        t.push(line);
    }
    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_iters = 60 * (n + m) + 1000;
    for _ in 0..max_iters {
        // Bland: entering variable with the smallest index
        let Some(enter) = (0..n + m).find(|&j| obj[j] > PIVOT_TOL) else {
            let mut g = vec![0.0; n];
            for (r, &b) in basis.iter().enumerate() {
                if b < n {
                    g[b] = t[r][cols - 1];
                }
            }
            return Ok(g);
        };
        // ratio test; ties resolved by the smallest basis index (Bland)
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..m {
            if t[r][enter] > PIVOT_TOL {
                let ratio = t[r][cols - 1] / t[r][enter];
                let better = match leave {
                    None => true,
                    Some(lr) => {
                        ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[r] < basis[lr])
                    }
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(lr) = leave else {
            // cannot happen: every variable is boxed above
            return Err(Error::SolverStalled { iterations: 0, context: "unbounded dbl LP".into() });
        };
        let piv = t[lr][enter];
        for v in t[lr].iter_mut() {
            *v /= piv;
        }
        for r in 0..m {
            if r != lr && t[r][enter].abs() > 0.0 {
                let f = t[r][enter];
                let (pivot_row, row) = if r < lr {
                    let (a, b) = t.split_at_mut(lr);
                    (&b[0], &mut a[r])
                } else {
                    let (a, b) = t.split_at_mut(r);
                    (&a[lr], &mut b[0])
                };
                for (rv, pv) in row.iter_mut().zip(pivot_row) {
                    *rv -= f * pv;
                }
            }
        }
        let f = obj[enter];
        if f.abs() > 0.0 {
            for (ov, pv) in obj.iter_mut().zip(&t[lr]) {
                *ov -= f * pv;
            }
        }
        basis[lr] = enter;
    }
    Err(Error::SolverStalled { iterations: max_iters, context: "simplex iteration cap".into() })
}

#[cfg(test)]
mod tests {
    use super::super::tests::point_mass;
    use super::*;

    fn two_point_instance(d: f64, wa: f64, wb: f64) -> DblInstance {
        let a = point_mass(vec![0.0, 0.0], vec![1.0, 0.0], wa);
        let b = point_mass(vec![d, 0.0], vec![1.0, 0.0], wb);
        DblInstance::difference(&a, &b).unwrap()
    }

    #[test]
    fn close_point_masses_bind_the_lipschitz_row() {
        let inst = two_point_instance(0.5, 1.0, 1.0);
        let cert = dbl_lp(&inst).unwrap();
        assert!((cert.value - 0.5).abs() < 1e-12, "value {}", cert.value);
        assert!(cert.is_valid(1e-9));
    }

    #[test]
    fn far_point_masses_bind_the_box() {
        let inst = two_point_instance(5.0, 1.0, 1.0);
        let cert = dbl_lp(&inst).unwrap();
        assert!((cert.value - 2.0).abs() < 1e-12);
        assert!((cert.witness_f[0] - 1.0).abs() < 1e-12);
        assert!((cert.witness_f[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_measures_have_distance_zero() {
        let a = point_mass(vec![0.3, 0.4], vec![0.0, 1.0], 1.25);
        let inst = DblInstance::difference(&a, &a.clone()).unwrap();
        let cert = dbl_lp(&inst).unwrap();
        assert_eq!(cert.value, 0.0);
    }

    #[test]
    fn net_weight_survives_partial_cancellation() {
        let mu = point_mass(vec![0.0, 0.0], vec![1.0, 0.0], 2.0);
        let nu = point_mass(vec![0.0, 0.0], vec![1.0, 0.0], 1.0);
        let inst = DblInstance::difference(&mu, &nu).unwrap();
        let cert = dbl_lp(&inst).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let mut mu = crate::measure::DiscreteMeasure::new(false);
        for k in 0..DEFAULT_LP_CAP + 1 {
            mu.push(vec![k as f64, 0.0], vec![1.0, 0.0], 1.0);
        }
        let inst = DblInstance::from_signed(&mu).unwrap();
        assert!(dbl_lp(&inst).is_err());
    }

    #[test]
    fn symmetry_is_bitwise() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(51);
        for _ in 0..20 {
            let a = super::super::tests::random_instance(&mut rng, 12, 1.5);
            let neg = DblInstance {
                points: a.points.clone(),
                weights: a.weights.iter().map(|w| -w).collect(),
            };
            let va = dbl_lp(&a).unwrap().value;
            let vb = dbl_lp(&neg).unwrap().value;
            assert_eq!(va.to_bits(), vb.to_bits());
        }
    }
}
