//! Bounded Lipschitz distance between finitely supported signed measures
//! on support elements:
//!
//!   d_bL(mu, nu) = sup { sum_k w_k f(s_k) : |f| <= 1, Lip(f) <= 1 }
//!
//! with w the net weights of mu - nu and the Euclidean metric on
//! (x, u)-pairs in R^{2n}. Two independent solvers compute the optimum:
//! a dense simplex oracle (`dbl_lp`, exact reference, capped size) and an
//! uncapacitated network simplex on a transshipment reformulation
//! (`dbl_flow`, scales to ~10^4 atoms). Their agreement is a gated
//! contract, not an assumption.
//!
//! The optimum is taken over functions on the atoms only; a McShane
//! extension lifts any feasible witness to all of R^{2n} with the same
//! constants, so the finite program computes the metric itself.

mod flow;
mod lp;

pub use flow::dbl_flow;
pub use lp::{dbl_lp, DEFAULT_LP_CAP};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use serde::Serialize;
use std::collections::BTreeMap;

/// Net-weight instance over the union support.
#[derive(Debug, Clone)]
pub struct DblInstance {
    /// Support points (x, u) flattened into R^{2n}.
    pub points: Vec<Vec<f64>>,
    /// Net weights mu({s_k}) - nu({s_k}); may carry either sign.
    pub weights: Vec<f64>,
}

impl DblInstance {
    /// Difference instance mu - nu; coincident atoms (bitwise equal
    /// coordinates) are merged.
    pub fn difference(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<DblInstance> {
        let mut map: BTreeMap<Vec<u64>, (Vec<f64>, f64)> = BTreeMap::new();
        let mut feed = |m: &DiscreteMeasure, sign: f64| {
            for a in &m.atoms {
                let mut z = a.x.clone();
                z.extend_from_slice(&a.u);
                let key: Vec<u64> = z.iter().map(|v| v.to_bits()).collect();
                map.entry(key).or_insert_with(|| (z, 0.0)).1 += sign * a.w;
            }
        };
        feed(mu, 1.0);
        feed(nu, -1.0);
        let (points, weights): (Vec<_>, Vec<_>) = map.into_values().unzip();
        if points.is_empty() {
            return Err(Error::Precondition("difference of two empty measures".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: 0 });
        }
        Ok(DblInstance { points, weights })
    }

    /// A single signed measure against zero (used for coarsening bounds and
    /// for differences already folded into one atom list).
    pub fn from_signed(mu: &DiscreteMeasure) -> Result<DblInstance> {
        let zero = DiscreteMeasure::new(false);
        DblInstance::difference(mu, &zero)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        self.points[k]
            .iter()
            .zip(&self.points[l])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Total |w|, an upper bound for the optimum (|f| <= 1).
    pub fn abs_mass(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Flip all weights; the optimum is invariant (f -> -f).
    fn negated(&self) -> DblInstance {
        DblInstance {
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| -w).collect(),
        }
    }

    /// Canonical sign: first nonzero weight positive. Solving the canonical
    /// instance makes d_bL(mu, nu) and d_bL(nu, mu) bitwise equal.
    pub(crate) fn canonical(&self) -> (DblInstance, bool) {
        match self.weights.iter().find(|w| **w != 0.0) {
            Some(w) if *w < 0.0 => (self.negated(), true),
            _ => (self.clone(), false),
        }
    }
}

/// Optimality evidence for one solve. `verify` recomputes every field from
/// scratch so tests never trust solver-internal bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct DblCertificate {
    pub value: f64,
    /// Witness values f(s_k) attaining the optimum.
    pub witness_f: Vec<f64>,
    /// max |f_k| (feasible when <= 1 + 1e-9).
    pub max_abs_f: f64,
    /// max over pairs of |f_k - f_l| - d(s_k, s_l).
    pub max_pair_violation: f64,
    /// |sum w_k f_k - value|.
    pub objective_residual: f64,
    /// Primal-dual gap of the flow solver; the LP oracle reports none.
    pub duality_gap: Option<f64>,
}

impl DblCertificate {
    /// Recompute feasibility and objective residuals of the witness.
    pub fn verify(inst: &DblInstance, value: f64, witness_f: &[f64], gap: Option<f64>) -> Self {
        let n = inst.len();
        let mut max_abs_f: f64 = 0.0;
        let mut max_pair: f64 = f64::NEG_INFINITY;
        for k in 0..n {
            max_abs_f = max_abs_f.max(witness_f[k].abs());
            for l in k + 1..n {
                max_pair = max_pair.max((witness_f[k] - witness_f[l]).abs() - inst.distance(k, l));
            }
        }
        let obj: f64 = inst.weights.iter().zip(witness_f).map(|(w, f)| w * f).sum();
        DblCertificate {
            value,
            witness_f: witness_f.to_vec(),
            max_abs_f,
            max_pair_violation: if n < 2 { 0.0 } else { max_pair },
            objective_residual: (obj - value).abs(),
            duality_gap: gap,
        }
    }

    pub fn is_valid(&self, tol: f64) -> bool {
        self.max_abs_f <= 1.0 + tol
            && self.max_pair_violation <= tol
            && self.objective_residual <= tol
            && self.duality_gap.map_or(true, |g| g.abs() <= tol)
    }
}

/// Snap atoms to a product grid (axis cells of size h in x, angular cells
/// of size h on the sphere) and merge. The returned bound dominates
/// d_bL(input, output): a 1-Lipschitz test function changes by at most the
/// snap displacement at each atom, so the bound is sum |w_k| * |s_k - s_k'|.
pub fn coarsen(mu: &DiscreteMeasure, h: f64) -> Result<(DiscreteMeasure, f64)> {
    if h < 0.0 || !h.is_finite() {
        return Err(Error::Precondition(format!("coarsening cell size must be >= 0, got {h}")));
    }
    if h == 0.0 {
        return Ok((mu.clone(), 0.0));
    }
    let dim = mu.dim().unwrap_or(0);
    let mut cells: BTreeMap<Vec<i64>, (Vec<f64>, Vec<f64>, f64)> = BTreeMap::new();
    let mut bound = 0.0;
    for a in &mu.atoms {
        let (mut key, mut sx): (Vec<i64>, Vec<f64>) = (Vec::new(), Vec::new());
        for &xi in &a.x {
            let c = (xi / h).floor();
            key.push(c as i64);
            sx.push((c + 0.5) * h);
        }
        let su: Vec<f64> = match dim {
            2 => {
                let th = a.u[1].atan2(a.u[0]);
                let c = (th / h).floor();
                key.push(c as i64);
                let t = (c + 0.5) * h;
                vec![t.cos(), t.sin()]
            }
            3 => {
                let polar = a.u[2].clamp(-1.0, 1.0).acos();
                let azim = a.u[1].atan2(a.u[0]);
                let (cp, ca) = ((polar / h).floor(), (azim / h).floor());
                key.push(cp as i64);
                key.push(ca as i64);
                let (p, z) = ((cp + 0.5) * h, (ca + 0.5) * h);
                vec![p.sin() * z.cos(), p.sin() * z.sin(), p.cos()]
            }
            _ => return Err(Error::DimensionMismatch { expected: 2, got: dim }),
        };
        let disp = a
            .x
            .iter()
            .zip(&sx)
            .chain(a.u.iter().zip(&su))
            .map(|(v, s)| (v - s) * (v - s))
            .sum::<f64>()
            .sqrt();
        bound += a.w.abs() * disp.min(2.0);
        cells.entry(key).or_insert((sx, su, 0.0)).2 += a.w;
    }
    let mut out = DiscreteMeasure::new(mu.signed);
    for (_, (x, u, w)) in cells {
        out.push(x, u, w);
    }
    Ok((out, bound))
}
