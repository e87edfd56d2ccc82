//! Discrete measures on support elements (x, u) in R^n x S^{n-1}.
//!
//! All measure-valued pipelines in this crate (exact face decompositions,
//! Monte Carlo shell pushforwards, Vandermonde combinations) produce the
//! same atom format, which is what the bounded-Lipschitz solvers consume.

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Atom {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DiscreteMeasure {
    pub atoms: Vec<Atom>,
    pub signed: bool,
}

impl DiscreteMeasure {
    pub fn new(signed: bool) -> Self {
        DiscreteMeasure { atoms: Vec::new(), signed }
    }

    pub fn push(&mut self, x: Vec<f64>, u: Vec<f64>, w: f64) {
        self.atoms.push(Atom { x, u, w });
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// Total variation proxy: sum of |w|.
    pub fn abs_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.abs()).sum()
    }

    pub fn dim(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.x.len())
    }

    pub fn scale(&self, t: f64) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { x: a.x.clone(), u: a.u.clone(), w: t * a.w })
                .collect(),
            signed: self.signed || t < 0.0,
        }
    }

    /// Signed combination self + t * other (used for Vandermonde extraction
    /// and for difference measures fed to the dual-bounded-Lipschitz solvers).
    pub fn add_scaled(&self, other: &DiscreteMeasure, t: f64) -> DiscreteMeasure {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().map(|a| Atom {
            x: a.x.clone(),
            u: a.u.clone(),
            w: t * a.w,
        }));
        DiscreteMeasure { atoms, signed: true }
    }

    pub fn translate(&self, t: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    x: a.x.iter().zip(t).map(|(xi, ti)| xi + ti).collect(),
                    u: a.u.clone(),
                    w: a.w,
                })
                .collect(),
            signed: self.signed,
        }
    }

    /// Rotate both factors by an n x n rotation matrix (rows index output).
    pub fn rotate(&self, g: &[Vec<f64>]) -> DiscreteMeasure {
        let ap = |v: &[f64]| -> Vec<f64> {
            g.iter()
                .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                .collect()
        };
        DiscreteMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom { x: ap(&a.x), u: ap(&a.u), w: a.w })
                .collect(),
            signed: self.signed,
        }
    }

    /// Structural checks: finite weights, unit directions, consistent
    /// dimensions, nonnegative weights unless flagged signed.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim().unwrap_or(0);
        for (k, a) in self.atoms.iter().enumerate() {
            if a.x.len() != dim || a.u.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: a.x.len().max(a.u.len()) });
            }
            if !a.w.is_finite() || a.x.iter().any(|v| !v.is_finite()) || a.u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Precondition(format!("atom {k} has non-finite data")));
            }
            if !self.signed && a.w < 0.0 {
                return Err(Error::Precondition(format!(
                    "unsigned measure has negative weight {} at atom {k}",
                    a.w
                )));
            }
            let norm = a.u.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Precondition(format!(
                    "atom {k} direction has norm {norm}, expected 1"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<DiscreteMeasure> {
        let m: DiscreteMeasure = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }
}

/// Whether (x, u) lies on the normal bundle of K up to `tol`:
/// x must be a boundary point supporting the direction u, i.e.
/// h_K(u) = x . u and points x + tau u stay at distance tau from K.
pub fn nor_membership<const N: usize>(k: &ConvexBody<N>, x: &[f64], u: &[f64], tol: f64) -> bool {
    if x.len() != N || u.len() != N {
        return false;
    }
    let mut xa = [0.0; N];
    let mut ua = [0.0; N];
    xa.copy_from_slice(x);
    ua.copy_from_slice(u);
    let support_gap = (k.support(ua) - crate::vecn::dot(xa, ua)).abs();
    if support_gap > tol {
        return false;
    }
    let tau = 1e-3;
    let probe = crate::vecn::axpy(xa, tau, ua);
    (k.distance(probe) - tau).abs() <= tol
}
