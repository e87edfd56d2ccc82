//! Degree-(n-1) differential forms on R^{2n}, coordinates ordered
//! (x_1..x_n, u_1..u_n).
//!
//! A form is a callback producing covector coefficients in the basis dual
//! to the multivector blade basis, plus declared sup and Lipschitz bounds
//! on a compact box. The library never differentiates a form symbolically;
//! exact differentials are produced analytically from polynomial data by
//! `exact_differential`.

use crate::error::{Error, Result};
use crate::exterior::{blade_count, exterior_power_matrix};
use crate::poly::{random_poly, Poly};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

pub type FormEval = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct DifferentialForm {
    pub name: String,
    /// Ambient body dimension n; the form lives on R^{2n} with degree n-1.
    pub ambient: usize,
    eval: FormEval,
    /// Upper bound on the coefficient-vector norm over the declared box.
    pub sup_bound: f64,
    /// Lipschitz bound of z -> coefficient vector over the declared box.
    pub lip_bound: f64,
    pub box_lo: Vec<f64>,
    pub box_hi: Vec<f64>,
}

impl fmt::Debug for DifferentialForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DifferentialForm")
            .field("name", &self.name)
            .field("ambient", &self.ambient)
            .field("sup_bound", &self.sup_bound)
            .field("lip_bound", &self.lip_bound)
            .finish()
    }
}

impl DifferentialForm {
    pub fn degree(&self) -> usize {
        self.ambient - 1
    }

    pub fn coeff_len(&self) -> usize {
        blade_count(2 * self.ambient, self.degree())
    }

    /// Covector coefficients at z = (x, u).
    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), 2 * self.ambient, "form evaluated off R^{{2n}}");
        let c = (self.eval)(z);
        assert_eq!(c.len(), self.coeff_len(), "form returned wrong coefficient count");
        c
    }

    /// Build a form whose coefficients are polynomials in z; bounds are
    /// certified from the polynomial data over the given box.
    pub fn from_polys(
        name: &str,
        ambient: usize,
        coeffs: Vec<Poly>,
        box_lo: &[f64],
        box_hi: &[f64],
    ) -> Result<Self> {
        let want = blade_count(2 * ambient, ambient - 1);
        if coeffs.len() != want {
            return Err(Error::Precondition(format!(
                "form '{name}' needs {want} coefficient polynomials, got {}",
                coeffs.len()
            )));
        }
        if box_lo.len() != 2 * ambient || box_hi.len() != 2 * ambient {
            return Err(Error::Precondition(format!(
                "form '{name}' box must live in R^{}",
                2 * ambient
            )));
        }
        for p in &coeffs {
            if p.nvars != 2 * ambient {
                return Err(Error::Precondition(format!(
                    "form '{name}' coefficient polynomial has {} variables, expected {}",
                    p.nvars,
                    2 * ambient
                )));
            }
        }
        let sup = coeffs
            .iter()
            .map(|p| {
                let b = p.sup_bound(box_lo, box_hi);
                b * b
            })
            .sum::<f64>()
            .sqrt();
        let lip = coeffs
            .iter()
            .map(|p| {
                let b = p.lipschitz_bound(box_lo, box_hi);
                b * b
            })
            .sum::<f64>()
            .sqrt();
        let polys = coeffs;
        Ok(DifferentialForm {
            name: name.to_string(),
            ambient,
            eval: Arc::new(move |z: &[f64]| polys.iter().map(|p| p.eval(z)).collect()),
            sup_bound: sup,
            lip_bound: lip,
            box_lo: box_lo.to_vec(),
            box_hi: box_hi.to_vec(),
        })
    }

    /// alpha * self + other, bounds combined by the triangle inequality.
    pub fn combine(alpha: f64, phi: &DifferentialForm, psi: &DifferentialForm) -> DifferentialForm {
        assert_eq!(phi.ambient, psi.ambient);
        let (ep, eq) = (phi.eval.clone(), psi.eval.clone());
        DifferentialForm {
            name: format!("{}*{}+{}", alpha, phi.name, psi.name),
            ambient: phi.ambient,
            eval: Arc::new(move |z: &[f64]| {
                ep(z)
                    .iter()
                    .zip(eq(z))
                    .map(|(a, b)| alpha * a + b)
                    .collect()
            }),
            sup_bound: alpha.abs() * phi.sup_bound + psi.sup_bound,
            lip_bound: alpha.abs() * phi.lip_bound + psi.lip_bound,
            box_lo: phi.box_lo.clone(),
            box_hi: phi.box_hi.clone(),
        }
    }

    /// Pullback along the block rotation z = (x, u) -> (g x, g u).
    ///
    /// The pulled-back coefficients satisfy <xi, (g* phi)(z)> =
    /// <Lambda(g+g) xi, phi((g+g) z)>, so for rotated bodies
    /// T_{gK}(phi) = T_K(g* phi). Declared bounds carry over because the
    /// exterior power of a block rotation is orthogonal; the declared box
    /// should be invariant under g (true for the centered boxes used here).
    pub fn pullback_rotation(&self, g: &[Vec<f64>]) -> DifferentialForm {
        let n = self.ambient;
        assert_eq!(g.len(), n);
        let mut block = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                block[i][j] = g[i][j];
                block[n + i][n + j] = g[i][j];
            }
        }
        let lam = exterior_power_matrix(&block, self.degree());
        let inner = self.eval.clone();
        let block2 = block.clone();
        DifferentialForm {
            name: format!("rot*{}", self.name),
            ambient: n,
            eval: Arc::new(move |z: &[f64]| {
                let gz: Vec<f64> = block2
                    .iter()
                    .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
                    .collect();
                let phi = inner(&gz);
                // transpose application: new_I = sum_J Lambda[J][I] phi_J
                (0..phi.len())
                    .map(|i| lam.iter().zip(&phi).map(|(row, pj)| row[i] * pj).sum())
                    .collect()
            }),
            sup_bound: self.sup_bound,
            lip_bound: self.lip_bound,
            box_lo: self.box_lo.clone(),
            box_hi: self.box_hi.clone(),
        }
    }
}

/// The exact 1-form df of a polynomial f on R^4 (n = 2 only, where df has
/// the degree n-1 = 1 expected by the normal cycle pairing).
pub fn exact_differential(f: &Poly, box_lo: &[f64], box_hi: &[f64]) -> Result<DifferentialForm> {
    if f.nvars != 4 {
        return Err(Error::Precondition(
            "exact differentials are built for scalar fields on R^4".into(),
        ));
    }
    let coeffs: Vec<Poly> = (0..4).map(|i| f.partial(i)).collect();
    DifferentialForm::from_polys("df", 2, coeffs, box_lo, box_hi)
}

/// Named catalog addressable from the CLI. 2D forms on the box
/// [lo, hi] in R^4:
///   "perimeter2d"  u_2 dx_1 - u_1 dx_2
///   "turning2d"    u_2 du_1 - u_1 du_2
///   "poly:<seed>"  random polynomial coefficients, degree <= 2,
///                  reproducible from the seed
/// and 3D forms on a box in R^6:
///   "area3d"       u_1 dx_2^dx_3 - u_2 dx_1^dx_3 + u_3 dx_1^dx_2
///   "gauss3d"      u_3 du_1^du_2 - u_2 du_1^du_3 + u_1 du_2^du_3
pub fn catalog(name: &str, box_lo: &[f64], box_hi: &[f64]) -> Result<DifferentialForm> {
    if name == "area3d" || name == "gauss3d" {
        // pairing with a simple wedge s^t of x-vectors (resp. u-vectors)
        // gives u . (s x t), so facets (resp. spherical cells) integrate
        // to their area
        let mut coeffs = vec![Poly::zero(6); blade_count(6, 2)];
        let (u1, u2, u3) = (Poly::var(6, 3), Poly::var(6, 4), Poly::var(6, 5));
        if name == "area3d" {
            coeffs[0] = u3; // x1^x2
            coeffs[1] = u2.scale(-1.0); // x1^x3
            coeffs[5] = u1; // x2^x3
        } else {
            coeffs[12] = u3; // u1^u2
            coeffs[13] = u2.scale(-1.0); // u1^u3
            coeffs[14] = u1; // u2^u3
        }
        return DifferentialForm::from_polys(name, 3, coeffs, box_lo, box_hi);
    }
    let n = 2usize;
    let nv = 2 * n;
    let u1 = Poly::var(nv, 2);
    let u2 = Poly::var(nv, 3);
    let zero = Poly::zero(nv);
    match name {
        "perimeter2d" => DifferentialForm::from_polys(
            name,
            n,
            vec![u2, u1.scale(-1.0), zero.clone(), zero],
            box_lo,
            box_hi,
        ),
        "turning2d" => DifferentialForm::from_polys(
            name,
            n,
            vec![zero.clone(), zero, u2, u1.scale(-1.0)],
            box_lo,
            box_hi,
        ),
        _ => {
            if let Some(seed_str) = name.strip_prefix("poly:") {
                let seed: u64 = seed_str
                    .parse()
                    .map_err(|_| Error::UnknownForm(name.to_string()))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs: Vec<Poly> =
                    (0..blade_count(nv, n - 1)).map(|_| random_poly(&mut rng, nv, 2, 6)).collect();
                DifferentialForm::from_polys(name, n, coeffs, box_lo, box_hi)
            } else {
                Err(Error::UnknownForm(name.to_string()))
            }
        }
    }
}

/// Default declared box for 2D forms: x in [-r, r]^2, u in [-1, 1]^2.
pub fn centered_box_2d(r: f64) -> (Vec<f64>, Vec<f64>) {
    (vec![-r, -r, -1.0, -1.0], vec![r, r, 1.0, 1.0])
}

/// Default declared box for 3D forms: x in [-r, r]^3, u in [-1, 1]^3.
pub fn centered_box_3d(r: f64) -> (Vec<f64>, Vec<f64>) {
    (
        vec![-r, -r, -r, -1.0, -1.0, -1.0],
        vec![r, r, r, 1.0, 1.0, 1.0],
    )
}
