//! Local parallel volume measures by rejection sampling over the shell
//! K_rho minus K, their Vandermonde combination into support measures, and
//! the three integral comparison terms for pairs of bodies.
//!
//! The pushforward of Lebesgue measure on the shell under
//! x -> (p_K(x), u_K(x)) is estimated by uniform samples in a bounding box;
//! every accepted sample yields one atom on Nor K with weight vol(box)/N.
//! Sampling is sharded with one counter-based stream per shard and reduced
//! in shard order, so atom lists are identical for any worker count.

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::unit_ball_volume;
use crate::vecn::{axpy, dist, norm, sub};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SHARD: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct ShellSampler<const N: usize> {
    pub body: ConvexBody<N>,
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
}

impl<const N: usize> ShellSampler<N> {
    pub fn new(body: ConvexBody<N>, rho: f64, samples: usize, seed: u64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Precondition(format!("shell radius must be positive, got {rho}")));
        }
        if samples < 1000 {
            return Err(Error::Precondition(format!(
                "need at least 1000 samples for a meaningful estimate, got {samples}"
            )));
        }
        Ok(ShellSampler { body, rho, samples, seed })
    }

    /// Bounding box of K_rho, inflated by 1e-9.
    pub fn sample_box(&self) -> ([f64; N], [f64; N]) {
        let (mut lo, mut hi) = self.body.bounding_box();
        for i in 0..N {
            lo[i] -= self.rho + 1e-9;
            hi[i] += self.rho + 1e-9;
        }
        (lo, hi)
    }
}

fn box_volume<const N: usize>(lo: [f64; N], hi: [f64; N]) -> f64 {
    (0..N).map(|i| hi[i] - lo[i]).product()
}

/// Draw `count` uniform points of shard `shard` into a callback; the stream
/// layout is part of the determinism contract.
fn for_each_shard_point<const N: usize>(
    lo: [f64; N],
    hi: [f64; N],
    seed: u64,
    shard: usize,
    count: usize,
    mut f: impl FnMut([f64; N]),
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard as u64);
    for _ in 0..count {
        let mut x = [0.0; N];
        for i in 0..N {
            x[i] = lo[i] + (hi[i] - lo[i]) * rng.gen::<f64>();
        }
        f(x);
    }
}

fn shard_counts(total: usize) -> Vec<(usize, usize)> {
    let shards = total.div_ceil(SHARD);
    (0..shards)
        .map(|s| (s, SHARD.min(total - s * SHARD)))
        .collect()
}

/// 3 sigma binomial error bar on an acceptance-frequency mass estimate;
/// Laplace smoothing keeps it positive at the extremes.
fn binomial_3sigma(accepted: usize, total: usize, scale: f64) -> f64 {
    let p = (accepted as f64 + 1.0) / (total as f64 + 2.0);
    3.0 * scale * (p * (1.0 - p) / total as f64).sqrt()
}

/// Monte Carlo image measure mu_{K,rho}: atoms (p_K(x), u_K(x)) for box
/// samples x in the shell, each of weight vol(box)/N. Returns the measure
/// and a 3 sigma error bound on its total mass.
pub fn mc_local_parallel_measure<const N: usize>(
    sampler: &ShellSampler<N>,
) -> Result<(DiscreteMeasure, f64)> {
    let (lo, hi) = sampler.sample_box();
    let vol = box_volume(lo, hi);
    let w = vol / sampler.samples as f64;
    let body = &sampler.body;
    let rho = sampler.rho;

    let shards = shard_counts(sampler.samples);
    let per_shard: Vec<Vec<([f64; N], [f64; N])>> = shards
        .par_iter()
        .map(|&(s, cnt)| {
            let mut atoms = Vec::new();
            for_each_shard_point(lo, hi, sampler.seed, s, cnt, |x| {
                let (d, dir) = body.distance_and_direction(x);
                if d > 0.0 && d <= rho {
                    let u = dir.expect("positive distance implies a direction");
                    atoms.push((axpy(x, -d, u), u));
                }
            });
            atoms
        })
        .collect();

    let mut out = DiscreteMeasure::new(false);
    for shard in per_shard {
        for (p, u) in shard {
            out.push(p.to_vec(), u.to_vec(), w);
        }
    }
    let accepted = out.atoms.len();
    Ok((out, binomial_3sigma(accepted, sampler.samples, vol)))
}

/// The linear system that recovers support measures from local parallel
/// volume measures at the radii rho_j = j/n: mu_{K,rho} =
/// sum_i rho^{n-i} kappa_{n-i} Lambda_i, inverted once per dimension.
#[derive(Debug, Clone)]
pub struct VandermondeSystem {
    pub n: usize,
    pub radii: Vec<f64>,
    /// a[i][j]: Lambda_i = sum_j a[i][j] mu_{K, radii[j]}.
    pub a: Vec<Vec<f64>>,
}

pub fn vandermonde_coefficients(n: usize) -> Result<VandermondeSystem> {
    if !(2..=3).contains(&n) {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let radii: Vec<f64> = (1..=n).map(|j| j as f64 / n as f64).collect();
    // m[j][i] = rho_j^{n-i} kappa_{n-i}
    let m: Vec<Vec<f64>> = radii
        .iter()
        .map(|&rho| {
            (0..n)
                .map(|i| rho.powi((n - i) as i32) * unit_ball_volume(n - i))
                .collect()
        })
        .collect();
    let a = invert(&m)?;
    // A * a = I is the contract the examples rely on
    for i in 0..n {
        for k in 0..n {
            let entry: f64 = (0..n).map(|j| a[i][j] * m[j][k]).sum();
            let expect = if i == k { 1.0 } else { 0.0 };
            if (entry - expect).abs() > 1e-12 {
                return Err(Error::ToleranceUnachievable {
                    requested: 1e-12,
                    achieved: (entry - expect).abs(),
                });
            }
        }
    }
    Ok(VandermondeSystem { n, radii, a })
}

fn invert(m: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = m.len();
    let mut aug: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut v = row.clone();
            v.extend((0..n).map(|c| if c == r { 1.0 } else { 0.0 }));
            v
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        if aug[pivot][col].abs() < 1e-14 {
            return Err(Error::DegenerateBody("singular Vandermonde system".into()));
        }
        aug.swap(col, pivot);
        let p = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                for c in 0..2 * n {
                    let base = aug[col][c];
                    aug[r][c] -= f * base;
                }
            }
        }
    }
    Ok(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Signed combination of the sampled measures into support measures
/// Lambda_i; the radii must match the system's.
pub fn extract_support_measures(
    mus: &[(f64, DiscreteMeasure)],
    sys: &VandermondeSystem,
) -> Result<Vec<DiscreteMeasure>> {
    if mus.len() != sys.n {
        return Err(Error::Precondition(format!(
            "need {} sampled measures, got {}",
            sys.n,
            mus.len()
        )));
    }
    for (j, (rho, _)) in mus.iter().enumerate() {
        if (rho - sys.radii[j]).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "measure {j} sampled at rho={rho}, system expects {}",
                sys.radii[j]
            )));
        }
    }
    Ok((0..sys.n)
        .map(|i| {
            let mut out = DiscreteMeasure::new(true);
            for (j, (_, mu)) in mus.iter().enumerate() {
                let c = sys.a[i][j];
                for atom in &mu.atoms {
                    out.push(atom.x.clone(), atom.u.clone(), c * atom.w);
                }
            }
            out
        })
        .collect())
}

/// One (value, 3 sigma) Monte Carlo estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error3: f64,
}

/// The three right-hand terms of the mu-comparison bound
///   d_bL(mu_K, mu_L) <= int |p_K - p_L| + int |u_K - u_L| + vol(sym diff),
/// estimated on shared samples, plus the intersection volume used by the
/// sqrt(5 D) displacement estimate.
#[derive(Debug, Clone)]
pub struct ComparisonTerms {
    pub term_p: Estimate,
    pub term_u: Estimate,
    pub term_sym: Estimate,
    pub vol_intersection: Estimate,
}

/// Coupled sampling output: both empirical shell measures built from the
/// same box samples, with the comparison terms on those samples. On shared
/// samples the bound holds deterministically for the empirical measures:
/// every 1-bounded 1-Lipschitz f splits atomwise into moved pairs
/// (intersection) and created or destroyed mass (symmetric difference).
#[derive(Debug, Clone)]
pub struct CoupledShellRun {
    pub mu_k: DiscreteMeasure,
    pub mu_l: DiscreteMeasure,
    pub terms: ComparisonTerms,
}

struct PairShard<const N: usize> {
    atoms_k: Vec<([f64; N], [f64; N])>,
    atoms_l: Vec<([f64; N], [f64; N])>,
    sum_p: f64,
    sumsq_p: f64,
    sum_u: f64,
    sumsq_u: f64,
    n_sym: usize,
    n_both: usize,
}

pub fn coupled_shell_measures<const N: usize>(
    k: &ConvexBody<N>,
    l: &ConvexBody<N>,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<CoupledShellRun> {
    if !(rho > 0.0) {
        return Err(Error::Precondition("shell radius must be positive".into()));
    }
    if samples < 1000 {
        return Err(Error::Precondition("need at least 1000 samples".into()));
    }
    // common box covering both shells
    let (klo, khi) = ShellSampler { body: k.clone(), rho, samples, seed }.sample_box();
    let (llo, lhi) = ShellSampler { body: l.clone(), rho, samples, seed }.sample_box();
    let mut lo = [0.0; N];
    let mut hi = [0.0; N];
    for i in 0..N {
        lo[i] = klo[i].min(llo[i]);
        hi[i] = khi[i].max(lhi[i]);
    }
    let vol = box_volume(lo, hi);
    let w = vol / samples as f64;

    let shards = shard_counts(samples);
    let results: Vec<PairShard<N>> = shards
        .par_iter()
        .map(|&(s, cnt)| {
            let mut out = PairShard {
                atoms_k: Vec::new(),
                atoms_l: Vec::new(),
                sum_p: 0.0,
                sumsq_p: 0.0,
                sum_u: 0.0,
                sumsq_u: 0.0,
                n_sym: 0,
                n_both: 0,
            };
            for_each_shard_point(lo, hi, seed, s, cnt, |x| {
                let (dk, dirk) = k.distance_and_direction(x);
                let (dl, dirl) = l.distance_and_direction(x);
                let in_k = dk > 0.0 && dk <= rho;
                let in_l = dl > 0.0 && dl <= rho;
                if in_k {
                    let u = dirk.expect("direction exists off the body");
                    out.atoms_k.push((axpy(x, -dk, u), u));
                }
                if in_l {
                    let u = dirl.expect("direction exists off the body");
                    out.atoms_l.push((axpy(x, -dl, u), u));
                }
                match (in_k, in_l) {
                    (true, true) => {
                        let uk = dirk.unwrap();
                        let ul = dirl.unwrap();
                        let pk = axpy(x, -dk, uk);
                        let pl = axpy(x, -dl, ul);
                        let dp = dist(pk, pl);
                        let du = norm(sub(uk, ul));
                        out.sum_p += dp;
                        out.sumsq_p += dp * dp;
                        out.sum_u += du;
                        out.sumsq_u += du * du;
                        out.n_both += 1;
                    }
                    (true, false) | (false, true) => out.n_sym += 1,
                    (false, false) => {}
                }
            });
            out
        })
        .collect();

    let mut mu_k = DiscreteMeasure::new(false);
    let mut mu_l = DiscreteMeasure::new(false);
    let (mut sum_p, mut sumsq_p, mut sum_u, mut sumsq_u) = (0.0, 0.0, 0.0, 0.0);
    let (mut n_sym, mut n_both) = (0usize, 0usize);
    for shard in results {
        for (p, u) in shard.atoms_k {
            mu_k.push(p.to_vec(), u.to_vec(), w);
        }
        for (p, u) in shard.atoms_l {
            mu_l.push(p.to_vec(), u.to_vec(), w);
        }
        sum_p += shard.sum_p;
        sumsq_p += shard.sumsq_p;
        sum_u += shard.sum_u;
        sumsq_u += shard.sumsq_u;
        n_sym += shard.n_sym;
        n_both += shard.n_both;
    }

    let nf = samples as f64;
    let mean_err = |sum: f64, sumsq: f64| -> Estimate {
        let mean = sum / nf;
        let var = (sumsq / nf - mean * mean).max(0.0);
        Estimate { value: vol * mean, error3: 3.0 * vol * (var / nf).sqrt() }
    };
    let terms = ComparisonTerms {
        term_p: mean_err(sum_p, sumsq_p),
        term_u: mean_err(sum_u, sumsq_u),
        term_sym: Estimate {
            value: vol * n_sym as f64 / nf,
            error3: binomial_3sigma(n_sym, samples, vol),
        },
        vol_intersection: Estimate {
            value: vol * n_both as f64 / nf,
            error3: binomial_3sigma(n_both, samples, vol),
        },
    };
    Ok(CoupledShellRun { mu_k, mu_l, terms })
}

/// Convenience wrapper returning only the three comparison terms.
pub fn comparison_terms<const N: usize>(
    k: &ConvexBody<N>,
    l: &ConvexBody<N>,
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<ComparisonTerms> {
    Ok(coupled_shell_measures(k, l, rho, samples, seed)?.terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{unit_square, ConvexBody};
    use crate::measure::nor_membership;
    use std::f64::consts::PI;

    #[test]
    fn square_shell_mass_matches_steiner_growth() {
        let s = ShellSampler::new(unit_square(), 1.0, 1_000_000, 101).unwrap();
        let (mu, err) = mc_local_parallel_measure(&s).unwrap();
        mu.validate().unwrap();
        let expect = 4.0 + PI;
        assert!(err < 0.03, "error bar unexpectedly large: {err}");
        assert!(
            (mu.total_mass() - expect).abs() <= err,
            "mass {} vs {} (3 sigma {})",
            mu.total_mass(),
            expect,
            err
        );
    }

    #[test]
    fn disk_shell_mass_is_annulus_area() {
        let b = ConvexBody::<2>::ball([0.0, 0.0], 1.0).unwrap();
        let s = ShellSampler::new(b, 0.5, 1_000_000, 102).unwrap();
        let (mu, err) = mc_local_parallel_measure(&s).unwrap();
        let expect = PI * (1.5 * 1.5 - 1.0);
        assert!((mu.total_mass() - expect).abs() <= err);
    }

    #[test]
    fn every_atom_lies_on_the_normal_bundle() {
        let s = ShellSampler::new(unit_square(), 0.7, 20_000, 103).unwrap();
        let (mu, _) = mc_local_parallel_measure(&s).unwrap();
        let body = unit_square();
        assert!(!mu.atoms.is_empty());
        for a in &mu.atoms {
            assert!(
                nor_membership(&body, &a.x, &a.u, 1e-8),
                "atom ({:?}, {:?}) off Nor K",
                a.x,
                a.u
            );
        }
    }

    #[test]
    fn identical_seeds_reproduce_identical_atom_lists() {
        let s = ShellSampler::new(unit_square(), 0.5, 50_000, 104).unwrap();
        let (a, ea) = mc_local_parallel_measure(&s).unwrap();
        let (b, eb) = mc_local_parallel_measure(&s).unwrap();
        assert_eq!(a, b);
        assert_eq!(ea, eb);
    }

    #[test]
    fn vandermonde_2d_matches_hand_inverse() {
        let sys = vandermonde_coefficients(2).unwrap();
        assert_eq!(sys.radii, vec![0.5, 1.0]);
        assert!((sys.a[0][0] - (-4.0 / PI)).abs() < 1e-14);
        assert!((sys.a[0][1] - 2.0 / PI).abs() < 1e-14);
        assert!((sys.a[1][0] - 2.0).abs() < 1e-14);
        assert!((sys.a[1][1] - (-0.5)).abs() < 1e-14);
        // point-like body: mu_(1/2) = pi/4, mu_1 = pi recovers (1, 0)
        let l0 = sys.a[0][0] * PI / 4.0 + sys.a[0][1] * PI;
        let l1 = sys.a[1][0] * PI / 4.0 + sys.a[1][1] * PI;
        assert!((l0 - 1.0).abs() < 1e-14);
        assert!(l1.abs() < 1e-14);
        vandermonde_coefficients(3).unwrap();
        assert!(vandermonde_coefficients(4).is_err());
    }

    #[test]
    fn extraction_recovers_square_support_measures() {
        let sys = vandermonde_coefficients(2).unwrap();
        let mus: Vec<(f64, DiscreteMeasure)> = sys
            .radii
            .iter()
            .map(|&rho| {
                let s = ShellSampler::new(unit_square(), rho, 1_000_000, 105).unwrap();
                (rho, mc_local_parallel_measure(&s).unwrap().0)
            })
            .collect();
        let lambdas = extract_support_measures(&mus, &sys).unwrap();
        assert!(lambdas.iter().all(|m| m.signed));
        assert!(
            (lambdas[0].total_mass() - 1.0).abs() < 0.02,
            "Lambda_0 mass {}",
            lambdas[0].total_mass()
        );
        assert!(
            (lambdas[1].total_mass() - 2.0).abs() < 0.02,
            "Lambda_1 mass {}",
            lambdas[1].total_mass()
        );

        // radii mismatch is rejected
        let swapped: Vec<(f64, DiscreteMeasure)> =
            mus.iter().map(|(r, m)| (r + 0.1, m.clone())).collect();
        assert!(extract_support_measures(&swapped, &sys).is_err());
    }

    #[test]
    fn extraction_recovers_disk_support_measures() {
        let sys = vandermonde_coefficients(2).unwrap();
        let disk = ConvexBody::<2>::ball([0.3, -0.2], 1.0).unwrap();
        let mus: Vec<(f64, DiscreteMeasure)> = sys
            .radii
            .iter()
            .map(|&rho| {
                let s = ShellSampler::new(disk.clone(), rho, 1_000_000, 106).unwrap();
                (rho, mc_local_parallel_measure(&s).unwrap().0)
            })
            .collect();
        let lambdas = extract_support_measures(&mus, &sys).unwrap();
        assert!((lambdas[0].total_mass() - 1.0).abs() < 0.02);
        assert!((lambdas[1].total_mass() - PI).abs() < 0.02);
    }

    #[test]
    fn held_out_radius_closes_the_steiner_expansion() {
        // extraction radii are {1/2, 1}; close the expansion at rho = 3/4
        let sys = vandermonde_coefficients(2).unwrap();
        let n_samp = 400_000;
        let mus: Vec<(f64, DiscreteMeasure)> = sys
            .radii
            .iter()
            .map(|&rho| {
                let s = ShellSampler::new(unit_square(), rho, n_samp, 107).unwrap();
                (rho, mc_local_parallel_measure(&s).unwrap().0)
            })
            .collect();
        let lambdas = extract_support_measures(&mus, &sys).unwrap();
        let rho = 0.75;
        let closure = rho * rho * PI * lambdas[0].total_mass() + rho * 2.0 * lambdas[1].total_mass();

        let s = ShellSampler::new(unit_square(), rho, n_samp, 108).unwrap();
        let (held_out, err_h) = mc_local_parallel_measure(&s).unwrap();

        // first-order error propagation through the linear extraction
        let sigma: Vec<f64> = mus
            .iter()
            .enumerate()
            .map(|(j, _)| {
                let s = ShellSampler::new(unit_square(), sys.radii[j], n_samp, 107).unwrap();
                mc_local_parallel_measure(&s).unwrap().1
            })
            .collect();
        let coef: Vec<f64> = (0..2)
            .map(|j| rho * rho * PI * sys.a[0][j] + rho * 2.0 * sys.a[1][j])
            .collect();
        let combined = (coef
            .iter()
            .zip(&sigma)
            .map(|(c, s)| (c * s) * (c * s))
            .sum::<f64>()
            + err_h * err_h)
            .sqrt();
        assert!(
            (closure - held_out.total_mass()).abs() <= combined,
            "closure {} vs held-out {} (bound {})",
            closure,
            held_out.total_mass(),
            combined
        );
    }

    #[test]
    fn identical_bodies_give_exactly_zero_terms() {
        let k = unit_square();
        let run = coupled_shell_measures(&k, &k.clone(), 0.5, 20_000, 109).unwrap();
        assert_eq!(run.terms.term_p.value, 0.0);
        assert_eq!(run.terms.term_u.value, 0.0);
        assert_eq!(run.terms.term_sym.value, 0.0);
        assert_eq!(run.mu_k, run.mu_l);
    }

    #[test]
    fn symmetric_difference_of_nested_balls_matches_annuli() {
        let k = ConvexBody::<2>::ball([0.0, 0.0], 1.0).unwrap();
        let l = ConvexBody::<2>::ball([0.0, 0.0], 1.05).unwrap();
        let terms = comparison_terms(&k, &l, 1.0, 1_000_000, 110).unwrap();
        // K-shell = annulus (1, 2], L-shell = (1.05, 2.05]; the symmetric
        // difference is two thin annuli
        let expect = PI * ((1.05f64.powi(2) - 1.0) + (2.05f64.powi(2) - 4.0));
        assert!(
            (terms.term_sym.value - expect).abs() <= terms.term_sym.error3,
            "sym {} vs {} ({})",
            terms.term_sym.value,
            expect,
            terms.term_sym.error3
        );
    }

    #[test]
    fn displacement_term_obeys_projection_estimate() {
        // term_p <= sqrt(5 D) vol(shell intersection) sqrt(delta) with
        // D = diam(K_rho union L_rho), delta the Hausdorff distance
        let k = unit_square();
        let delta = 0.01;
        let l = k.translate([delta, 0.0]);
        let rho = 1.0;
        let terms = comparison_terms(&k, &l, rho, 400_000, 111).unwrap();
        let d = ((1.0 + delta + 2.0 * rho) * (1.0 + delta + 2.0 * rho)
            + (1.0 + 2.0 * rho) * (1.0 + 2.0 * rho))
            .sqrt();
        let rhs = (5.0 * d).sqrt()
            * (terms.vol_intersection.value + terms.vol_intersection.error3)
            * delta.sqrt();
        assert!(
            terms.term_p.value - terms.term_p.error3 <= rhs,
            "term_p {} vs bound {}",
            terms.term_p.value,
            rhs
        );
    }
}
