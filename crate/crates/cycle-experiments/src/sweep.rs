//! Delta-sweep harness: for a shrinking sequence of target Hausdorff
//! distances, builds body pairs, measures support-measure distances and
//! normal-cycle differences with error bars, and fits log-log slopes.
//!
//! Two independent routes feed the d_bL columns. The exact route meshes
//! the closed-form face decomposition of a polytope; the Monte Carlo
//! route samples local parallel volumes on a coupled point set and
//! inverts the radius expansion. Their agreement, within the sum of
//! discretization and statistical bounds, is one of the gated
//! invariants.
//!
//! Ratio columns divide by d_H^{1/2} (support measures) and d_H^{1/5}
//! (normal cycles). Observed decay of a ratio, i.e. a fitted slope above
//! the exponent, does not contradict the continuity statements being
//! exercised: they are upper bounds, and no family here is known to make
//! them tight. Gates therefore test boundedness and stability, not
//! tightness.

use crate::fit::{fit_loglog, LoglogFit};
use crate::pair::{generate_pair, GeneratedPair, Scenario};
use anyhow::{bail, ensure, Context, Result};
use normal_cycles::body::{body_from_bodyspec, parse_body, AnyBody, BodySpec, ConvexBody};
use normal_cycles::cycle::evaluate_normal_cycle;
use normal_cycles::face_measures::exact_support_measure;
use normal_cycles::flat::{coarsen, dbl_flow, DblCertificate, DblInstance, DEFAULT_LP_CAP};
use normal_cycles::forms::{catalog, centered_box_2d, DifferentialForm};
use normal_cycles::measure::DiscreteMeasure;
use normal_cycles::shell::{coupled_shell_measures, extract_support_measures, vandermonde_coefficients};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// Slack granted to every computed-value inequality for solver and
/// pairing tolerances.
const SOLVER_TOL: f64 = 1e-8;

/// A column whose magnitudes never exceed this is treated as
/// numerically zero by the stability gates (e.g. rigid-motion-invariant
/// forms under translation).
const ZERO_COLUMN_TOL: f64 = 1e-8;

/// Base body: inline JSON spec or a path to a body file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseBody {
    File(String),
    Spec(BodySpec),
}

impl BaseBody {
    pub fn resolve(&self) -> Result<ConvexBody<2>> {
        let any = match self {
            BaseBody::File(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading base body file {path}"))?;
                parse_body(&text)?
            }
            BaseBody::Spec(spec) => body_from_bodyspec(spec)?,
        };
        match any {
            AnyBody::D2(b) => Ok(b),
            AnyBody::D3(_) => bail!("sweeps run in the plane; got a 3-dimensional base body"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub scenario: Scenario,
    /// required for translate / rotate / vertex-perturb, ignored by
    /// ball-vs-polygon
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseBody>,
    /// target Hausdorff distances, strictly decreasing
    pub deltas: Vec<f64>,
    /// support-measure indices to compare
    #[serde(default = "default_indices")]
    pub indices: Vec<usize>,
    /// catalog form names for the normal-cycle columns
    #[serde(default = "default_forms")]
    pub forms: Vec<String>,
    /// Monte Carlo samples per shell
    pub samples: usize,
    /// cell size for both the exact-route mesh and the MC coarsening
    #[serde(default = "default_coarsen")]
    pub coarsen_h: f64,
    pub seed: u64,
    /// CSV output path; the JSON sidecar replaces its extension
    pub output: PathBuf,
    /// quadrature refinement level for normal-cycle evaluation
    #[serde(default = "default_level")]
    pub level: usize,
}

fn default_indices() -> Vec<usize> {
    vec![0, 1]
}

fn default_forms() -> Vec<String> {
    vec!["perimeter2d".into(), "turning2d".into()]
}

fn default_coarsen() -> f64 {
    0.02
}

fn default_level() -> usize {
    3
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.deltas.is_empty(), "delta list must not be empty");
        for d in &self.deltas {
            ensure!(d.is_finite() && *d > 0.0, "delta {d} is not positive");
        }
        for w in self.deltas.windows(2) {
            ensure!(w[0] > w[1], "delta list must be strictly decreasing");
        }
        ensure!(self.samples >= 10_000, "need at least 10^4 samples per shell");
        ensure!(!self.indices.is_empty(), "need at least one measure index");
        for &i in &self.indices {
            ensure!(i < 2, "support measure index {i} out of range for the plane");
        }
        let mut sorted = self.indices.clone();
        sorted.dedup();
        ensure!(sorted.len() == self.indices.len(), "duplicate measure index");
        ensure!(!self.forms.is_empty(), "need at least one form name");
        ensure!(
            self.coarsen_h > 0.0 && self.coarsen_h < 1.0,
            "coarsening cell size must lie in (0, 1)"
        );
        ensure!((1..=7).contains(&self.level), "quadrature level must lie in 1..=7");
        ensure!(
            self.output.as_os_str().len() > 0,
            "output path must not be empty"
        );
        Ok(())
    }

    pub fn sidecar_path(&self) -> PathBuf {
        self.output.with_extension("json")
    }

    fn row_seed(&self, row: usize) -> u64 {
        self.seed
            .wrapping_add((row as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

/// One d_bL column: the gated route (exact when both bodies are
/// polytopes, MC otherwise) next to the always-computed MC route.
#[derive(Debug, Clone, Serialize)]
pub struct MeasureCol {
    pub index: usize,
    pub value: f64,
    pub gap: f64,
    pub bound: f64,
    pub route: &'static str,
    pub mc_value: f64,
    pub mc_bound: f64,
    /// exact-vs-MC agreement within the combined bounds; None when no
    /// exact route exists
    pub agree: Option<bool>,
    /// value / d_H^{1/2}
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FormCol {
    pub name: String,
    pub dt: f64,
    pub err: f64,
    /// dt / d_H^{1/5}
    pub ratio: f64,
}

/// Surface-area-measure marginal column: S_1 = 2 * (u-marginal of
/// Lambda_1), compared against twice the Lambda_1 distance, plus the
/// support contrast that separates total variation from d_bL.
#[derive(Debug, Clone, Serialize)]
pub struct S1Col {
    pub value: f64,
    pub bound: f64,
    pub rhs: f64,
    pub ok: bool,
    /// total variation of the S_1 difference (atoms clustered at 1e-9)
    pub tv: f64,
    /// smallest distance between a support atom of K and one of L
    pub support_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub d_h: f64,
    pub d_h_bound: f64,
    pub magnitude: f64,
    pub measures: Vec<MeasureCol>,
    pub forms: Vec<FormCol>,
    pub s1: Option<S1Col>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitPair {
    pub full: Option<LoglogFit>,
    pub full_note: Option<String>,
    pub lower: Option<LoglogFit>,
    pub lower_note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub fits: BTreeMap<String, FitPair>,
    pub invariants: Vec<InvariantCheck>,
}

impl SweepReport {
    pub fn gates_passed(&self) -> bool {
        self.invariants.iter().all(|c| c.passed)
    }
}

/// 3 sigma bound on the mass of a Monte Carlo shell measure: the atom
/// count is binomial over `samples` proposals at a fixed weight.
fn mc_mass_3sigma(mu: &DiscreteMeasure, samples: usize) -> f64 {
    let accepted = mu.atoms.len();
    if accepted == 0 {
        return 0.0;
    }
    let w = mu.total_mass() / accepted as f64;
    let p = accepted as f64 / samples as f64;
    3.0 * w * (accepted as f64 * (1.0 - p)).sqrt()
}

/// u-marginal of a support measure, scaled to the surface-area-measure
/// normalization S_{n-1} = 2 Lambda_{n-1}; atoms live in the u factor.
fn s1_marginal(mu: &DiscreteMeasure) -> DiscreteMeasure {
    let mut out = DiscreteMeasure::new(mu.signed);
    for a in &mu.atoms {
        out.push(a.u.clone(), Vec::new(), 2.0 * a.w);
    }
    out
}

/// Total variation of the difference (atoms clustered at tolerance
/// 1e-9) and the smallest cross distance between the two supports.
fn support_contrast(mk: &DiscreteMeasure, ml: &DiscreteMeasure) -> (f64, f64) {
    let mut reps: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut feed = |m: &DiscreteMeasure, sign: f64| {
        for a in &m.atoms {
            let hit = reps.iter_mut().find(|(p, _)| {
                p.iter()
                    .zip(&a.x)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt()
                    <= 1e-9
            });
            match hit {
                Some((_, w)) => *w += sign * a.w,
                None => reps.push((a.x.clone(), sign * a.w)),
            }
        }
    };
    feed(mk, 1.0);
    feed(ml, -1.0);
    let tv: f64 = reps.iter().map(|(_, w)| w.abs()).sum();

    let mut gap = f64::INFINITY;
    for a in &mk.atoms {
        for b in &ml.atoms {
            let d = a
                .x
                .iter()
                .zip(&b.x)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            gap = gap.min(d);
        }
    }
    (tv, gap)
}

fn checked_flow(inst: &DblInstance, what: &str) -> Result<DblCertificate> {
    let cert = dbl_flow(inst)?;
    ensure!(
        cert.is_valid(1e-7),
        "{what}: certificate failed verification (gap {:?}, pair violation {})",
        cert.duality_gap,
        cert.max_pair_violation
    );
    Ok(cert)
}

fn compute_row(
    cfg: &SweepConfig,
    base: Option<&ConvexBody<2>>,
    forms: &[(String, DifferentialForm)],
    row: usize,
) -> Result<SweepRow> {
    let delta = cfg.deltas[row];
    let seed = cfg.row_seed(row);
    let GeneratedPair { k, l, d_h, d_h_bound, magnitude } =
        generate_pair(cfg.scenario, base, delta, seed)?;

    // Monte Carlo route: coupled shells at the extraction radii.
    let sys = vandermonde_coefficients(2)?;
    let mut mus_k = Vec::new();
    let mut mus_l = Vec::new();
    let mut err3 = Vec::new();
    for (j, &rho) in sys.radii.iter().enumerate() {
        let run = coupled_shell_measures(&k, &l, rho, cfg.samples, seed ^ (j as u64 + 1))?;
        err3.push(mc_mass_3sigma(&run.mu_k, cfg.samples) + mc_mass_3sigma(&run.mu_l, cfg.samples));
        mus_k.push((rho, run.mu_k));
        mus_l.push((rho, run.mu_l));
    }
    let lam_k = extract_support_measures(&mus_k, &sys)?;
    let lam_l = extract_support_measures(&mus_l, &sys)?;

    let polytopes = k.is_polytope() && l.is_polytope();
    let mut measures = Vec::with_capacity(cfg.indices.len());
    let mut lam1: Option<(DiscreteMeasure, DiscreteMeasure, f64, f64)> = None;
    for &i in &cfg.indices {
        let stat: f64 = sys.a[i]
            .iter()
            .zip(&err3)
            .map(|(a, e)| a.abs() * e)
            .sum();
        let (ck, cbk) = coarsen(&lam_k[i], cfg.coarsen_h)?;
        let (cl, cbl) = coarsen(&lam_l[i], cfg.coarsen_h)?;
        let cert_mc = checked_flow(
            &DblInstance::difference(&ck, &cl)?,
            &format!("mc route Lambda_{i}"),
        )?;
        let mc_bound = cbk + cbl + stat + SOLVER_TOL;

        let col = if polytopes {
            let pk = k.as_polytope().expect("checked");
            let pl = l.as_polytope().expect("checked");
            let (mk, bk) = exact_support_measure(pk, i, cfg.coarsen_h)?;
            let (ml, bl) = exact_support_measure(pl, i, cfg.coarsen_h)?;
            let cert = checked_flow(
                &DblInstance::difference(&mk, &ml)?,
                &format!("exact route Lambda_{i}"),
            )?;
            let bound = bk + bl + SOLVER_TOL;
            let agree = (cert.value - cert_mc.value).abs() <= bound + mc_bound;
            if i == 1 {
                lam1 = Some((mk, ml, bound, cert.value));
            }
            MeasureCol {
                index: i,
                value: cert.value,
                gap: cert.duality_gap.unwrap_or(f64::NAN),
                bound,
                route: "exact",
                mc_value: cert_mc.value,
                mc_bound,
                agree: Some(agree),
                ratio: cert.value / d_h.sqrt(),
            }
        } else {
            if i == 1 {
                lam1 = Some((ck.clone(), cl.clone(), mc_bound, cert_mc.value));
            }
            MeasureCol {
                index: i,
                value: cert_mc.value,
                gap: cert_mc.duality_gap.unwrap_or(f64::NAN),
                bound: mc_bound,
                route: "mc",
                mc_value: cert_mc.value,
                mc_bound,
                agree: None,
                ratio: cert_mc.value / d_h.sqrt(),
            }
        };
        measures.push(col);
    }

    let mut form_cols = Vec::with_capacity(forms.len());
    for (name, phi) in forms {
        let (tk, ek) = evaluate_normal_cycle(&k, phi, cfg.level)?;
        let (tl, el) = evaluate_normal_cycle(&l, phi, cfg.level)?;
        let dt = (tk - tl).abs();
        form_cols.push(FormCol {
            name: name.clone(),
            dt,
            err: ek + el,
            ratio: dt / d_h.powf(0.2),
        });
    }

    let s1 = match lam1 {
        None => None,
        Some((mk, ml, bound, v1)) => {
            let gk = s1_marginal(&mk);
            let gl = s1_marginal(&ml);
            let cert = checked_flow(&DblInstance::difference(&gk, &gl)?, "S_1 marginal")?;
            // the u-projection is 1-Lipschitz, so on the very same
            // atom lists d_bL(S_1 pair) <= 2 d_bL(Lambda_1 pair) up to
            // solver tolerance
            let rhs = 2.0 * v1 + SOLVER_TOL * (1.0 + cert.value.abs());
            let (tv, support_gap) = support_contrast(&gk, &gl);
            Some(S1Col {
                value: cert.value,
                bound: 2.0 * bound + SOLVER_TOL,
                rhs,
                ok: cert.value <= rhs,
                tv,
                support_gap,
            })
        }
    };

    Ok(SweepRow {
        delta,
        d_h,
        d_h_bound,
        magnitude,
        measures,
        forms: form_cols,
        s1,
    })
}

fn csv_header(cfg: &SweepConfig) -> Vec<String> {
    let mut h = vec![
        "delta".to_string(),
        "d_h".to_string(),
        "d_h_bound".to_string(),
        "magnitude".to_string(),
    ];
    for &i in &cfg.indices {
        for suffix in ["dbl", "gap", "bound", "route", "mc", "mc_bound", "agree", "ratio"] {
            h.push(format!("lam{i}_{suffix}"));
        }
    }
    for name in &cfg.forms {
        h.push(format!("dt_{name}"));
        h.push(format!("dt_err_{name}"));
        h.push(format!("ratio_{name}"));
    }
    if cfg.indices.contains(&1) {
        for c in ["s1_dbl", "s1_bound", "s1_marginal_rhs", "s1_marginal_ok", "s1_tv", "s1_support_gap"] {
            h.push(c.to_string());
        }
    }
    h
}

fn csv_record(row: &SweepRow) -> Vec<String> {
    let f = |v: f64| v.to_string();
    let mut r = vec![f(row.delta), f(row.d_h), f(row.d_h_bound), f(row.magnitude)];
    for m in &row.measures {
        r.push(f(m.value));
        r.push(f(m.gap));
        r.push(f(m.bound));
        r.push(m.route.to_string());
        r.push(f(m.mc_value));
        r.push(f(m.mc_bound));
        r.push(match m.agree {
            None => String::new(),
            Some(true) => "1".into(),
            Some(false) => "0".into(),
        });
        r.push(f(m.ratio));
    }
    for c in &row.forms {
        r.push(f(c.dt));
        r.push(f(c.err));
        r.push(f(c.ratio));
    }
    if let Some(s1) = &row.s1 {
        r.push(f(s1.value));
        r.push(f(s1.bound));
        r.push(f(s1.rhs));
        r.push(if s1.ok { "1".into() } else { "0".into() });
        r.push(f(s1.tv));
        r.push(f(s1.support_gap));
    }
    r
}

/// Rows with delta below the geometric midpoint of the swept range: the
/// asymptotic regime that the stability gates look at. Power laws are
/// straight lines in log delta, so the midpoint is geometric.
fn lower_half(rows: &[SweepRow]) -> &[SweepRow] {
    let gm = (rows[0].delta * rows[rows.len() - 1].delta).sqrt();
    let start = rows.partition_point(|r| r.delta >= gm);
    if start == rows.len() {
        &rows[rows.len() - 1..]
    } else {
        &rows[start..]
    }
}

/// The smallest-delta rows used for the reported lower-range slope; at
/// least three so the fit is defined.
fn slope_tail(rows: &[SweepRow]) -> &[SweepRow] {
    let take = lower_half(rows).len().max(3).min(rows.len());
    &rows[rows.len() - take..]
}

fn fit_pair(full_rows: &[(f64, f64)], tail_rows: &[(f64, f64)]) -> FitPair {
    let (full, full_note) = match fit_loglog(full_rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let (lower, lower_note) = match fit_loglog(tail_rows) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    FitPair { full, full_note, lower, lower_note }
}

/// Stability of a ratio column over the asymptotic rows: bounded
/// variation (< 2x) or numerically zero magnitudes.
fn stability_check(name: &str, pairs: &[(f64, f64)]) -> InvariantCheck {
    let max_mag = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    if max_mag <= ZERO_COLUMN_TOL {
        return InvariantCheck {
            name: name.into(),
            passed: true,
            detail: format!("column numerically zero (max magnitude {max_mag:.2e})"),
        };
    }
    let ratios: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    if ratios.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return InvariantCheck {
            name: name.into(),
            passed: false,
            detail: "nonpositive or non-finite ratio in the asymptotic rows".into(),
        };
    }
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let varies = hi / lo;
    InvariantCheck {
        name: name.into(),
        passed: varies < 2.0,
        detail: format!("ratio varies {varies:.3}x over {} asymptotic rows", ratios.len()),
    }
}

fn build_invariants(cfg: &SweepConfig, rows: &[SweepRow]) -> Vec<InvariantCheck> {
    let mut checks = Vec::new();

    let mut finite = true;
    let mut culprit = String::new();
    for r in rows {
        for m in &r.measures {
            if !(m.value.is_finite() && m.ratio.is_finite()) {
                finite = false;
                culprit = format!("lam{} at delta {}", m.index, r.delta);
            }
        }
        for c in &r.forms {
            if !(c.dt.is_finite() && c.ratio.is_finite()) {
                finite = false;
                culprit = format!("{} at delta {}", c.name, r.delta);
            }
        }
    }
    checks.push(InvariantCheck {
        name: "ratios finite".into(),
        passed: finite,
        detail: if finite { "all distance and ratio columns finite".into() } else { culprit },
    });

    let exact_rows: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.measures.iter().any(|m| m.agree.is_some()))
        .collect();
    let disagreements: usize = exact_rows
        .iter()
        .flat_map(|r| &r.measures)
        .filter(|m| m.agree == Some(false))
        .count();
    checks.push(InvariantCheck {
        name: "oracle agreement".into(),
        passed: disagreements == 0,
        detail: if exact_rows.is_empty() {
            "no polytope rows, nothing to compare".into()
        } else {
            format!(
                "{} exact-route rows, {disagreements} disagreements beyond combined bounds",
                exact_rows.len()
            )
        },
    });

    let tail = lower_half(rows);
    for &i in &cfg.indices {
        let pairs: Vec<(f64, f64)> = tail
            .iter()
            .map(|r| {
                let m = r.measures.iter().find(|m| m.index == i).expect("index present");
                (m.value, m.ratio)
            })
            .collect();
        checks.push(stability_check(&format!("measure ratio stability lam{i}"), &pairs));
    }
    for (fi, name) in cfg.forms.iter().enumerate() {
        let pairs: Vec<(f64, f64)> = tail.iter().map(|r| (r.forms[fi].dt, r.forms[fi].ratio)).collect();
        checks.push(stability_check(&format!("form ratio stability {name}"), &pairs));
    }

    let s1_rows: Vec<&S1Col> = rows.iter().filter_map(|r| r.s1.as_ref()).collect();
    let s1_bad = s1_rows.iter().filter(|s| !s.ok).count();
    checks.push(InvariantCheck {
        name: "marginal comparison bound".into(),
        passed: s1_bad == 0,
        detail: if s1_rows.is_empty() {
            "index 1 not requested, nothing to compare".into()
        } else {
            format!("{} rows, {s1_bad} violations of d_bL(S_1) <= 2 d_bL(Lambda_1)", s1_rows.len())
        },
    });

    checks
}

fn build_fits(cfg: &SweepConfig, rows: &[SweepRow]) -> BTreeMap<String, FitPair> {
    let mut fits = BTreeMap::new();
    let tail = slope_tail(rows);
    for &i in &cfg.indices {
        let col = |rs: &[SweepRow]| -> Vec<(f64, f64)> {
            rs.iter()
                .map(|r| {
                    let m = r.measures.iter().find(|m| m.index == i).expect("index present");
                    (r.d_h, m.value)
                })
                .collect()
        };
        fits.insert(format!("lam{i}"), fit_pair(&col(rows), &col(tail)));
    }
    for (fi, name) in cfg.forms.iter().enumerate() {
        let col = |rs: &[SweepRow]| -> Vec<(f64, f64)> {
            rs.iter().map(|r| (r.d_h, r.forms[fi].dt)).collect()
        };
        fits.insert(format!("dt_{name}"), fit_pair(&col(rows), &col(tail)));
    }
    fits
}

#[derive(Serialize)]
struct Environment {
    package: &'static str,
    version: &'static str,
    ambient_dimension: usize,
    extraction_radii: Vec<f64>,
    lp_oracle_cap: usize,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a SweepConfig,
    environment: Environment,
    row_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    fits: Option<&'a BTreeMap<String, FitPair>>,
    invariants: &'a [InvariantCheck],
}

fn write_sidecar(
    cfg: &SweepConfig,
    fits: Option<&BTreeMap<String, FitPair>>,
    invariants: &[InvariantCheck],
    error: Option<String>,
) -> Result<()> {
    let sidecar = Sidecar {
        config: cfg,
        environment: Environment {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            ambient_dimension: 2,
            extraction_radii: vec![0.5, 1.0],
            lp_oracle_cap: DEFAULT_LP_CAP,
        },
        row_seeds: (0..cfg.deltas.len()).map(|r| cfg.row_seed(r)).collect(),
        error,
        fits,
        invariants,
    };
    let path = cfg.sidecar_path();
    let text = serde_json::to_string_pretty(&sidecar)?;
    fs::write(&path, text).with_context(|| format!("writing sidecar {}", path.display()))?;
    Ok(())
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let base = match &cfg.base {
        Some(b) => Some(b.resolve()?),
        None => None,
    };
    if cfg.scenario != Scenario::BallVsPolygon && base.is_none() {
        bail!("scenario '{}' needs a base body in the config", cfg.scenario);
    }
    let (lo, hi) = centered_box_2d(8.0);
    let forms: Vec<(String, DifferentialForm)> = cfg
        .forms
        .iter()
        .map(|name| Ok((name.clone(), catalog(name, &lo, &hi)?)))
        .collect::<Result<_>>()?;

    // rows are independent; compute concurrently, assemble in delta order
    let results: Vec<Result<SweepRow>> = (0..cfg.deltas.len())
        .into_par_iter()
        .map(|row| compute_row(cfg, base.as_ref(), &forms, row))
        .collect();

    if let Some(dir) = cfg.output.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .with_context(|| format!("creating output directory {}", dir.display()))?;
        }
    }
    let file = fs::File::create(&cfg.output)
        .with_context(|| format!("creating report {}", cfg.output.display()))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(csv_header(cfg))?;

    let mut rows = Vec::with_capacity(results.len());
    for (ri, result) in results.into_iter().enumerate() {
        match result {
            Ok(row) => {
                writer.write_record(csv_record(&row))?;
                writer.flush()?;
                rows.push(row);
            }
            Err(e) => {
                // flush the partial report before propagating
                writer.flush()?;
                let msg = format!("row {ri} (delta {}): {e:#}", cfg.deltas[ri]);
                write_sidecar(cfg, None, &[], Some(msg.clone()))?;
                bail!(msg);
            }
        }
    }
    drop(writer);

    let fits = build_fits(cfg, &rows);
    let invariants = build_invariants(cfg, &rows);
    write_sidecar(cfg, Some(&fits), &invariants, None)?;

    Ok(SweepReport { rows, fits, invariants })
}

/// Reads a report back and fits one column against another on log-log
/// axes (`sweep fit` subcommand).
pub fn fit_report_column(path: &Path, x: &str, y: &str) -> Result<LoglogFit> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening report {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let xi = headers
        .iter()
        .position(|h| h == x)
        .with_context(|| format!("report has no column '{x}'"))?;
    let yi = headers
        .iter()
        .position(|h| h == y)
        .with_context(|| format!("report has no column '{y}'"))?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |idx: usize, name: &str| -> Result<f64> {
            record
                .get(idx)
                .with_context(|| format!("short record in {}", path.display()))?
                .parse::<f64>()
                .with_context(|| format!("non-numeric entry in column '{name}'"))
        };
        rows.push((parse(xi, x)?, parse(yi, y)?));
    }
    fit_loglog(&rows)
}
