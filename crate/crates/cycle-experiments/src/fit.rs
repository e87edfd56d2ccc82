//! Ordinary least squares on log-transformed columns.

use anyhow::{bail, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct LoglogFit {
    pub slope: f64,
    pub intercept: f64,
    /// largest |log y - (intercept + slope log x)| over the used rows
    pub max_residual: f64,
    pub used: usize,
    /// rows dropped because x or y was not a positive finite number
    pub excluded: usize,
}

/// Fits log y = intercept + slope * log x by OLS. Rows with nonpositive
/// or non-finite entries are excluded and counted; at least three rows
/// must survive.
pub fn fit_loglog(rows: &[(f64, f64)]) -> Result<LoglogFit> {
    let mut pts = Vec::with_capacity(rows.len());
    let mut excluded = 0usize;
    for &(x, y) in rows {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            pts.push((x.ln(), y.ln()));
        } else {
            excluded += 1;
        }
    }
    let m = pts.len();
    if m < 3 {
        bail!("log-log fit needs at least 3 positive rows, got {m} ({excluded} excluded)");
    }
    let mf = m as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = mf * sxx - sx * sx;
    if denom.abs() < 1e-12 * (1.0 + sxx.abs()) {
        bail!("log-log fit is degenerate: all x values coincide");
    }
    let slope = (mf * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / mf;
    let max_residual = pts
        .iter()
        .map(|&(lx, ly)| (ly - intercept - slope * lx).abs())
        .fold(0.0, f64::max);
    Ok(LoglogFit {
        slope,
        intercept,
        max_residual,
        used: m,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_power_law_is_recovered_to_machine_precision() {
        let rows: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.02, 0.01]
            .iter()
            .map(|&d| (d, d))
            .collect();
        let fit = fit_loglog(&rows).unwrap();
        assert!((fit.slope - 1.0).abs() <= 1e-12, "{}", fit.slope);
        assert!(fit.intercept.abs() <= 1e-12);
        assert!(fit.max_residual <= 1e-12);
        assert_eq!((fit.used, fit.excluded), (5, 0));
    }

    #[test]
    fn scaled_square_root_law_recovers_slope_and_intercept() {
        let rows: Vec<(f64, f64)> = [0.4f64, 0.2, 0.1, 0.05]
            .iter()
            .map(|&d| (d, 3.0 * d.sqrt()))
            .collect();
        let fit = fit_loglog(&rows).unwrap();
        assert!((fit.slope - 0.5).abs() <= 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() <= 1e-12);
    }

    #[test]
    fn mild_multiplicative_noise_perturbs_the_slope_mildly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<(f64, f64)> = (1..=12)
            .map(|k| {
                let d = 0.3 / k as f64;
                (d, d.sqrt() * (1.0 + 0.01 * rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let fit = fit_loglog(&rows).unwrap();
        assert!((fit.slope - 0.5).abs() <= 0.02, "{}", fit.slope);
    }

    #[test]
    fn nonpositive_rows_are_excluded_and_flagged() {
        let rows = vec![(0.2, 0.1), (0.1, 0.0), (0.05, 0.04), (0.02, -3.0), (0.01, 0.008)];
        let fit = fit_loglog(&rows).unwrap();
        assert_eq!((fit.used, fit.excluded), (3, 2));
    }

    #[test]
    fn too_few_positive_rows_is_an_error() {
        assert!(fit_loglog(&[(0.1, 1.0), (0.05, 0.5)]).is_err());
        assert!(fit_loglog(&[(0.1, 1.0), (0.05, 0.0), (0.02, 0.0), (0.01, 0.0)]).is_err());
    }
}
