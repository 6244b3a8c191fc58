use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ols, Line};
use crate::error::{Error, Result};
use crate::stats::{median, quantile_sorted};

/// RANSAC settings for the log–log line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub max_iterations: usize,
    /// Inlier threshold as a multiple of the MAD of initial OLS residuals.
    pub mad_factor: f64,
    /// Lower bound on the threshold so exact data keeps every point.
    pub min_threshold: f64,
    /// Minimum number of usable (positive) samples.
    pub min_samples: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            max_iterations: 1000,
            mad_factor: 2.0,
            min_threshold: 1e-9,
            min_samples: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            level: 0.95,
            min_inliers: 10,
            seed: 0,
        }
    }
}

/// Fitted `rho = alpha * sigma^beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_ci: (f64, f64),
    pub beta_ci: (f64, f64),
    /// Per input sample; samples excluded from fitting are `false`.
    pub inliers: Vec<bool>,
    /// Samples with positive `sigma` and `rho` that took part in the fit.
    pub included: Vec<bool>,
    pub threshold: f64,
    pub seed: u64,
}

impl PowerLawFit {
    pub fn predict(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            // 0^beta with beta > 0; negative densities do not occur
            return if self.beta > 0.0 { 0.0 } else { f64::INFINITY };
        }
        self.alpha * sigma.powf(self.beta)
    }

    pub fn n_inliers(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }

    pub fn n_included(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    /// Included samples rejected by the consensus.
    pub fn is_outlier(&self, i: usize) -> bool {
        self.included[i] && !self.inliers[i]
    }
}

fn usable(s: f64, r: f64) -> bool {
    s > 0.0 && r > 0.0 && s.is_finite() && r.is_finite()
}

pub fn ransac_powerlaw_fit(sigma: &[f64], rho: &[f64], config: &RansacConfig) -> Result<PowerLawFit> {
    ransac_powerlaw_fit_masked(sigma, rho, None, config)
}

/// As [`ransac_powerlaw_fit`], restricted to samples with `eligible[i]`.
pub fn ransac_powerlaw_fit_masked(
    sigma: &[f64],
    rho: &[f64],
    eligible: Option<&[bool]>,
    config: &RansacConfig,
) -> Result<PowerLawFit> {
    if sigma.len() != rho.len() {
        return Err(Error::input(format!("sigma has {} values, rho {}", sigma.len(), rho.len())));
    }
    if let Some(m) = eligible {
        if m.len() != sigma.len() {
            return Err(Error::input("eligibility mask has wrong length"));
        }
    }
    let included: Vec<bool> = (0..sigma.len())
        .map(|i| usable(sigma[i], rho[i]) && eligible.is_none_or(|m| m[i]))
        .collect();
    let idx: Vec<usize> = (0..sigma.len()).filter(|&i| included[i]).collect();
    let need = config.min_samples.max(2);
    if idx.len() < need {
        return Err(Error::insufficient(format!(
            "{} usable samples with positive densities, need {need}",
            idx.len()
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&i| sigma[i].ln()).collect();
    let y: Vec<f64> = idx.iter().map(|&i| rho[i].ln()).collect();

    let initial = ols(&x, &y)?;
    let resid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| b - initial.at(*a)).collect();
    let med = median(&resid).expect("non-empty");
    let abs_dev: Vec<f64> = resid.iter().map(|r| (r - med).abs()).collect();
    let mad = median(&abs_dev).expect("non-empty");
    let threshold = (config.mad_factor * mad).max(config.min_threshold);

    let n = x.len();
    let score = |line: &Line| -> (usize, f64) {
        let mut count = 0;
        let mut sum = 0.0;
        for (a, b) in x.iter().zip(&y) {
            let r = (b - line.at(*a)).abs();
            if r <= threshold {
                count += 1;
                sum += r;
            }
        }
        (count, sum)
    };
    let through = |i: usize, j: usize| -> Option<Line> {
        let dx = x[j] - x[i];
        if dx == 0.0 {
            return None;
        }
        let slope = (y[j] - y[i]) / dx;
        Some(Line {
            intercept: y[i] - slope * x[i],
            slope,
        })
    };

    let mut best: Option<(usize, f64, Line)> = None;
    let mut consider = |line: Line| {
        let (count, sum) = score(&line);
        let better = match &best {
            None => true,
            Some((c, s, _)) => count > *c || (count == *c && sum < *s),
        };
        if better {
            best = Some((count, sum, line));
        }
    };
    let pairs = n * (n - 1) / 2;
    if pairs <= config.max_iterations {
        // every minimal sample fits in the budget: enumerate them
        for i in 0..n {
            for j in i + 1..n {
                if let Some(l) = through(i, j) {
                    consider(l);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.max_iterations {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if let Some(l) = through(i, j) {
                consider(l);
            }
        }
    }
    let (_, _, line) = best.ok_or_else(|| Error::RankDeficient("all sigma values are equal".into()))?;

    let inlier_local: Vec<bool> = x.iter().zip(&y).map(|(a, b)| (b - line.at(*a)).abs() <= threshold).collect();
    let (xi, yi): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(&y)
        .zip(&inlier_local)
        .filter(|(_, k)| **k)
        .map(|((a, b), _)| (*a, *b))
        .unzip();
    let refit = ols(&xi, &yi)?;

    let mut inliers = vec![false; sigma.len()];
    for (k, &i) in idx.iter().enumerate() {
        inliers[i] = inlier_local[k];
    }
    let alpha = refit.intercept.exp();
    Ok(PowerLawFit {
        alpha,
        beta: refit.slope,
        alpha_ci: (alpha, alpha),
        beta_ci: (refit.slope, refit.slope),
        inliers,
        included,
        threshold,
        seed: config.seed,
    })
}

/// Percentile-bootstrap intervals for `(alpha, beta)` from inlier resamples.
/// Intervals are widened if needed so they contain the point estimate.
pub fn bootstrap_ci(
    sigma: &[f64],
    rho: &[f64],
    fit: &PowerLawFit,
    config: &BootstrapConfig,
) -> Result<((f64, f64), (f64, f64))> {
    if sigma.len() != fit.inliers.len() || rho.len() != fit.inliers.len() {
        return Err(Error::input("fit does not match the samples"));
    }
    let pts: Vec<(f64, f64)> = (0..sigma.len())
        .filter(|&i| fit.inliers[i])
        .map(|i| (sigma[i].ln(), rho[i].ln()))
        .collect();
    if pts.len() < config.min_inliers {
        return Err(Error::insufficient(format!(
            "{} inliers, bootstrap needs {}",
            pts.len(),
            config.min_inliers
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut alphas = Vec::with_capacity(config.resamples);
    let mut betas = Vec::with_capacity(config.resamples);
    let (mut xs, mut ys) = (vec![0.0; pts.len()], vec![0.0; pts.len()]);
    for _ in 0..config.resamples {
        for k in 0..pts.len() {
            let (a, b) = pts[rng.random_range(0..pts.len())];
            xs[k] = a;
            ys[k] = b;
        }
        // resamples that hit a single abscissa carry no slope information
        if let Ok(l) = ols(&xs, &ys) {
            alphas.push(l.intercept.exp());
            betas.push(l.slope);
        }
    }
    if alphas.is_empty() {
        return Err(Error::RankDeficient("every bootstrap resample was degenerate".into()));
    }
    let tail = (1.0 - config.level) / 2.0;
    let interval = |v: &mut Vec<f64>, point: f64| {
        v.sort_by(f64::total_cmp);
        let lo = quantile_sorted(v, tail).min(point);
        let hi = quantile_sorted(v, 1.0 - tail).max(point);
        (lo, hi)
    };
    Ok((interval(&mut alphas, fit.alpha), interval(&mut betas, fit.beta)))
}

/// RANSAC fit followed by bootstrap intervals (same seed for both).
pub fn fit_with_ci(
    sigma: &[f64],
    rho: &[f64],
    eligible: Option<&[bool]>,
    ransac: &RansacConfig,
    bootstrap: &BootstrapConfig,
) -> Result<PowerLawFit> {
    let mut fit = ransac_powerlaw_fit_masked(sigma, rho, eligible, ransac)?;
    let (a, b) = bootstrap_ci(sigma, rho, &fit, bootstrap)?;
    fit.alpha_ci = a;
    fit.beta_ci = b;
    Ok(fit)
}

/// Samples that are outliers in at least `threshold` of the fits.
pub fn persistent_outlier_cells(fits: &[PowerLawFit], threshold: f64) -> Result<Vec<usize>> {
    if fits.len() < 5 {
        return Err(Error::insufficient(format!(
            "persistent outliers need at least 5 daily fits, got {}",
            fits.len()
        )));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::input(format!("persistence threshold {threshold} outside [0, 1]")));
    }
    let n = fits[0].inliers.len();
    if fits.iter().any(|f| f.inliers.len() != n) {
        return Err(Error::input("daily fits cover different cell sets"));
    }
    Ok((0..n)
        .filter(|&i| {
            let k = fits.iter().filter(|f| f.is_outlier(i)).count();
            k as f64 >= threshold * fits.len() as f64
        })
        .collect())
}
