//! Fit and outlier CSV files.

use std::path::Path;

use super::{FitMetrics, PowerLawFit};
use crate::csvio::{self, CsvOut};
use crate::error::{Error, Result};
use crate::grid::GridTessellation;

pub const FIT_HEADER: [&str; 12] = [
    "alpha", "alpha_lo", "alpha_hi", "beta", "beta_lo", "beta_hi", "r2", "nrmse1", "nrmse2", "n_inliers",
    "n_samples", "seed",
];
pub const OUTLIER_HEADER: [&str; 1] = ["cell_id"];

/// The parameters of a stored fit; the inlier mask is not persisted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRecord {
    pub alpha: f64,
    pub alpha_ci: (f64, f64),
    pub beta: f64,
    pub beta_ci: (f64, f64),
    pub r2: f64,
    pub nrmse1: f64,
    pub nrmse2: f64,
    pub n_inliers: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl FitRecord {
    pub fn new(fit: &PowerLawFit, metrics: &FitMetrics) -> Self {
        FitRecord {
            alpha: fit.alpha,
            alpha_ci: fit.alpha_ci,
            beta: fit.beta,
            beta_ci: fit.beta_ci,
            r2: metrics.r2,
            nrmse1: metrics.nrmse1,
            nrmse2: metrics.nrmse2,
            n_inliers: fit.n_inliers(),
            n_samples: fit.n_included(),
            seed: fit.seed,
        }
    }

    pub fn predict(&self, sigma: f64) -> f64 {
        if sigma <= 0.0 {
            return 0.0;
        }
        self.alpha * sigma.powf(self.beta)
    }
}

pub fn write_fits(path: &Path, fits: &[FitRecord]) -> Result<()> {
    let mut out = CsvOut::create(path, &FIT_HEADER)?;
    for f in fits {
        out.row([
            f.alpha.to_string(),
            f.alpha_ci.0.to_string(),
            f.alpha_ci.1.to_string(),
            f.beta.to_string(),
            f.beta_ci.0.to_string(),
            f.beta_ci.1.to_string(),
            f.r2.to_string(),
            f.nrmse1.to_string(),
            f.nrmse2.to_string(),
            f.n_inliers.to_string(),
            f.n_samples.to_string(),
            f.seed.to_string(),
        ])?;
    }
    out.finish()
}

pub fn read_fits(path: &Path) -> Result<Vec<FitRecord>> {
    let mut fits = Vec::new();
    for rec in csvio::records(path, &FIT_HEADER)? {
        let rec = rec?;
        let g = |i: usize| csvio::parse::<f64>(&rec, i, FIT_HEADER[i], path);
        let alpha = g(0)?;
        if !(alpha > 0.0) {
            return Err(Error::input(format!("{}: alpha {alpha} is not positive", path.display())));
        }
        fits.push(FitRecord {
            alpha,
            alpha_ci: (g(1)?, g(2)?),
            beta: g(3)?,
            beta_ci: (g(4)?, g(5)?),
            r2: g(6)?,
            nrmse1: g(7)?,
            nrmse2: g(8)?,
            n_inliers: csvio::parse(&rec, 9, "n_inliers", path)?,
            n_samples: csvio::parse(&rec, 10, "n_samples", path)?,
            seed: csvio::parse(&rec, 11, "seed", path)?,
        });
    }
    if fits.is_empty() {
        return Err(Error::input(format!("{}: no fit rows", path.display())));
    }
    Ok(fits)
}

pub fn write_outliers(path: &Path, grid: &GridTessellation, cells: &[usize]) -> Result<()> {
    let mut out = CsvOut::create(path, &OUTLIER_HEADER)?;
    for &c in cells {
        out.row([grid.cells()[c].id.as_str()])?;
    }
    out.finish()
}
