//! Log–log power-law regression `rho = alpha * sigma^beta`, robust fitting,
//! confidence intervals and accuracy metrics.
//!
//! All logarithms are natural.

mod metrics;
mod protocol;
mod ransac;

pub mod io;

pub use metrics::{evaluate_static, nrmse, r_squared, training_metrics, FitMetrics, NrmseVariant};
pub use protocol::{
    cross_validate, day_mean_density, train_static, CrossValidation, CvConfig, FoldResult, StaticModel,
};
pub use ransac::{
    bootstrap_ci, fit_with_ci, persistent_outlier_cells, ransac_powerlaw_fit,
    ransac_powerlaw_fit_masked, BootstrapConfig, PowerLawFit, RansacConfig,
};

use crate::error::{Error, Result};

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::input(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::insufficient(format!("correlation needs at least 3 points, got {}", x.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub intercept: f64,
    pub slope: f64,
}

impl Line {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<Line> {
    if x.len() != y.len() {
        return Err(Error::input(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::insufficient(format!("a line needs at least 2 points, got {}", x.len())));
    }
    if x.iter().all(|v| *v == x[0]) {
        return Err(Error::RankDeficient("all abscissae are equal".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        return Err(Error::RankDeficient("all abscissae are equal".into()));
    }
    let slope = sxy / sxx;
    Ok(Line {
        intercept: my - slope * mx,
        slope,
    })
}
