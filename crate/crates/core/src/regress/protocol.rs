//! Contiguous k-fold validation of the static model over days.

use chrono::NaiveDate;
use rayon::prelude::*;

use super::{
    evaluate_static, fit_with_ci, persistent_outlier_cells, ransac_powerlaw_fit_masked, training_metrics,
    BootstrapConfig, FitMetrics, PowerLawFit, RansacConfig,
};
use crate::error::{Error, Result};
use crate::metadata::{day_of, PresenceSeries, SlotSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub ransac: RansacConfig,
    pub bootstrap: BootstrapConfig,
    /// Fraction of daily fits in which a cell must be an outlier to be dropped.
    pub persistence: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 3,
            ransac: RansacConfig::default(),
            bootstrap: BootstrapConfig::default(),
            persistence: 0.8,
        }
    }
}

impl CvConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.ransac.seed = seed;
        self.bootstrap.seed = seed;
        self
    }
}

/// A trained static model and the cells dropped as persistent outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticModel {
    pub fit: PowerLawFit,
    pub persistent_outliers: Vec<usize>,
    pub daily_fits: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub train_days: Vec<NaiveDate>,
    pub test_days: Vec<NaiveDate>,
    pub model: StaticModel,
    /// On the training inliers.
    pub train: FitMetrics,
    /// On every cell.
    pub test: FitMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub folds: Vec<FoldResult>,
}

impl CrossValidation {
    pub fn mean_test_r2(&self) -> f64 {
        self.folds.iter().map(|f| f.test.r2).sum::<f64>() / self.folds.len() as f64
    }
}

/// Per-cell mean density over the observed slots of `days`; 0 if never observed.
pub fn day_mean_density(presence: &PresenceSeries, days: &[NaiveDate]) -> Vec<f64> {
    let n = presence.n_cells();
    let mut sum = vec![0.0; n];
    let mut seen = vec![0usize; n];
    for (s, &start) in presence.axis().starts().iter().enumerate() {
        if !days.contains(&day_of(start)) {
            continue;
        }
        for c in 0..n {
            if let Some(d) = presence.density(c, s) {
                sum[c] += d;
                seen[c] += 1;
            }
        }
    }
    sum.iter().zip(&seen).map(|(s, &k)| if k > 0 { s / k as f64 } else { 0.0 }).collect()
}

/// Trains on `days`: daily fits locate persistent outliers, which are then
/// left out of the final fit on the period-mean densities.
pub fn train_static(
    presence: &PresenceSeries,
    census: &[f64],
    days: &[NaiveDate],
    eligible: Option<&[bool]>,
    config: &CvConfig,
) -> Result<StaticModel> {
    let n = presence.n_cells();
    if census.len() != n {
        return Err(Error::input(format!("census has {} cells, presence {n}", census.len())));
    }
    let daily: Vec<PowerLawFit> = days
        .par_iter()
        .filter_map(|d| {
            let sigma = day_mean_density(presence, std::slice::from_ref(d));
            ransac_powerlaw_fit_masked(&sigma, census, eligible, &config.ransac).ok()
        })
        .collect();
    let persistent = if daily.len() >= 5 {
        persistent_outlier_cells(&daily, config.persistence)?
    } else {
        Vec::new()
    };
    let mut mask: Vec<bool> = eligible.map(|m| m.to_vec()).unwrap_or_else(|| vec![true; n]);
    for &c in &persistent {
        mask[c] = false;
    }
    let sigma = day_mean_density(presence, days);
    let fit = fit_with_ci(&sigma, census, Some(&mask), &config.ransac, &config.bootstrap)?;
    Ok(StaticModel {
        fit,
        persistent_outliers: persistent,
        daily_fits: daily.len(),
    })
}

/// Splits the days of `presence` into `folds` contiguous blocks; each block
/// is the test set once while the rest trains.
pub fn cross_validate(
    presence: &PresenceSeries,
    census: &[f64],
    eligible: Option<&[bool]>,
    config: &CvConfig,
) -> Result<CrossValidation> {
    let days = presence.axis().dates();
    let k = config.folds;
    if k < 2 || days.len() < k {
        return Err(Error::insufficient(format!("{} days cannot be split into {k} folds", days.len())));
    }
    let bounds: Vec<usize> = (0..=k).map(|f| f * days.len() / k).collect();
    let folds = (0..k)
        .into_par_iter()
        .map(|f| {
            let test_days = days[bounds[f]..bounds[f + 1]].to_vec();
            let train_days: Vec<NaiveDate> =
                days.iter().filter(|d| !test_days.contains(d)).copied().collect();
            let model = train_static(presence, census, &train_days, eligible, config)?;
            let train_sigma = day_mean_density(presence, &train_days);
            let test_sigma = day_mean_density(presence, &test_days);
            Ok(FoldResult {
                train: training_metrics(&model.fit, &train_sigma, census)?,
                test: evaluate_static(&model.fit, &test_sigma, census)?,
                train_days,
                test_days,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CrossValidation { folds })
}
