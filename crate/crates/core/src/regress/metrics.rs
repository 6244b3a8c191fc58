use super::PowerLawFit;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NrmseVariant {
    /// Normalized by the range of the ground truth.
    Range,
    /// Normalized by the mean of the ground truth.
    Mean,
}

fn check_pair(rho_hat: &[f64], rho: &[f64]) -> Result<()> {
    if rho_hat.len() != rho.len() {
        return Err(Error::input(format!("{} estimates for {} values", rho_hat.len(), rho.len())));
    }
    if rho.is_empty() {
        return Err(Error::insufficient("no samples to evaluate"));
    }
    Ok(())
}

/// Coefficient of determination against the ground-truth mean.
pub fn r_squared(rho_hat: &[f64], rho: &[f64]) -> Result<f64> {
    check_pair(rho_hat, rho)?;
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    let ss_tot: f64 = rho.iter().map(|r| (r - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::input("R² undefined for constant ground truth"));
    }
    let ss_res: f64 = rho_hat.iter().zip(rho).map(|(h, r)| (r - h).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn rmse(rho_hat: &[f64], rho: &[f64]) -> f64 {
    let ss: f64 = rho_hat.iter().zip(rho).map(|(h, r)| (r - h).powi(2)).sum();
    (ss / rho.len() as f64).sqrt()
}

pub fn nrmse(rho_hat: &[f64], rho: &[f64], variant: NrmseVariant) -> Result<f64> {
    check_pair(rho_hat, rho)?;
    let norm = match variant {
        NrmseVariant::Range => {
            let max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = rho.iter().copied().fold(f64::INFINITY, f64::min);
            max - min
        }
        NrmseVariant::Mean => rho.iter().sum::<f64>() / rho.len() as f64,
    };
    if !(norm > 0.0) {
        return Err(Error::input(format!("NRMSE normalizer is {norm}")));
    }
    Ok(rmse(rho_hat, rho) / norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMetrics {
    pub r2: f64,
    pub nrmse1: f64,
    pub nrmse2: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl FitMetrics {
    pub fn compute(rho_hat: &[f64], rho: &[f64]) -> Result<FitMetrics> {
        Ok(FitMetrics {
            r2: r_squared(rho_hat, rho)?,
            nrmse1: nrmse(rho_hat, rho, NrmseVariant::Range)?,
            nrmse2: nrmse(rho_hat, rho, NrmseVariant::Mean)?,
            mean: rho.iter().sum::<f64>() / rho.len() as f64,
            min: rho.iter().copied().fold(f64::INFINITY, f64::min),
            max: rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            n: rho.len(),
        })
    }
}

/// Applies the fit to every cell, including those left out of training.
pub fn evaluate_static(fit: &PowerLawFit, sigma: &[f64], rho: &[f64]) -> Result<FitMetrics> {
    if sigma.len() != rho.len() {
        return Err(Error::input(format!("sigma has {} values, rho {}", sigma.len(), rho.len())));
    }
    let rho_hat: Vec<f64> = sigma.iter().map(|&s| fit.predict(s)).collect();
    FitMetrics::compute(&rho_hat, rho)
}

/// Metrics on the fit's own inliers.
pub fn training_metrics(fit: &PowerLawFit, sigma: &[f64], rho: &[f64]) -> Result<FitMetrics> {
    if sigma.len() != fit.inliers.len() || rho.len() != fit.inliers.len() {
        return Err(Error::input("fit does not match the samples"));
    }
    let (hat, truth): (Vec<f64>, Vec<f64>) = (0..sigma.len())
        .filter(|&i| fit.inliers[i])
        .map(|i| (fit.predict(sigma[i]), rho[i]))
        .unzip();
    FitMetrics::compute(&hat, &truth)
}
