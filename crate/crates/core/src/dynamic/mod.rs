//! Activity-aware dynamic density estimation.
//!
//! The static power law is extended by letting its parameters depend on the
//! subscriber activity level `lambda`:
//! `rho = exp(a_alpha * lambda + b_alpha) * sigma^(a_beta * lambda + b_beta)`.

mod attendance;
pub mod io;

pub use attendance::{
    compare_models, estimate_attendance, event_cells, fit_landuse_powerlaws, xu_attendance, xu_estimate, AttendanceConfig,
    AttendanceEstimate, Comparison, EventErrors, EventSpec, LandUseFits, Venue, XuSlot,
};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metadata::{day_of, second_of_day, EventKind, PresenceSeries, SlotAxis, SlotSeries, VolumeSeries};
use crate::regress::{ols, ransac_powerlaw_fit_masked, PowerLawFit, RansacConfig};
use crate::stats::{mean, population_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActivityKind {
    #[default]
    Call,
    Sms,
}

impl ActivityKind {
    pub fn kinds(self) -> [EventKind; 2] {
        match self {
            ActivityKind::Call => [EventKind::CallIn, EventKind::CallOut],
            ActivityKind::Sms => [EventKind::SmsIn, EventKind::SmsOut],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActivityKind::Call => "call",
            ActivityKind::Sms => "sms",
        }
    }
}

impl fmt::Display for ActivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActivityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "call" => Ok(ActivityKind::Call),
            "sms" => Ok(ActivityKind::Sms),
            _ => Err(Error::input(format!("unknown activity kind `{s}` (call or sms)"))),
        }
    }
}

/// Events per present subscriber per slot; `None` where nobody is present.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityLevel {
    pub kind: ActivityKind,
    axis: SlotAxis,
    n_cells: usize,
    values: Vec<Option<f64>>,
    city_mean: Vec<Option<f64>>,
}

impl ActivityLevel {
    pub fn axis(&self) -> &SlotAxis {
        &self.axis
    }

    pub fn get(&self, cell: usize, slot: usize) -> Option<f64> {
        self.values[slot * self.n_cells + cell]
    }

    pub fn slot(&self, slot: usize) -> &[Option<f64>] {
        &self.values[slot * self.n_cells..(slot + 1) * self.n_cells]
    }

    /// Mean over the cells where the level is defined.
    pub fn city_mean(&self, slot: usize) -> Option<f64> {
        self.city_mean[slot]
    }

    /// Mean over the defined cells among `cells`.
    pub fn mean_over(&self, slot: usize, cells: &[bool]) -> Option<f64> {
        let v: Vec<f64> = self.slot(slot).iter().zip(cells).filter(|(_, k)| **k).filter_map(|(v, _)| *v).collect();
        (!v.is_empty()).then(|| mean(&v))
    }
}

pub fn activity_level(volumes: &VolumeSeries, presence: &PresenceSeries, kind: ActivityKind) -> Result<ActivityLevel> {
    if volumes.axis() != presence.axis() {
        return Err(Error::input("volumes and presence have different slot axes"));
    }
    let n = presence.n_cells();
    if volumes.n_cells() != n {
        return Err(Error::input("volumes and presence cover different cells"));
    }
    let [k_in, k_out] = kind.kinds();
    let mut values = Vec::with_capacity(n * presence.n_slots());
    let mut city_mean = Vec::with_capacity(presence.n_slots());
    for s in 0..presence.n_slots() {
        let (mut sum, mut k) = (0.0, 0usize);
        for c in 0..n {
            let v = match presence.observed(c, s) {
                Some(count) if count > 0 => {
                    let l = (volumes.get(c, s, k_in) + volumes.get(c, s, k_out)) as f64 / count as f64;
                    sum += l;
                    k += 1;
                    Some(l)
                }
                _ => None,
            };
            values.push(v);
        }
        city_mean.push((k > 0).then(|| sum / k as f64));
    }
    Ok(ActivityLevel {
        kind,
        axis: presence.axis().clone(),
        n_cells: n,
        values,
        city_mean,
    })
}

/// Parameters of the activity-dependent power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultivariateParams {
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_beta: f64,
    pub b_beta: f64,
    pub kind: ActivityKind,
}

impl MultivariateParams {
    pub fn alpha(&self, lambda: f64) -> f64 {
        (self.a_alpha * lambda + self.b_alpha).exp()
    }

    pub fn beta(&self, lambda: f64) -> f64 {
        self.a_beta * lambda + self.b_beta
    }

    pub fn predict(&self, sigma: f64, lambda: f64) -> f64 {
        if sigma == 0.0 {
            return if self.beta(lambda) > 0.0 { 0.0 } else { f64::INFINITY };
        }
        self.alpha(lambda) * sigma.powf(self.beta(lambda))
    }
}

/// One overnight fit together with the activity level it was observed at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaPair {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LambdaPair {
    pub fn new(lambda: f64, fit: &PowerLawFit) -> Self {
        LambdaPair {
            lambda,
            alpha: fit.alpha,
            beta: fit.beta,
        }
    }
}

/// Least-squares lines of `ln alpha` and `beta` against `lambda`.
pub fn fit_lambda_lines(pairs: &[LambdaPair], kind: ActivityKind) -> Result<MultivariateParams> {
    if pairs.len() < 2 {
        return Err(Error::insufficient(format!("{} (lambda, fit) pairs, need at least 2", pairs.len())));
    }
    if let Some(p) = pairs.iter().find(|p| !(p.alpha > 0.0)) {
        return Err(Error::input(format!("alpha {} is not positive", p.alpha)));
    }
    let lambda: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    let ln_alpha: Vec<f64> = pairs.iter().map(|p| p.alpha.ln()).collect();
    let beta: Vec<f64> = pairs.iter().map(|p| p.beta).collect();
    let a = ols(&lambda, &ln_alpha).map_err(|e| match e {
        Error::RankDeficient(_) => Error::RankDeficient("all activity levels are equal".into()),
        other => other,
    })?;
    let b = ols(&lambda, &beta)?;
    Ok(MultivariateParams {
        a_alpha: a.slope,
        b_alpha: a.intercept,
        a_beta: b.slope,
        b_beta: b.intercept,
        kind,
    })
}

/// Hourly static fits inside `[start_h, end_h)` of each day, each paired with
/// the mean activity level of the fitted cells in that hour.
pub fn overnight_pairs(
    presence: &PresenceSeries,
    activity: &ActivityLevel,
    census: &[f64],
    eligible: Option<&[bool]>,
    hours: (i64, i64),
    ransac: &RansacConfig,
) -> Result<Vec<LambdaPair>> {
    if activity.axis() != presence.axis() {
        return Err(Error::input("activity and presence have different slot axes"));
    }
    let n = presence.n_cells();
    let mut groups: BTreeMap<(NaiveDate, i64), Vec<usize>> = BTreeMap::new();
    for (s, &start) in presence.axis().starts().iter().enumerate() {
        let h = second_of_day(start) / 3600;
        if h >= hours.0 && h < hours.1 {
            groups.entry((day_of(start), h)).or_default().push(s);
        }
    }
    let all = vec![true; n];
    let mask = eligible.unwrap_or(&all);
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let pairs = groups
        .par_iter()
        .filter_map(|slots| {
            let mut sigma = vec![0.0; n];
            let mut seen = vec![0usize; n];
            for &s in slots {
                for c in 0..n {
                    if let Some(d) = presence.density(c, s) {
                        sigma[c] += d;
                        seen[c] += 1;
                    }
                }
            }
            for c in 0..n {
                if seen[c] > 0 {
                    sigma[c] /= seen[c] as f64;
                }
            }
            let fit = ransac_powerlaw_fit_masked(&sigma, census, eligible, ransac).ok()?;
            let lambdas: Vec<f64> = slots.iter().filter_map(|&s| activity.mean_over(s, mask)).collect();
            (!lambdas.is_empty()).then(|| LambdaPair::new(mean(&lambdas), &fit))
        })
        .collect();
    Ok(pairs)
}

/// Estimated densities for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicSlot {
    pub rho_hat: Vec<f64>,
    /// Cells whose own activity level was undefined.
    pub fallback: Vec<bool>,
}

/// Applies the multivariate model cell by cell. Cells with undefined
/// activity use `city_lambda`, or 0 when that is undefined as well.
pub fn estimate_dynamic(
    sigma: &[f64],
    lambda: &[Option<f64>],
    city_lambda: Option<f64>,
    params: &MultivariateParams,
) -> Result<DynamicSlot> {
    if sigma.len() != lambda.len() {
        return Err(Error::input("sigma and lambda have different lengths"));
    }
    if let Some(s) = sigma.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::input(format!("presence density {s} is negative")));
    }
    let mut fallback = vec![false; sigma.len()];
    let rho_hat = sigma
        .iter()
        .zip(lambda)
        .zip(fallback.iter_mut())
        .map(|((&s, l), fb)| {
            let l = l.unwrap_or_else(|| {
                *fb = true;
                city_lambda.unwrap_or(0.0)
            });
            params.predict(s, l)
        })
        .collect();
    Ok(DynamicSlot { rho_hat, fallback })
}

/// Per-cell, per-slot estimates, slot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicSeries {
    pub axis: SlotAxis,
    pub n_cells: usize,
    pub rho_hat: Vec<f64>,
    pub fallback: Vec<bool>,
}

impl DynamicSeries {
    pub fn get(&self, cell: usize, slot: usize) -> f64 {
        self.rho_hat[slot * self.n_cells + cell]
    }

    pub fn slot(&self, slot: usize) -> &[f64] {
        &self.rho_hat[slot * self.n_cells..(slot + 1) * self.n_cells]
    }
}

/// Missing presence counts as zero density.
pub fn estimate_dynamic_series(
    presence: &PresenceSeries,
    activity: &ActivityLevel,
    params: &MultivariateParams,
) -> Result<DynamicSeries> {
    if activity.axis() != presence.axis() {
        return Err(Error::input("activity and presence have different slot axes"));
    }
    let slots: Vec<DynamicSlot> = (0..presence.n_slots())
        .into_par_iter()
        .map(|s| estimate_dynamic(&presence.slot_densities(s), activity.slot(s), activity.city_mean(s), params))
        .collect::<Result<_>>()?;
    let mut rho_hat = Vec::with_capacity(presence.n_slots() * presence.n_cells());
    let mut fallback = Vec::with_capacity(rho_hat.capacity());
    for s in slots {
        rho_hat.extend(s.rho_hat);
        fallback.extend(s.fallback);
    }
    Ok(DynamicSeries {
        axis: presence.axis().clone(),
        n_cells: presence.n_cells(),
        rho_hat,
        fallback,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZScores {
    /// Slot-major like the input.
    pub z: Vec<f64>,
    /// Cells with zero standard deviation; their z is 0.
    pub constant: Vec<bool>,
}

/// Standardizes each cell's series by its own mean and population standard
/// deviation over the whole period. `values` is slot-major.
pub fn zscore(values: &[f64], n_cells: usize) -> Result<ZScores> {
    if n_cells == 0 || !values.len().is_multiple_of(n_cells) {
        return Err(Error::input("values do not form whole slots"));
    }
    let n_slots = values.len() / n_cells;
    if n_slots < 2 {
        return Err(Error::insufficient(format!("z-scores need at least 2 slots, got {n_slots}")));
    }
    let mut z = vec![0.0; values.len()];
    let mut constant = vec![false; n_cells];
    for c in 0..n_cells {
        let series: Vec<f64> = (0..n_slots).map(|s| values[s * n_cells + c]).collect();
        let mu = mean(&series);
        let sd = population_std(&series);
        if sd == 0.0 {
            constant[c] = true;
            continue;
        }
        for s in 0..n_slots {
            z[s * n_cells + c] = (series[s] - mu) / sd;
        }
    }
    Ok(ZScores { z, constant })
}
