//! Metadata-class ranking and the overnight / working-day filters.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};

use crate::csvio;
use crate::error::{Error, Result};
use crate::grid::PopulationDensityMap;
use crate::metadata::{day_of, missing_cell_fraction, DayWindow, EventKind, PresenceSeries, SlotSeries, VolumeSeries};
use crate::regress::pearson;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub window: DayWindow,
    pub excluded_weekdays: Vec<Weekday>,
    pub holidays: Vec<NaiveDate>,
    pub missing_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            window: DayWindow::hours(4, 5),
            excluded_weekdays: vec![Weekday::Sat, Weekday::Sun],
            holidays: Vec::new(),
            missing_threshold: 0.5,
        }
    }
}

pub(crate) fn parse_clock(key: &str, v: &str) -> Result<i64> {
    let bad = || Error::input(format!("{key}: expected HH:MM, got `{v}`"));
    let (h, m) = v.split_once(':').ok_or_else(bad)?;
    let h: i64 = h.trim().parse().map_err(|_| bad())?;
    let m: i64 = m.trim().parse().map_err(|_| bad())?;
    if !(0..=24).contains(&h) || !(0..60).contains(&m) || (h == 24 && m != 0) {
        return Err(bad());
    }
    Ok(h * 3600 + m * 60)
}

fn clock(s: i64) -> String {
    format!("{:02}:{:02}", s / 3600, (s % 3600) / 60)
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window.is_empty() || self.window.start_s < 0 || self.window.end_s > 86_400 {
            return Err(Error::input(format!(
                "time window {}-{} is empty or outside the day",
                clock(self.window.start_s),
                clock(self.window.end_s)
            )));
        }
        if !(0.0..=1.0).contains(&self.missing_threshold) {
            return Err(Error::input(format!("missing_threshold {} outside [0, 1]", self.missing_threshold)));
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Absent keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = FilterConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "window_start" => cfg.window.start_s = parse_clock(k, v)?,
                "window_end" => cfg.window.end_s = parse_clock(k, v)?,
                "excluded_weekdays" => {
                    cfg.excluded_weekdays = list(v)
                        .map(|d| Weekday::from_str(d).map_err(|_| Error::input(format!("unknown weekday `{d}`"))))
                        .collect::<Result<_>>()?
                }
                "holidays" => {
                    cfg.holidays = list(v)
                        .map(|d| NaiveDate::from_str(d).map_err(|_| Error::input(format!("bad holiday date `{d}`"))))
                        .collect::<Result<_>>()?
                }
                "missing_threshold" => {
                    cfg.missing_threshold =
                        v.parse().map_err(|_| Error::input(format!("missing_threshold: bad number `{v}`")))?
                }
                _ => return Err(Error::input(format!("line {}: unknown key `{k}`", no + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&csvio::read_text(path)?)
    }

    pub fn to_text(&self) -> String {
        let days: Vec<String> = self.excluded_weekdays.iter().map(|d| d.to_string()).collect();
        let hols: Vec<String> = self.holidays.iter().map(|d| d.to_string()).collect();
        format!(
            "window_start = {}\nwindow_end = {}\nexcluded_weekdays = {}\nholidays = {}\nmissing_threshold = {}\n",
            clock(self.window.start_s),
            clock(self.window.end_s),
            days.join(","),
            hols.join(","),
            self.missing_threshold
        )
    }
}

/// Keeps slots whose start falls in the daily window.
pub fn apply_time_filter<S: SlotSeries>(series: &S, config: &FilterConfig) -> S {
    let keep: Vec<bool> = series.axis().starts().iter().map(|&s| config.window.contains(s)).collect();
    series.retain_slots(&keep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExclusionReason {
    Weekend,
    Holiday,
    MissingData(f64),
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExclusionReason::Weekend => f.write_str("weekend"),
            ExclusionReason::Holiday => f.write_str("holiday"),
            ExclusionReason::MissingData(x) => write!(f, "missing-data ({x:.3})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayExclusion {
    pub day: NaiveDate,
    pub reasons: Vec<ExclusionReason>,
}

/// Why `day` would be dropped; empty when it is kept.
pub fn exclusion_reasons(day: NaiveDate, config: &FilterConfig, missing: Option<f64>) -> Vec<ExclusionReason> {
    let mut reasons = Vec::new();
    if config.excluded_weekdays.contains(&day.weekday()) {
        reasons.push(ExclusionReason::Weekend);
    }
    if config.holidays.contains(&day) {
        reasons.push(ExclusionReason::Holiday);
    }
    if let Some(x) = missing {
        if x > config.missing_threshold {
            reasons.push(ExclusionReason::MissingData(x));
        }
    }
    reasons
}

/// Removes whole excluded days and logs the reasons for each.
pub fn apply_day_filter<S: SlotSeries>(
    series: &S,
    config: &FilterConfig,
    missing: &BTreeMap<NaiveDate, f64>,
) -> (S, Vec<DayExclusion>) {
    let mut log = Vec::new();
    let mut dropped = Vec::new();
    for day in series.axis().dates() {
        let reasons = exclusion_reasons(day, config, missing.get(&day).copied());
        if !reasons.is_empty() {
            dropped.push(day);
            log.push(DayExclusion { day, reasons });
        }
    }
    let keep: Vec<bool> = series.axis().starts().iter().map(|&s| !dropped.contains(&day_of(s))).collect();
    (series.retain_slots(&keep), log)
}

/// Missing-cell fraction inside the window, for every day that has window slots.
pub fn daily_missing_fractions(presence: &PresenceSeries, window: DayWindow) -> BTreeMap<NaiveDate, f64> {
    presence
        .axis()
        .dates()
        .into_iter()
        .filter_map(|d| missing_cell_fraction(presence, window, d).ok().map(|x| (d, x)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetadataClass {
    Event(EventKind),
    Presence,
}

impl fmt::Display for MetadataClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetadataClass::Event(k) => write!(f, "{k}"),
            MetadataClass::Presence => f.write_str("presence"),
        }
    }
}

fn log_correlation(values: &[f64], census: &[f64]) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = values
        .iter()
        .zip(census)
        .filter(|(v, r)| **v > 0.0 && **r > 0.0)
        .map(|(v, r)| (v.ln(), r.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::insufficient(format!("{} cells with positive values, need 3", x.len())));
    }
    pearson(&x, &y)
}

/// Log–log correlation of each metadata class with the census, over cells,
/// using whole-period aggregates. Sorted by decreasing correlation.
pub fn rank_metadata_classes(
    volumes: &VolumeSeries,
    presence: &PresenceSeries,
    census: &PopulationDensityMap,
) -> Result<Vec<(MetadataClass, f64)>> {
    let n = presence.n_cells();
    if volumes.n_cells() != n || census.values.len() != n {
        return Err(Error::input("volumes, presence and census cover different cells"));
    }
    let surfaces = presence.surfaces();
    let mut table = Vec::new();
    for kind in EventKind::ALL {
        let dens: Vec<f64> = (0..n)
            .map(|c| (0..volumes.n_slots()).map(|s| volumes.get(c, s, kind) as f64).sum::<f64>() / surfaces[c])
            .collect();
        table.push((MetadataClass::Event(kind), log_correlation(&dens, &census.values)?));
    }
    let mut sum = vec![0.0; n];
    let mut seen = vec![0usize; n];
    for s in 0..presence.n_slots() {
        for c in 0..n {
            if let Some(d) = presence.density(c, s) {
                sum[c] += d;
                seen[c] += 1;
            }
        }
    }
    let mean: Vec<f64> = sum.iter().zip(&seen).map(|(s, &k)| if k > 0 { s / k as f64 } else { 0.0 }).collect();
    table.push((MetadataClass::Presence, log_correlation(&mean, &census.values)?));
    table.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(table)
}
