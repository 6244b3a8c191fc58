//! Scenario configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::landuse::LandUse;
use crate::metadata::SECONDS_PER_DAY;

/// Hourly activity multipliers (hour 0 is midnight), one row per land use in
/// `LandUse::ALL` order. Night minima, work-hour or evening maxima.
pub const DEFAULT_PROFILES: [[f64; 24]; 5] = [
    // residential
    [
        0.16, 0.09, 0.06, 0.05, 0.05, 0.06, 0.12, 0.30, 0.42, 0.46, 0.50, 0.55, 0.62, 0.58, 0.55, 0.56, 0.62,
        0.74, 0.86, 0.92, 0.88, 0.72, 0.50, 0.28,
    ],
    // office
    [
        0.08, 0.06, 0.05, 0.05, 0.05, 0.06, 0.10, 0.34, 0.78, 1.00, 1.00, 0.95, 0.82, 0.88, 0.98, 0.96, 0.90,
        0.74, 0.50, 0.32, 0.24, 0.18, 0.13, 0.10,
    ],
    // touristic
    [
        0.20, 0.12, 0.08, 0.06, 0.05, 0.06, 0.10, 0.22, 0.45, 0.65, 0.80, 0.88, 0.92, 0.92, 0.88, 0.86, 0.88,
        0.92, 0.98, 1.00, 0.96, 0.85, 0.62, 0.36,
    ],
    // university
    [
        0.10, 0.07, 0.05, 0.05, 0.05, 0.06, 0.10, 0.28, 0.62, 0.90, 1.00, 1.00, 0.86, 0.92, 1.00, 0.94, 0.80,
        0.62, 0.46, 0.36, 0.30, 0.24, 0.18, 0.13,
    ],
    // shopping
    [
        0.10, 0.07, 0.05, 0.05, 0.05, 0.06, 0.08, 0.16, 0.32, 0.52, 0.70, 0.82, 0.90, 0.88, 0.86, 0.90, 0.96,
        1.00, 1.00, 0.94, 0.76, 0.52, 0.30, 0.16,
    ],
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Fraction of the population subscribed to the observed operator.
    pub market_share: f64,
    pub start_date: NaiveDate,
    pub days: usize,
    /// Days simulated before `start_date` so every device is registered.
    pub warmup_days: usize,
    pub slot_s: i64,
    pub holidays: Vec<NaiveDate>,
    /// Minimum count kept by sanitization.
    pub sanitize_k: u32,
    pub grid: GridConfig,
    pub population: PopulationConfig,
    pub landuse: LandUseConfig,
    pub behaviour: BehaviourConfig,
    pub rates: RateConfig,
    /// Replaces the default hourly profile of a land use.
    pub profiles: BTreeMap<LandUse, Vec<f64>>,
    pub events: Vec<EventConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            market_share: 0.35,
            start_date: NaiveDate::from_ymd_opt(2015, 3, 2).expect("valid date"),
            days: 7,
            warmup_days: 1,
            slot_s: 900,
            holidays: Vec::new(),
            sanitize_k: 1,
            grid: GridConfig::default(),
            population: PopulationConfig::default(),
            landuse: LandUseConfig::default(),
            behaviour: BehaviourConfig::default(),
            rates: RateConfig::default(),
            profiles: BTreeMap::new(),
            events: Vec::new(),
        }
    }
}

/// Rectilinear grid; cell sides grow from the centre outwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub columns: usize,
    pub rows: usize,
    /// Smallest cell (width, height) in meters.
    pub min_cell_m: [f64; 2],
    pub max_cell_m: [f64; 2],
    pub admin_columns: usize,
    pub admin_rows: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            columns: 12,
            rows: 12,
            min_cell_m: [255.0, 325.0],
            max_cell_m: [2000.0, 2500.0],
            admin_columns: 5,
            admin_rows: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    pub total: u64,
    /// Spread of log density across administrative areas.
    pub log_sigma: f64,
    /// Drop in log density from the centre to the corners.
    pub centre_gradient: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            total: 200_000,
            log_sigma: 0.6,
            centre_gradient: 1.0,
        }
    }
}

/// Shares of cells per non-residential land use; the rest is residential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandUseConfig {
    pub office: f64,
    pub touristic: f64,
    pub university: f64,
    pub shopping: f64,
    /// Overnight guests per census resident, absent from the census.
    pub visitors: BTreeMap<LandUse, f64>,
}

impl Default for LandUseConfig {
    fn default() -> Self {
        LandUseConfig {
            office: 0.12,
            touristic: 0.08,
            university: 0.05,
            shopping: 0.08,
            visitors: BTreeMap::from([(LandUse::Touristic, 1.0), (LandUse::University, 0.6)]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviourConfig {
    /// Fraction of residents commuting on working days.
    pub employed: f64,
    /// Departure and return windows, hours after midnight.
    pub commute_out_h: [f64; 2],
    pub commute_back_h: [f64; 2],
    /// Chance of an evening out before a working day and before a day off.
    pub outing_workday: f64,
    pub outing_day_off: f64,
    pub outing_start_h: [f64; 2],
    pub outing_end_h: [f64; 2],
    /// Applies to every rate on weekends and holidays.
    pub day_off_rate_multiplier: f64,
    /// Per-subscriber multiplicative log-normal noise on all rates.
    pub rate_noise_log_sigma: f64,
    /// Extra data use of event attendees while at the venue.
    pub attendee_data_multiplier: f64,
}

impl Default for BehaviourConfig {
    fn default() -> Self {
        BehaviourConfig {
            employed: 0.6,
            commute_out_h: [8.25, 9.5],
            commute_back_h: [17.0, 19.5],
            outing_workday: 0.1,
            outing_day_off: 0.5,
            outing_start_h: [19.5, 21.0],
            outing_end_h: [22.5, 23.9],
            day_off_rate_multiplier: 1.0,
            rate_noise_log_sigma: 0.3,
            attendee_data_multiplier: 3.0,
        }
    }
}

/// Events per subscriber-hour at profile multiplier 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub call_in: f64,
    pub call_out: f64,
    pub sms_in: f64,
    pub sms_out: f64,
    pub net: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        RateConfig {
            call_in: 0.4,
            call_out: 0.4,
            sms_in: 0.3,
            sms_out: 0.3,
            net: 3.0,
        }
    }
}

impl RateConfig {
    /// In `EventKind::ALL` order.
    pub fn as_array(&self) -> [f64; 5] {
        [self.call_in, self.call_out, self.sms_in, self.sms_out, self.net]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub id: String,
    /// Cell ids.
    pub venue: Vec<String>,
    pub date: NaiveDate,
    /// `HH:MM`.
    pub start: String,
    pub end: String,
    pub attendees: u64,
    #[serde(default = "default_arrival")]
    pub arrival_ramp_h: f64,
    #[serde(default = "default_departure")]
    pub departure_ramp_h: f64,
}

fn default_arrival() -> f64 {
    2.0
}

fn default_departure() -> f64 {
    1.0
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::input(msg()))
    }
}

fn check_window(name: &str, w: [f64; 2]) -> Result<()> {
    check(w[0].is_finite() && w[1].is_finite() && 0.0 <= w[0] && w[0] <= w[1] && w[1] < 24.0, || {
        format!("{name}: window {w:?} must satisfy 0 <= start <= end < 24")
    })
}

fn check_fraction(name: &str, x: f64) -> Result<()> {
    check((0.0..=1.0).contains(&x), || format!("{name} = {x} must lie in [0, 1]"))
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::input(format!("scenario: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_toml(&csvio::read_text(path)?).map_err(|e| Error::input(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check(self.market_share > 0.0 && self.market_share <= 1.0, || {
            format!("market_share = {} must lie in (0, 1]", self.market_share)
        })?;
        check(self.days > 0, || "days must be positive".into())?;
        check(self.slot_s > 0 && SECONDS_PER_DAY % self.slot_s == 0, || {
            format!("slot_s = {} must divide a day", self.slot_s)
        })?;
        check(self.sanitize_k >= 1, || "sanitize_k must be at least 1".into())?;

        let g = &self.grid;
        check(g.columns > 0 && g.rows > 0, || "grid needs at least one row and column".into())?;
        check(g.admin_columns > 0 && g.admin_rows > 0, || "admin partition needs at least one area".into())?;
        for axis in 0..2 {
            let (lo, hi) = (g.min_cell_m[axis], g.max_cell_m[axis]);
            check(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi, || {
                format!("cell size bounds {lo}..{hi} m are infeasible")
            })?;
        }

        let p = &self.population;
        check(p.total > 0, || "population total must be positive".into())?;
        check(p.log_sigma >= 0.0 && p.log_sigma.is_finite(), || "population log_sigma must be >= 0".into())?;
        check(p.centre_gradient.is_finite(), || "centre_gradient must be finite".into())?;

        let l = &self.landuse;
        for (name, x) in [("office", l.office), ("touristic", l.touristic), ("university", l.university), ("shopping", l.shopping)] {
            check_fraction(name, x)?;
        }
        check(l.office + l.touristic + l.university + l.shopping <= 1.0, || "land-use shares exceed 1".into())?;
        for (lu, r) in &l.visitors {
            check(*r >= 0.0 && r.is_finite(), || format!("visitor ratio for {lu} must be >= 0"))?;
        }

        let b = &self.behaviour;
        check_fraction("employed", b.employed)?;
        check_fraction("outing_workday", b.outing_workday)?;
        check_fraction("outing_day_off", b.outing_day_off)?;
        check_window("commute_out_h", b.commute_out_h)?;
        check_window("commute_back_h", b.commute_back_h)?;
        check_window("outing_start_h", b.outing_start_h)?;
        check_window("outing_end_h", b.outing_end_h)?;
        check(b.commute_out_h[1] <= b.commute_back_h[0], || "commute return window starts before departures end".into())?;
        check(b.outing_start_h[1] <= b.outing_end_h[0], || "outing end window starts before outings start".into())?;
        for (name, x) in [
            ("day_off_rate_multiplier", b.day_off_rate_multiplier),
            ("rate_noise_log_sigma", b.rate_noise_log_sigma),
            ("attendee_data_multiplier", b.attendee_data_multiplier),
        ] {
            check(x >= 0.0 && x.is_finite(), || format!("{name} = {x} must be >= 0"))?;
        }

        for (i, r) in self.rates.as_array().into_iter().enumerate() {
            check(r >= 0.0 && r.is_finite(), || format!("rate #{i} = {r} must be >= 0"))?;
        }
        for (lu, prof) in &self.profiles {
            check(prof.len() == 24, || format!("profile for {lu} needs 24 values, got {}", prof.len()))?;
            check(prof.iter().all(|v| *v >= 0.0 && v.is_finite()), || format!("profile for {lu} has a negative value"))?;
        }
        for e in &self.events {
            check(e.arrival_ramp_h >= 0.0 && e.departure_ramp_h >= 0.0, || format!("event {}: negative ramp", e.id))?;
        }
        Ok(())
    }

    pub fn profiles(&self) -> [[f64; 24]; 5] {
        let mut out = DEFAULT_PROFILES;
        for (lu, prof) in &self.profiles {
            out[lu.index()].copy_from_slice(prof);
        }
        out
    }

    /// Weekends and configured holidays.
    pub fn is_day_off(&self, date: NaiveDate) -> bool {
        use chrono::{Datelike, Weekday};
        matches!(date.weekday(), Weekday::Sat | Weekday::Sun) || self.holidays.contains(&date)
    }
}
