//! Crowd size at planned events, the land-use rescaling baseline, and the
//! comparison between the two.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};
use geo::Polygon;

use super::{ActivityLevel, MultivariateParams};
use crate::error::{Error, Result};
use crate::grid::GridTessellation;
use crate::landuse::LandUse;
use crate::regress::{ransac_powerlaw_fit, ransac_powerlaw_fit_masked, RansacConfig};
use crate::metadata::{day_of, PresenceSeries, SlotSeries, SECONDS_PER_DAY};
use crate::stats::{mann_whitney_u, mean, median, quantile, MannWhitney};

#[derive(Debug, Clone, PartialEq)]
pub enum Venue {
    Polygon(Polygon<f64>),
    /// Cells known to cover the venue.
    Cells(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub id: String,
    pub venue: Venue,
    /// Slots starting in `[start_s, end_s)` make up the event timespan.
    pub start_s: i64,
    pub end_s: i64,
}

impl EventSpec {
    pub fn day(&self) -> NaiveDate {
        day_of(self.start_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttendanceConfig {
    pub min_baseline_days: usize,
    /// Use the literal linear (not exponentiated) coefficient.
    pub paper_eq19: bool,
}

impl Default for AttendanceConfig {
    fn default() -> Self {
        AttendanceConfig {
            min_baseline_days: 3,
            paper_eq19: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttendanceEstimate {
    pub event_id: String,
    pub t_peak: i64,
    pub sigma_norm: f64,
    pub sigma_match: f64,
    pub lambda_tilde: f64,
    pub gamma_hat: f64,
    pub cells: Vec<usize>,
    pub baseline_days: Vec<NaiveDate>,
    /// Presence at the peak did not exceed the baseline.
    pub no_crowd: bool,
    /// Some cells had no activity level at the peak and used the city mean.
    pub lambda_fallback: bool,
}

/// Venue cells plus every cell sharing an edge with one of them, sorted.
pub fn event_cells(grid: &GridTessellation, venue: &Venue) -> Result<Vec<usize>> {
    let seed = match venue {
        Venue::Polygon(p) => grid.cells_intersecting(p),
        Venue::Cells(c) => {
            if let Some(&bad) = c.iter().find(|&&i| i >= grid.len()) {
                return Err(Error::input(format!("venue cell index {bad} out of range")));
            }
            c.clone()
        }
    };
    if seed.is_empty() {
        return Err(Error::input("venue does not intersect the grid"));
    }
    let mut set: BTreeSet<usize> = seed.iter().copied().collect();
    for &c in &seed {
        set.extend(grid.neighbours(c));
    }
    Ok(set.into_iter().collect())
}

/// Peak slot and per-cell baseline medians shared by both estimators.
struct EventWindow {
    cells: Vec<usize>,
    peak_slot: usize,
    /// Baseline median presence density of every grid cell at the peak time.
    baseline: Vec<f64>,
    baseline_days: Vec<NaiveDate>,
}

fn event_window(
    event: &EventSpec,
    other_event_days: &[NaiveDate],
    presence: &PresenceSeries,
    grid: &GridTessellation,
    config: &AttendanceConfig,
) -> Result<EventWindow> {
    if event.end_s <= event.start_s {
        return Err(Error::input(format!("event {} has an empty timespan", event.id)));
    }
    if presence.n_cells() != grid.len() {
        return Err(Error::input("presence and grid cover different cells"));
    }
    let cells = event_cells(grid, &event.venue)?;
    let starts = presence.axis().starts();
    let span: Vec<usize> = (0..starts.len())
        .filter(|&s| starts[s] >= event.start_s && starts[s] < event.end_s)
        .collect();
    if span.is_empty() {
        return Err(Error::insufficient(format!("no presence slots during event {}", event.id)));
    }
    let mut peak_slot = span[0];
    let mut peak = f64::NEG_INFINITY;
    for &s in &span {
        let total: f64 = cells.iter().map(|&c| presence.density(c, s).unwrap_or(0.0)).sum();
        if total > peak {
            peak = total;
            peak_slot = s;
        }
    }
    let t_peak = starts[peak_slot];
    let event_day = event.day();
    let mut baseline_slots = Vec::new();
    let mut baseline_days = Vec::new();
    for (s, &start) in starts.iter().enumerate() {
        let d = day_of(start);
        let same_time = (start - t_peak).rem_euclid(SECONDS_PER_DAY) == 0;
        if same_time
            && d != event_day
            && d.weekday() == event_day.weekday()
            && !other_event_days.contains(&d)
        {
            baseline_slots.push(s);
            baseline_days.push(d);
        }
    }
    if baseline_slots.len() < config.min_baseline_days {
        return Err(Error::insufficient(format!(
            "event {}: {} baseline days on the same weekday and time, need {}",
            event.id,
            baseline_slots.len(),
            config.min_baseline_days
        )));
    }
    let baseline = (0..grid.len())
        .map(|c| {
            let v: Vec<f64> = baseline_slots.iter().map(|&s| presence.density(c, s).unwrap_or(0.0)).collect();
            median(&v).expect("non-empty baseline")
        })
        .collect();
    Ok(EventWindow {
        cells,
        peak_slot,
        baseline,
        baseline_days,
    })
}

/// Attendance from the presence surge over the venue area at the peak slot.
/// `other_event_days` are left out of the baseline.
pub fn estimate_attendance(
    event: &EventSpec,
    other_event_days: &[NaiveDate],
    presence: &PresenceSeries,
    activity: &ActivityLevel,
    params: &MultivariateParams,
    grid: &GridTessellation,
    config: &AttendanceConfig,
) -> Result<AttendanceEstimate> {
    if activity.axis() != presence.axis() {
        return Err(Error::input("activity and presence have different slot axes"));
    }
    let w = event_window(event, other_event_days, presence, grid, config)?;
    let surfaces = presence.surfaces();
    let area: f64 = w.cells.iter().map(|&c| surfaces[c]).sum();
    let weighted = |f: &dyn Fn(usize) -> f64| w.cells.iter().map(|&c| surfaces[c] / area * f(c)).sum::<f64>();
    let sigma_norm = weighted(&|c| w.baseline[c]);
    let sigma_match = weighted(&|c| presence.density(c, w.peak_slot).unwrap_or(0.0));
    let mut lambda_fallback = false;
    let lambdas: Vec<f64> = w
        .cells
        .iter()
        .map(|&c| {
            activity.get(c, w.peak_slot).unwrap_or_else(|| {
                lambda_fallback = true;
                activity.city_mean(w.peak_slot).unwrap_or(0.0)
            })
        })
        .collect();
    let lambda_tilde = mean(&lambdas);
    let no_crowd = sigma_match <= sigma_norm;
    let gamma_hat = if no_crowd {
        0.0
    } else {
        let coef = if config.paper_eq19 {
            params.a_alpha * lambda_tilde + params.b_alpha
        } else {
            params.alpha(lambda_tilde)
        };
        coef * (sigma_match - sigma_norm).powf(params.beta(lambda_tilde)) * area
    };
    Ok(AttendanceEstimate {
        event_id: event.id.clone(),
        t_peak: presence.axis().starts()[w.peak_slot],
        sigma_norm,
        sigma_match,
        lambda_tilde,
        gamma_hat,
        cells: w.cells,
        baseline_days: w.baseline_days,
        no_crowd,
        lambda_fallback,
    })
}

/// Static power-law parameters per land use.
pub type LandUseFits = BTreeMap<LandUse, (f64, f64)>;

/// One robust fit per land use present in `landuse`. Classes that cannot be
/// fitted on their own (too few usable cells, degenerate spread) take the
/// pooled fit.
pub fn fit_landuse_powerlaws(
    sigma: &[f64],
    rho: &[f64],
    landuse: &[LandUse],
    ransac: &RansacConfig,
) -> Result<LandUseFits> {
    if landuse.len() != sigma.len() {
        return Err(Error::input("land-use labels and presence differ in length"));
    }
    let pooled = ransac_powerlaw_fit(sigma, rho, ransac)?;
    let classes: BTreeSet<LandUse> = landuse.iter().copied().collect();
    let mut fits = LandUseFits::new();
    for class in classes {
        let mask: Vec<bool> = landuse.iter().map(|l| *l == class).collect();
        let fit = match ransac_powerlaw_fit_masked(sigma, rho, Some(&mask), ransac) {
            Ok(f) => (f.alpha, f.beta),
            Err(e) if e.class() != crate::error::ErrorClass::Input => (pooled.alpha, pooled.beta),
            Err(e) => return Err(e),
        };
        fits.insert(class, fit);
    }
    Ok(fits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct XuSlot {
    pub rho_hat: Vec<f64>,
    pub r_t: f64,
}

/// Land-use power laws rescaled so the total matches the census total.
pub fn xu_estimate(
    sigma: &[f64],
    landuse: &[LandUse],
    fits: &LandUseFits,
    census: &[f64],
    surfaces: &[f64],
) -> Result<XuSlot> {
    let n = sigma.len();
    if landuse.len() != n || census.len() != n || surfaces.len() != n {
        return Err(Error::input("sigma, land use, census and surfaces differ in length"));
    }
    let raw: Vec<f64> = sigma
        .iter()
        .zip(landuse)
        .map(|(&s, l)| {
            let (a, b) = fits.get(l).ok_or_else(|| Error::input(format!("no fit for land use {l}")))?;
            if s < 0.0 {
                return Err(Error::input(format!("presence density {s} is negative")));
            }
            Ok(if s == 0.0 { 0.0 } else { a * s.powf(*b) })
        })
        .collect::<Result<_>>()?;
    let total: f64 = census.iter().zip(surfaces).map(|(r, a)| r * a).sum();
    let model: f64 = raw.iter().zip(surfaces).map(|(r, a)| r * a).sum();
    if !(model > 0.0) || !model.is_finite() {
        return Err(Error::UndefinedRescaling(format!("modelled total is {model}")));
    }
    let r_t = total / model;
    Ok(XuSlot {
        rho_hat: raw.iter().map(|r| r * r_t).collect(),
        r_t,
    })
}

/// Baseline attendance: extra people over the venue cells between the peak
/// field and the baseline-median field, both rescaled. Never negative.
#[allow(clippy::too_many_arguments)]
pub fn xu_attendance(
    event: &EventSpec,
    other_event_days: &[NaiveDate],
    presence: &PresenceSeries,
    landuse: &[LandUse],
    fits: &LandUseFits,
    census: &[f64],
    grid: &GridTessellation,
    config: &AttendanceConfig,
) -> Result<f64> {
    let w = event_window(event, other_event_days, presence, grid, config)?;
    let surfaces = presence.surfaces();
    let peak = xu_estimate(&presence.slot_densities(w.peak_slot), landuse, fits, census, surfaces)?;
    let normal = xu_estimate(&w.baseline, landuse, fits, census, surfaces)?;
    let extra: f64 = w
        .cells
        .iter()
        .map(|&c| (peak.rho_hat[c] - normal.rho_hat[c]) * surfaces[c])
        .sum();
    Ok(extra.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventErrors {
    pub truth: f64,
    pub rel_multi: f64,
    pub rel_base: f64,
    pub abs_multi: f64,
    pub abs_base: f64,
    /// Baseline |error| over multivariate |error|; 1 when both are 0.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub events: Vec<EventErrors>,
    /// 5th, 25th, 50th, 75th and 95th percentiles of |relative error|.
    pub rel_multi_pct: [f64; 5],
    pub rel_base_pct: [f64; 5],
    pub abs_multi_pct: [f64; 5],
    pub abs_base_pct: [f64; 5],
    /// Two-sided rank test on |relative error|.
    pub test: MannWhitney,
}

impl Comparison {
    pub fn median_ratio(&self) -> f64 {
        let r: Vec<f64> = self.events.iter().map(|e| e.ratio).collect();
        median(&r).expect("at least 3 events")
    }

    pub fn mean_abs_rel_multi(&self) -> f64 {
        mean(&self.events.iter().map(|e| e.rel_multi.abs()).collect::<Vec<_>>())
    }
}

const PERCENTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn percentiles(v: &[f64]) -> [f64; 5] {
    PERCENTILES.map(|q| quantile(v, q))
}

pub fn compare_models(truth: &[f64], multivariate: &[f64], baseline: &[f64]) -> Result<Comparison> {
    if truth.len() != multivariate.len() || truth.len() != baseline.len() {
        return Err(Error::input("truth and estimates differ in length"));
    }
    if truth.len() < 3 {
        return Err(Error::insufficient(format!("{} events, comparison needs 3", truth.len())));
    }
    if let Some(t) = truth.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::input(format!("ground-truth attendance {t} is not positive")));
    }
    let events: Vec<EventErrors> = truth
        .iter()
        .zip(multivariate.iter().zip(baseline))
        .map(|(&t, (&m, &b))| {
            let (am, ab) = ((m - t).abs(), (b - t).abs());
            EventErrors {
                truth: t,
                rel_multi: (m - t) / t,
                rel_base: (b - t) / t,
                abs_multi: am,
                abs_base: ab,
                ratio: if am == ab { 1.0 } else { ab / am },
            }
        })
        .collect();
    let col = |f: fn(&EventErrors) -> f64| events.iter().map(f).collect::<Vec<f64>>();
    let rm = col(|e| e.rel_multi.abs());
    let rb = col(|e| e.rel_base.abs());
    Ok(Comparison {
        rel_multi_pct: percentiles(&rm),
        rel_base_pct: percentiles(&rb),
        abs_multi_pct: percentiles(&col(|e| e.abs_multi)),
        abs_base_pct: percentiles(&col(|e| e.abs_base)),
        test: mann_whitney_u(&rm, &rb),
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::{activity_level, ActivityKind};
    use crate::grid::Cell;
    use crate::metadata::{EventKind, SlotAxis, VolumeSeries};
    use proptest::prelude::*;

    const P: MultivariateParams = MultivariateParams {
        a_alpha: 2.90,
        b_alpha: 1.07,
        a_beta: -0.30,
        b_beta: 0.98,
        kind: ActivityKind::Call,
    };

    /// 3x3 grid of 1 km cells; the venue is the centre cell 4.
    fn grid() -> GridTessellation {
        let mut cells = Vec::new();
        for r in 0..3 {
            for c in 0..3 {
                let (x, y) = (c as f64 * 1000.0, r as f64 * 1000.0);
                cells.push(Cell::rect(format!("r{r}c{c}"), (x, y), (x + 1000.0, y + 1000.0)).unwrap());
            }
        }
        GridTessellation::new(cells)
    }

    /// Four Sundays of hourly slots; `surge` devices are added to cell 4 at
    /// 21:00 on the last one. Call volume is a twentieth of the presence.
    fn fixture(surge: u32) -> (PresenceSeries, ActivityLevel, EventSpec) {
        let first = NaiveDate::from_ymd_opt(2015, 3, 1).unwrap(); // a Sunday
        let axis = SlotAxis::days(first, 22, 3600);
        let n = 9;
        let mut counts = Vec::new();
        for s in 0..axis.len() {
            for c in 0..n {
                let mut v = 100 + 10 * c as u32;
                if s == 21 * 24 + 21 && c == 4 {
                    v += surge;
                }
                counts.push(v);
            }
        }
        let p = PresenceSeries::new(axis.clone(), vec![1.0; n], counts, vec![false; axis.len() * n]).unwrap();
        let mut vol = VolumeSeries::zeros(axis, n);
        for s in 0..p.n_slots() {
            for c in 0..n {
                vol.set(c, s, EventKind::CallIn, p.count(c, s) / 20);
            }
        }
        let a = activity_level(&vol, &p, ActivityKind::Call).unwrap();
        let start = crate::metadata::day_start(first + chrono::Days::new(21)) + 20 * 3600;
        let ev = EventSpec {
            id: "derby".into(),
            venue: Venue::Cells(vec![4]),
            start_s: start,
            end_s: start + 3 * 3600,
        };
        (p, a, ev)
    }

    #[test]
    fn neighbourhood_is_venue_plus_edge_neighbours() {
        let g = grid();
        assert_eq!(event_cells(&g, &Venue::Cells(vec![0])).unwrap(), vec![0, 1, 3]);
        assert_eq!(event_cells(&g, &Venue::Cells(vec![4])).unwrap(), (0..9).filter(|c| c % 2 == 1 || *c == 4).collect::<Vec<_>>());
        let poly = crate::grid::rect_polygon((2100.0, 2100.0), (2200.0, 2200.0));
        assert_eq!(event_cells(&g, &Venue::Polygon(poly)).unwrap(), vec![5, 7, 8]);
    }

    #[test]
    fn no_surge_gives_zero() {
        let (p, a, ev) = fixture(0);
        let est = estimate_attendance(&ev, &[], &p, &a, &P, &grid(), &AttendanceConfig::default()).unwrap();
        assert_eq!(est.sigma_match, est.sigma_norm);
        assert_eq!(est.gamma_hat, 0.0);
        assert!(est.no_crowd);
    }

    #[test]
    fn surge_hand_computed() {
        let (p, a, ev) = fixture(500);
        let est = estimate_attendance(&ev, &[], &p, &a, &P, &grid(), &AttendanceConfig::default()).unwrap();
        assert_eq!(est.t_peak, ev.start_s + 3600);
        assert_eq!(est.baseline_days.len(), 3);
        // N = {1,3,4,5,7}, equal areas: baseline mean (110+130+140+150+170)/5 = 140
        assert!((est.sigma_norm - 140.0).abs() < 1e-12);
        assert!((est.sigma_match - 240.0).abs() < 1e-12);
        let counts = [110.0f64, 130.0, 640.0, 150.0, 170.0];
        let lt: f64 = counts.iter().map(|c| (c / 20.0).floor() / c).sum::<f64>() / 5.0;
        assert!((est.lambda_tilde - lt).abs() < 1e-12);
        let want = (2.90 * lt + 1.07f64).exp() * 100f64.powf(-0.30 * lt + 0.98) * 5.0;
        assert!((est.gamma_hat - want).abs() < 1e-9 * want);
        let lit = estimate_attendance(
            &ev,
            &[],
            &p,
            &a,
            &P,
            &grid(),
            &AttendanceConfig {
                paper_eq19: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((lit.gamma_hat - (2.90 * lt + 1.07) * 100f64.powf(-0.30 * lt + 0.98) * 5.0).abs() < 1e-9);
    }

    #[test]
    fn other_event_days_shrink_the_baseline() {
        let (p, a, ev) = fixture(500);
        let other = [NaiveDate::from_ymd_opt(2015, 3, 8).unwrap()];
        let err = estimate_attendance(&ev, &other, &p, &a, &P, &grid(), &AttendanceConfig::default());
        assert!(matches!(err, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn xu_two_cell_hand_computed() {
        let mut fits = LandUseFits::new();
        fits.insert(LandUse::Residential, (2.0, 1.0));
        fits.insert(LandUse::Office, (1.0, 0.5));
        // raw: 2*10 = 20 and 1*sqrt(16) = 4; areas 1 and 2 -> model total 28
        // census total 100*1 + 10*2 = 120 -> R = 120/28
        let out = xu_estimate(
            &[10.0, 16.0],
            &[LandUse::Residential, LandUse::Office],
            &fits,
            &[100.0, 10.0],
            &[1.0, 2.0],
        )
        .unwrap();
        assert!((out.r_t - 120.0 / 28.0).abs() < 1e-12);
        assert!((out.rho_hat[0] - 20.0 * 120.0 / 28.0).abs() < 1e-12);
        assert!((out.rho_hat[1] - 4.0 * 120.0 / 28.0).abs() < 1e-12);
    }

    #[test]
    fn xu_proportional_single_land_use_is_exact() {
        let census = [120.0, 40.0, 900.0, 5.0];
        let sigma: Vec<f64> = census.iter().map(|r| r * 0.35).collect();
        let mut fits = LandUseFits::new();
        fits.insert(LandUse::Residential, (1.0, 1.0));
        let out = xu_estimate(&sigma, &[LandUse::Residential; 4], &fits, &census, &[0.3, 1.0, 2.0, 0.7]).unwrap();
        for (h, r) in out.rho_hat.iter().zip(census) {
            assert!((h - r).abs() < 1e-12 * r);
        }
    }

    #[test]
    fn landuse_fits_fall_back_to_pooled() {
        // 30 residential cells on rho = 2 sigma, 12 office cells on rho = 0.5 sigma^1.1,
        // 4 shopping cells: too few for a fit of their own
        let mut sigma = Vec::new();
        let mut rho = Vec::new();
        let mut labels = Vec::new();
        for i in 0..30 {
            let s = 10.0 + 7.0 * i as f64;
            sigma.push(s);
            rho.push(2.0 * s);
            labels.push(LandUse::Residential);
        }
        for i in 0..12 {
            let s = 50.0 + 13.0 * i as f64;
            sigma.push(s);
            rho.push(0.5 * s.powf(1.1));
            labels.push(LandUse::Office);
        }
        for i in 0..4 {
            sigma.push(20.0 + i as f64);
            rho.push(40.0 + 2.0 * i as f64);
            labels.push(LandUse::Shopping);
        }
        let cfg = RansacConfig::default();
        let fits = fit_landuse_powerlaws(&sigma, &rho, &labels, &cfg).unwrap();
        let (a, b) = fits[&LandUse::Residential];
        assert!((a - 2.0).abs() < 1e-9 && (b - 1.0).abs() < 1e-9);
        let (a, b) = fits[&LandUse::Office];
        assert!((a - 0.5).abs() < 1e-9 && (b - 1.1).abs() < 1e-9);
        let pooled = ransac_powerlaw_fit(&sigma, &rho, &cfg).unwrap();
        assert_eq!(fits[&LandUse::Shopping], (pooled.alpha, pooled.beta));
        assert!(!fits.contains_key(&LandUse::University));
    }

    #[test]
    fn xu_zero_presence_is_undefined() {
        let mut fits = LandUseFits::new();
        fits.insert(LandUse::Residential, (1.0, 1.0));
        assert!(matches!(
            xu_estimate(&[0.0, 0.0], &[LandUse::Residential; 2], &fits, &[1.0, 1.0], &[1.0, 1.0]),
            Err(Error::UndefinedRescaling(_))
        ));
    }

    #[test]
    fn gamma_increases_with_surge() {
        let mut last = 0.0;
        for surge in [50, 200, 800, 3200] {
            let (p, a, ev) = fixture(surge);
            let g = estimate_attendance(&ev, &[], &p, &a, &P, &grid(), &AttendanceConfig::default()).unwrap().gamma_hat;
            assert!(g > last);
            last = g;
        }
    }

    #[test]
    fn identical_estimates_compare_evenly() {
        let truth = [30_000.0, 40_000.0, 50_000.0, 60_000.0];
        let est = [33_000.0, 38_000.0, 52_000.0, 57_000.0];
        let c = compare_models(&truth, &est, &est).unwrap();
        assert!(c.events.iter().all(|e| e.ratio == 1.0));
        assert!((c.test.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn biased_baseline_loses() {
        let truth: Vec<f64> = (0..8).map(|k| 25_000.0 + 7_000.0 * k as f64).collect();
        let multi = truth.clone();
        let base: Vec<f64> = truth.iter().map(|t| t * 0.7).collect();
        let c = compare_models(&truth, &multi, &base).unwrap();
        assert!(c.median_ratio() > 1.0);
        assert!(c.test.p_value < 0.01);
        assert!(compare_models(&truth[..2], &multi[..2], &base[..2]).is_err());
    }

    proptest! {
        #[test]
        fn xu_conserves_total(sigma in prop::collection::vec(0.0f64..5000.0, 4..40),
                              census in prop::collection::vec(0.0f64..20_000.0, 40),
                              areas in prop::collection::vec(0.05f64..4.0, 40)) {
            let n = sigma.len();
            prop_assume!(sigma.iter().any(|s| *s > 0.0));
            let landuse: Vec<LandUse> = (0..n).map(|i| LandUse::ALL[i % 5]).collect();
            let fits: LandUseFits = LandUse::ALL.iter().enumerate().map(|(k, l)| (*l, (1.0 + k as f64, 0.8 + 0.1 * k as f64))).collect();
            let out = xu_estimate(&sigma, &landuse, &fits, &census[..n], &areas[..n]).unwrap();
            let want: f64 = census[..n].iter().zip(&areas[..n]).map(|(r, a)| r * a).sum();
            let got: f64 = out.rho_hat.iter().zip(&areas[..n]).map(|(r, a)| r * a).sum();
            prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0));
        }
    }
}
