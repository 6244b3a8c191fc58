//! Synthetic city with known ground truth.
//!
//! A scenario fixes a grid, a census, land uses and a subscriber base;
//! simulation produces the network events those subscribers would emit
//! along with the simulator's own occupancy records.

mod city;
mod config;
mod simulate;

pub use city::{apportion, generate_city, InjectedEvent, Subscriber, SyntheticScenario};
pub use config::{
    BehaviourConfig, EventConfig, GridConfig, LandUseConfig, PopulationConfig, RateConfig, ScenarioConfig,
    DEFAULT_PROFILES,
};
pub use simulate::{
    inject_event, select_attendees, simulate, simulate_aggregates, simulate_events, AttendanceTruth, DayRecord,
    OccupancyRecord, SimulatedData,
};

use crate::error::{Error, Result};
use crate::metadata::PresenceSeries;

/// Operator suppression: entries with fewer than `k` devices become missing.
pub fn sanitize(presence: &PresenceSeries, k: u32) -> Result<PresenceSeries> {
    if k == 0 {
        return Err(Error::input("sanitization threshold must be at least 1"));
    }
    let missing = presence
        .counts()
        .iter()
        .zip(presence.missing_mask())
        .map(|(&c, &m)| m || c < k)
        .collect();
    presence.clone().with_missing(missing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::Venue;
    use crate::metadata::{infer_presence, SlotAxis, SlotSeries};
    use proptest::prelude::*;

    fn tiny() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.grid.columns = 5;
        cfg.grid.rows = 4;
        cfg.grid.admin_columns = 3;
        cfg.grid.admin_rows = 2;
        cfg.population.total = 3_000;
        cfg.days = 3;
        cfg
    }

    #[test]
    fn zero_rates_give_an_empty_stream() {
        let mut cfg = tiny();
        cfg.rates = RateConfig {
            call_in: 0.0,
            call_out: 0.0,
            sms_in: 0.0,
            sms_out: 0.0,
            net: 0.0,
        };
        let s = generate_city(&cfg, 1).unwrap();
        let (events, rec) = simulate_events(&s).unwrap();
        assert!(events.is_empty());
        assert!(rec.registered.missing_mask().iter().all(|m| *m));
    }

    #[test]
    fn constant_rate_count_matches_expectation() {
        let mut cfg = tiny();
        cfg.warmup_days = 0;
        cfg.behaviour.rate_noise_log_sigma = 0.0;
        cfg.profiles = crate::landuse::LandUse::ALL.into_iter().map(|l| (l, vec![1.0; 24])).collect();
        let s = generate_city(&cfg, 4).unwrap();
        let (events, _) = simulate_events(&s).unwrap();
        let r: f64 = cfg.rates.as_array().iter().sum();
        let expected = r * s.users.len() as f64 * 24.0 * cfg.days as f64;
        let sd = expected.sqrt();
        assert!(
            (events.len() as f64 - expected).abs() < 3.0 * sd,
            "{} events, expected {expected} ± {sd}",
            events.len()
        );
    }

    #[test]
    fn inferred_presence_equals_simulator_record() {
        let s = generate_city(&tiny(), 2).unwrap();
        let (events, rec) = simulate_events(&s).unwrap();
        let inferred = infer_presence(&events, &s.grid, s.axis()).unwrap();
        assert_eq!(inferred.counts(), rec.registered.counts());
        assert_eq!(inferred.missing_mask(), rec.registered.missing_mask());
        let streamed = simulate_aggregates(&s, |_| Ok(())).unwrap();
        assert_eq!(streamed.presence, inferred);
        assert_eq!(streamed.record.physical, rec.physical);
    }

    #[test]
    fn stream_is_sorted_and_deterministic() {
        let s = generate_city(&tiny(), 3).unwrap();
        let (a, _) = simulate_events(&s).unwrap();
        let (b, _) = simulate_events(&s).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].order_key() <= w[1].order_key()));
        let other = generate_city(&tiny(), 4).unwrap();
        assert_ne!(simulate_events(&other).unwrap().0, a);
    }

    #[test]
    fn overnight_presence_is_proportional_to_census() {
        let mut cfg = tiny();
        cfg.behaviour.employed = 0.0;
        cfg.behaviour.outing_workday = 0.0;
        cfg.behaviour.outing_day_off = 0.0;
        cfg.behaviour.rate_noise_log_sigma = 0.0;
        cfg.landuse.visitors.clear();
        let s = generate_city(&cfg, 5).unwrap();
        let (_, rec) = simulate_events(&s).unwrap();
        let pop = s.population();
        let slot = 4 * 4;
        for (c, p) in pop.iter().enumerate() {
            let n = rec.registered.count(c, slot) as f64;
            assert!((n - cfg.market_share * p).abs() <= 1.0, "cell {c}: {n} vs {}", cfg.market_share * p);
        }
    }

    #[test]
    fn physical_occupancy_conserves_devices() {
        let s = generate_city(&tiny(), 6).unwrap();
        let (_, rec) = simulate_events(&s).unwrap();
        let n = s.grid.len();
        for slot in 0..rec.axis.len() {
            let total: u32 = rec.physical[slot * n..(slot + 1) * n].iter().sum();
            assert_eq!(total as usize, s.users.len());
        }
    }

    fn with_event(attendees: u64) -> (SyntheticScenario, InjectedEvent) {
        let mut cfg = tiny();
        cfg.population.total = 60_000;
        let s = generate_city(&cfg, 7).unwrap();
        let venue = s.landuse.iter().position(|l| *l == crate::landuse::LandUse::Touristic).unwrap();
        let day0 = crate::metadata::day_start(cfg.start_date + chrono::Days::new(1));
        let e = InjectedEvent {
            id: "match".into(),
            venue: vec![venue],
            attendees,
            start_s: day0 + 20 * 3600 + 45 * 60,
            end_s: day0 + 22 * 3600 + 45 * 60,
            arrival_ramp_s: 7200,
            departure_ramp_s: 3600,
        };
        (s, e)
    }

    #[test]
    fn no_attendees_leave_the_stream_unchanged() {
        let (s, e) = with_event(0);
        let (events, _) = simulate_events(&s).unwrap();
        let (out, truth) = inject_event(&events, &s, &e).unwrap();
        assert_eq!(out, events);
        assert_eq!(truth.peak(), 0);
    }

    #[test]
    fn forty_thousand_attendees_bring_fourteen_thousand_devices() {
        let (s, e) = with_event(40_000);
        let (events, _) = simulate_events(&s).unwrap();
        let (out, truth) = inject_event(&events, &s, &e).unwrap();
        assert_eq!(truth.devices, 14_000);
        assert_eq!(truth.peak(), 14_000);

        let venue = e.venue[0];
        let slot = s.axis().position(e.end_s - 900).unwrap();
        let before = infer_presence(&events, &s.grid, s.axis()).unwrap().count(venue, slot) as f64;
        let after = infer_presence(&out, &s.grid, s.axis()).unwrap().count(venue, slot) as f64;
        let extra = after - before;
        assert!((extra - 14_000.0).abs() < 0.03 * 14_000.0, "extra registered devices {extra}");
    }

    #[test]
    fn injection_matches_simulating_the_event() {
        let (mut s, e) = with_event(20_000);
        let (events, _) = simulate_events(&s).unwrap();
        let (injected, truth) = inject_event(&events, &s, &e).unwrap();
        s.events = vec![e];
        let (direct, rec) = simulate_events(&s).unwrap();
        assert_eq!(injected, direct);
        assert_eq!(rec.attendance, vec![truth]);
        assert_eq!(s.events[0].spec().venue, Venue::Cells(s.events[0].venue.clone()));
    }

    #[test]
    fn injection_checks_the_venue() {
        let (s, mut e) = with_event(10);
        e.venue = vec![s.grid.len()];
        assert!(inject_event(&[], &s, &e).is_err());
    }

    fn series(counts: Vec<u32>) -> PresenceSeries {
        let n = counts.len() / 2;
        let missing = vec![false; counts.len()];
        PresenceSeries::new(SlotAxis::contiguous(0, 900, 2), vec![1.0; n], counts, missing).unwrap()
    }

    #[test]
    fn sanitize_thresholds() {
        let p = series(vec![0, 1, 2, 3, 4, 5]);
        let k1 = sanitize(&p, 1).unwrap();
        assert_eq!(k1.missing_mask(), &[true, false, false, false, false, false]);
        assert_eq!(k1.counts(), p.counts());
        let all = sanitize(&p, 6).unwrap();
        assert!(all.missing_mask().iter().all(|m| *m));
        assert!(sanitize(&p, 0).is_err());
        assert_eq!(sanitize(&p, 3).unwrap().axis(), p.axis());
    }

    proptest! {
        #[test]
        fn sanitize_is_monotone_in_k(counts in proptest::collection::vec(0u32..20, 2..40), k in 1u32..20, extra in 0u32..10) {
            let counts = if counts.len() % 2 == 1 { counts[1..].to_vec() } else { counts };
            let p = series(counts);
            let lo = sanitize(&p, k).unwrap();
            let hi = sanitize(&p, k + extra).unwrap();
            for (a, b) in lo.missing_mask().iter().zip(hi.missing_mask()) {
                prop_assert!(!a || *b);
            }
        }
    }
}
