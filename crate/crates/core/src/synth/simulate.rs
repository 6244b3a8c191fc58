//! Event streams, occupancy records and event injection.
//!
//! Each (device, day) draws from its own ChaCha stream, so a device-day can
//! be regenerated in isolation and streams do not depend on thread count.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{Days, NaiveDate};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::city::{InjectedEvent, SyntheticScenario};
use crate::error::{Error, Result};
use crate::landuse::LandUse;
use crate::metadata::{
    day_of, day_start, DeviceId, EventKind, NetworkEvent, PresenceSeries, PresenceTracker, SlotAxis, VolumeCounter,
    VolumeSeries, SECONDS_PER_DAY,
};

const CHUNK: usize = 2048;

/// One simulated day.
#[derive(Debug, Clone)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub warmup: bool,
    /// Sorted by (time, device, kind).
    pub events: Vec<NetworkEvent>,
    /// Devices per cell by last event before each slot end, slot-major.
    pub registered: Vec<u32>,
    /// Whether any device had an event before each slot end.
    pub any_registered: Vec<bool>,
    /// Devices physically in each cell one second before each slot end.
    pub physical: Vec<u32>,
}

/// Oracle record of an injected crowd.
#[derive(Debug, Clone, PartialEq)]
pub struct AttendanceTruth {
    pub event_id: String,
    /// People, subscribers or not.
    pub attendees: u64,
    /// Subscriber devices sent to the venue.
    pub devices: usize,
    pub slot_starts: Vec<i64>,
    /// Attendee devices inside the venue one second before each slot end.
    pub at_venue: Vec<u32>,
}

impl AttendanceTruth {
    pub fn peak(&self) -> u32 {
        self.at_venue.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Move {
    time: i64,
    cell: usize,
    attending: bool,
}

struct UserDay {
    events: Vec<NetworkEvent>,
    moves: Vec<Move>,
}

struct DayContext {
    day0: i64,
    epoch_day: u64,
    rate_scale: f64,
    outing_chance: f64,
    off: bool,
    leisure: Vec<usize>,
}

impl DayContext {
    fn new(s: &SyntheticScenario, date: NaiveDate) -> Self {
        let cfg = &s.config;
        let off = cfg.is_day_off(date);
        let next_off = date.checked_add_days(Days::new(1)).is_some_and(|d| cfg.is_day_off(d));
        let leisure = (0..s.grid.len())
            .filter(|&c| matches!(s.landuse[c], LandUse::Touristic | LandUse::Shopping))
            .collect();
        let day0 = day_start(date);
        DayContext {
            day0,
            epoch_day: (day0 / SECONDS_PER_DAY) as u64,
            rate_scale: if off { cfg.behaviour.day_off_rate_multiplier } else { 1.0 },
            outing_chance: if next_off { cfg.behaviour.outing_day_off } else { cfg.behaviour.outing_workday },
            off,
            leisure,
        }
    }
}

fn clock(rng: &mut ChaCha8Rng, day0: i64, window: [f64; 2]) -> i64 {
    let h = if window[0] < window[1] { rng.random_range(window[0]..=window[1]) } else { window[0] };
    day0 + (h * 3600.0).round() as i64
}

fn ramp(rng: &mut ChaCha8Rng, len: i64) -> i64 {
    if len > 0 {
        rng.random_range(0..=len)
    } else {
        0
    }
}

fn schedule(s: &SyntheticScenario, ctx: &DayContext, user: usize, attend: Option<&InjectedEvent>, rng: &mut ChaCha8Rng) -> Vec<Move> {
    let u = &s.users[user];
    let b = &s.config.behaviour;
    let at = |time, cell| Move {
        time,
        cell,
        attending: false,
    };
    let mut moves = vec![at(ctx.day0, u.home)];
    if !u.visitor {
        if let (Some(work), false) = (u.work, ctx.off) {
            moves.push(at(clock(rng, ctx.day0, b.commute_out_h), work));
            moves.push(at(clock(rng, ctx.day0, b.commute_back_h), u.home));
        }
        if attend.is_none() && !ctx.leisure.is_empty() && rng.random::<f64>() < ctx.outing_chance {
            let cell = ctx.leisure[rng.random_range(0..ctx.leisure.len())];
            moves.push(at(clock(rng, ctx.day0, b.outing_start_h), cell));
            moves.push(at(clock(rng, ctx.day0, b.outing_end_h), u.home));
        }
    }
    moves.sort_by_key(|m| m.time);
    if let Some(e) = attend {
        let arrive = e.start_s - ramp(rng, e.arrival_ramp_s);
        let leave = e.end_s + ramp(rng, e.departure_ramp_s);
        let surfaces: Vec<f64> = e.venue.iter().map(|&c| s.grid.cells()[c].surface_km2).collect();
        let total: f64 = surfaces.iter().sum();
        let mut x = rng.random::<f64>() * total;
        let mut venue = *e.venue.last().expect("venue has cells");
        for (&c, a) in e.venue.iter().zip(&surfaces) {
            if x < *a {
                venue = c;
                break;
            }
            x -= a;
        }
        moves.retain(|m| m.time < arrive || m.time == ctx.day0);
        moves.push(Move {
            time: arrive,
            cell: venue,
            attending: true,
        });
        moves.push(at(leave, u.home));
    }
    moves
}

fn user_day(s: &SyntheticScenario, ctx: &DayContext, user: usize, attend: Option<&InjectedEvent>) -> UserDay {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(((user as u64) << 24) | ctx.epoch_day);
    let moves = schedule(s, ctx, user, attend, &mut rng);

    let base = s.config.rates.as_array();
    let scale = ctx.rate_scale * s.users[user].activity;
    let data_boost = s.config.behaviour.attendee_data_multiplier;
    let day_end = ctx.day0 + SECONDS_PER_DAY;
    let mut events = Vec::new();
    for (k, m) in moves.iter().enumerate() {
        let t1 = moves.get(k + 1).map_or(day_end, |n| n.time);
        let profile = &s.profiles[s.landuse[m.cell].index()];
        let mut a = m.time;
        while a < t1 {
            let hour = (a - ctx.day0) / 3600;
            let b = t1.min(ctx.day0 + (hour + 1) * 3600);
            let mut rates = base.map(|r| r * profile[hour as usize] * scale);
            if m.attending {
                rates[4] *= data_boost;
            }
            let total: f64 = rates.iter().sum();
            let expected = total * (b - a) as f64 / 3600.0;
            if expected > 0.0 {
                let n = Poisson::new(expected).expect("positive mean").sample(&mut rng) as u64;
                for _ in 0..n {
                    let time = a + rng.random_range(0..b - a);
                    let mut x = rng.random::<f64>() * total;
                    let mut kind = EventKind::Internet;
                    for (r, kd) in rates.iter().zip(EventKind::ALL) {
                        if x < *r {
                            kind = kd;
                            break;
                        }
                        x -= r;
                    }
                    events.push(NetworkEvent {
                        device: DeviceId(user as u64),
                        time,
                        cell: m.cell,
                        kind,
                    });
                }
            }
            a = b;
        }
    }
    events.sort_unstable_by_key(|e| (e.time, e.kind));
    UserDay { events, moves }
}

/// Position and attendance one second before each slot end of the day.
fn positions(moves: &[Move], day0: i64, slot_s: i64, slots: usize) -> impl Iterator<Item = Move> + '_ {
    let mut k = 0;
    (0..slots).map(move |s| {
        let t = day0 + (s as i64 + 1) * slot_s - 1;
        while k + 1 < moves.len() && moves[k + 1].time <= t {
            k += 1;
        }
        moves[k]
    })
}

fn check_event(s: &SyntheticScenario, e: &InjectedEvent) -> Result<()> {
    if e.venue.is_empty() || e.venue.iter().any(|&c| c >= s.grid.len()) {
        return Err(Error::input(format!("event {}: venue cells must exist", e.id)));
    }
    let day0 = day_start(e.date());
    if e.end_s <= e.start_s
        || e.arrival_ramp_s < 0
        || e.departure_ramp_s < 0
        || e.start_s - e.arrival_ramp_s < day0
        || e.end_s + e.departure_ramp_s >= day0 + SECONDS_PER_DAY
    {
        return Err(Error::input(format!("event {}: ramps and timespan must fit inside its day", e.id)));
    }
    Ok(())
}

fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Resident devices sent to an event: `round(attendees * M)` of them,
/// drawn uniformly from a stream keyed by the event id.
pub fn select_attendees(s: &SyntheticScenario, event: &InjectedEvent) -> Result<Vec<usize>> {
    check_event(s, event)?;
    let want = (event.attendees as f64 * s.config.market_share).round() as usize;
    let residents = s.residents();
    if want > residents {
        return Err(Error::input(format!(
            "event {}: needs {want} subscriber attendees but the city has {residents}",
            event.id
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    rng.set_stream(fnv1a(&event.id) | (1 << 63));
    let mut picked = index::sample(&mut rng, residents, want).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Default)]
struct Partial {
    /// Per slot of the day.
    events: Vec<Vec<NetworkEvent>>,
    registered: Vec<u32>,
    any_registered: Vec<bool>,
    physical: Vec<u32>,
    at_venue: Vec<Vec<u32>>,
}

/// Runs the whole period, warm-up first, handing each day to `sink`.
pub fn simulate<F>(s: &SyntheticScenario, mut sink: F) -> Result<Vec<AttendanceTruth>>
where
    F: FnMut(DayRecord) -> Result<()>,
{
    let cfg = &s.config;
    let n = s.grid.len();
    let slot_s = cfg.slot_s;
    let spd = (SECONDS_PER_DAY / slot_s) as usize;

    let mut truths = Vec::with_capacity(s.events.len());
    let mut by_day: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
    let mut attending: HashMap<(NaiveDate, usize), usize> = HashMap::new();
    let mut order: Vec<usize> = (0..s.events.len()).collect();
    order.sort_by_key(|&i| (s.events[i].start_s, i));
    let mut picks = vec![Vec::new(); s.events.len()];
    for (i, e) in s.events.iter().enumerate() {
        picks[i] = select_attendees(s, e)?;
        let day = day_start(e.date());
        truths.push(AttendanceTruth {
            event_id: e.id.clone(),
            attendees: e.attendees,
            devices: picks[i].len(),
            slot_starts: (0..spd).map(|k| day + k as i64 * slot_s).collect(),
            at_venue: vec![0; spd],
        });
    }
    for &i in &order {
        let date = s.events[i].date();
        by_day.entry(date).or_default().push(i);
        for &u in &picks[i] {
            attending.entry((date, u)).or_insert(i);
        }
    }

    let first = cfg.start_date - Days::new(cfg.warmup_days as u64);
    let mut registered_at: Vec<Option<usize>> = vec![None; s.users.len()];
    for d in 0..cfg.warmup_days + cfg.days {
        let date = first + Days::new(d as u64);
        let ctx = DayContext::new(s, date);
        let todays: &[usize] = by_day.get(&date).map_or(&[], Vec::as_slice);
        let partials: Vec<Partial> = registered_at
            .par_chunks_mut(CHUNK)
            .enumerate()
            .map(|(ci, regs)| {
                let mut p = Partial {
                    events: vec![Vec::new(); spd],
                    registered: vec![0; spd * n],
                    any_registered: vec![false; spd],
                    physical: vec![0; spd * n],
                    at_venue: vec![vec![0; spd]; todays.len()],
                };
                for (k, reg) in regs.iter_mut().enumerate() {
                    let u = ci * CHUNK + k;
                    let ev = attending.get(&(date, u)).copied();
                    let day = user_day(s, &ctx, u, ev.map(|i| &s.events[i]));
                    let mut next = 0;
                    for (slot, pos) in positions(&day.moves, ctx.day0, slot_s, spd).enumerate() {
                        let end = ctx.day0 + (slot as i64 + 1) * slot_s;
                        while next < day.events.len() && day.events[next].time < end {
                            *reg = Some(day.events[next].cell);
                            next += 1;
                        }
                        if let Some(c) = *reg {
                            p.registered[slot * n + c] += 1;
                            p.any_registered[slot] = true;
                        }
                        p.physical[slot * n + pos.cell] += 1;
                        if pos.attending {
                            let t = todays.iter().position(|&i| Some(i) == ev).expect("event of the day");
                            p.at_venue[t][slot] += 1;
                        }
                    }
                    for e in day.events {
                        p.events[((e.time - ctx.day0) / slot_s) as usize].push(e);
                    }
                }
                p
            })
            .collect();

        let mut partials = partials;
        let mut rec = DayRecord {
            date,
            warmup: d < cfg.warmup_days,
            events: order_day(&mut partials, ctx.day0, slot_s),
            registered: vec![0; spd * n],
            any_registered: vec![false; spd],
            physical: vec![0; spd * n],
        };
        for p in partials {
            for (a, b) in rec.registered.iter_mut().zip(&p.registered) {
                *a += b;
            }
            for (a, b) in rec.physical.iter_mut().zip(&p.physical) {
                *a += b;
            }
            for (a, b) in rec.any_registered.iter_mut().zip(&p.any_registered) {
                *a |= b;
            }
            for (t, counts) in p.at_venue.iter().enumerate() {
                for (a, b) in truths[todays[t]].at_venue.iter_mut().zip(counts) {
                    *a += b;
                }
            }
        }
        sink(rec)?;
    }
    Ok(truths)
}

/// Merges per-chunk slot buckets into one (time, device, kind) ordered day.
/// Chunks hold ascending devices and each device's events are in (time,
/// kind) order, so a stable counting sort on the second within each slot
/// finishes the job.
fn order_day(partials: &mut [Partial], day0: i64, slot_s: i64) -> Vec<NetworkEvent> {
    let total = partials.iter().map(|p| p.events.iter().map(Vec::len).sum::<usize>()).sum();
    let mut out = Vec::with_capacity(total);
    let mut starts = vec![0usize; slot_s as usize + 1];
    let spd = partials.first().map_or(0, |p| p.events.len());
    for slot in 0..spd {
        let base = day0 + slot as i64 * slot_s;
        starts.iter_mut().for_each(|s| *s = 0);
        for p in partials.iter() {
            for e in &p.events[slot] {
                starts[(e.time - base) as usize + 1] += 1;
            }
        }
        for i in 1..starts.len() {
            starts[i] += starts[i - 1];
        }
        let offset = out.len();
        let len = starts[slot_s as usize];
        out.resize(
            offset + len,
            NetworkEvent {
                device: DeviceId(0),
                time: 0,
                cell: 0,
                kind: EventKind::CallIn,
            },
        );
        for p in partials.iter_mut() {
            for e in std::mem::take(&mut p.events[slot]) {
                let at = &mut starts[(e.time - base) as usize];
                out[offset + *at] = e;
                *at += 1;
            }
        }
    }
    out
}

/// Adds one crowd to a stream simulated from `s` without it: the attendees'
/// events on the event day are regenerated with the venue visit.
pub fn inject_event(stream: &[NetworkEvent], s: &SyntheticScenario, event: &InjectedEvent) -> Result<(Vec<NetworkEvent>, AttendanceTruth)> {
    let picked = select_attendees(s, event)?;
    let date = event.date();
    let ctx = DayContext::new(s, date);
    let slot_s = s.config.slot_s;
    let spd = (SECONDS_PER_DAY / slot_s) as usize;
    let ids: HashSet<u64> = picked.iter().map(|&u| u as u64).collect();
    let mut out: Vec<NetworkEvent> = stream
        .iter()
        .filter(|e| !(ids.contains(&e.device.0) && day_of(e.time) == date))
        .copied()
        .collect();
    let mut at_venue = vec![0; spd];
    for &u in &picked {
        let day = user_day(s, &ctx, u, Some(event));
        for (slot, pos) in positions(&day.moves, ctx.day0, slot_s, spd).enumerate() {
            at_venue[slot] += pos.attending as u32;
        }
        out.extend(day.events);
    }
    out.par_sort_unstable_by_key(|e| e.order_key());
    Ok((
        out,
        AttendanceTruth {
            event_id: event.id.clone(),
            attendees: event.attendees,
            devices: picked.len(),
            slot_starts: (0..spd).map(|k| ctx.day0 + k as i64 * slot_s).collect(),
            at_venue,
        },
    ))
}

/// Simulator-side records over the observed period.
#[derive(Debug, Clone)]
pub struct OccupancyRecord {
    pub axis: SlotAxis,
    /// Last-event bookkeeping of the simulator, unsanitized.
    pub registered: PresenceSeries,
    /// Physical device counts, slot-major.
    pub physical: Vec<u32>,
    pub attendance: Vec<AttendanceTruth>,
}

impl OccupancyRecord {
    /// Ground-truth dynamic density (people per km²) of one slot.
    pub fn truth_density(&self, s: &SyntheticScenario, slot: usize) -> Vec<f64> {
        let n = s.grid.len();
        s.density_of(&self.physical[slot * n..(slot + 1) * n])
    }
}

struct Recorder {
    counts: Vec<u32>,
    missing: Vec<bool>,
    physical: Vec<u32>,
    n: usize,
}

impl Recorder {
    fn new(n: usize) -> Self {
        Recorder {
            counts: Vec::new(),
            missing: Vec::new(),
            physical: Vec::new(),
            n,
        }
    }

    fn push(&mut self, day: &DayRecord) {
        if day.warmup {
            return;
        }
        self.counts.extend_from_slice(&day.registered);
        self.physical.extend_from_slice(&day.physical);
        for &any in &day.any_registered {
            self.missing.extend(std::iter::repeat_n(!any, self.n));
        }
    }

    fn finish(self, s: &SyntheticScenario, attendance: Vec<AttendanceTruth>) -> Result<OccupancyRecord> {
        let axis = s.axis();
        Ok(OccupancyRecord {
            registered: PresenceSeries::new(axis.clone(), s.grid.surfaces(), self.counts, self.missing)?,
            axis,
            physical: self.physical,
            attendance,
        })
    }
}

/// Full stream (warm-up included) with the simulator's records.
pub fn simulate_events(s: &SyntheticScenario) -> Result<(Vec<NetworkEvent>, OccupancyRecord)> {
    let mut events = Vec::new();
    let mut rec = Recorder::new(s.grid.len());
    let truth = simulate(s, |day| {
        rec.push(&day);
        events.extend(day.events);
        Ok(())
    })?;
    Ok((events, rec.finish(s, truth)?))
}

/// Operator-side aggregates computed on the fly from the stream.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    /// Presence inferred from the stream, before sanitization.
    pub presence: PresenceSeries,
    pub volumes: VolumeSeries,
    pub record: OccupancyRecord,
}

/// Streams the simulation through presence inference and volume counting
/// without keeping events; `on_day` sees every day's events.
pub fn simulate_aggregates<F>(s: &SyntheticScenario, mut on_day: F) -> Result<SimulatedData>
where
    F: FnMut(&DayRecord) -> Result<()>,
{
    let axis = s.axis();
    let mut tracker = PresenceTracker::new(&s.grid, axis.clone())?;
    let mut counter = VolumeCounter::new(&s.grid, axis)?;
    let mut rec = Recorder::new(s.grid.len());
    let truth = simulate(s, |day| {
        on_day(&day)?;
        rec.push(&day);
        for e in &day.events {
            tracker.push(e)?;
            if !day.warmup {
                counter.push(e)?;
            }
        }
        Ok(())
    })?;
    Ok(SimulatedData {
        presence: tracker.finish()?,
        volumes: counter.finish(),
        record: rec.finish(s, truth)?,
    })
}
