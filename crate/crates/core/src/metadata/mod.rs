//! Network events, presence inference and per-slot aggregation.
//!
//! Presence follows the last-event rule: a device is located in the cell of
//! its most recent network event (of any kind) strictly before the end of a
//! slot. Slots are half-open `[start, start + slot_s)`, so an event stamped
//! exactly at a slot end belongs to the next slot. Devices never expire.

pub mod io;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridTessellation;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DEFAULT_SLOT_S: i64 = 900;

/// Calendar date of a local timestamp (seconds).
pub fn day_of(ts: i64) -> NaiveDate {
    DateTime::from_timestamp(ts.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY, 0)
        .expect("timestamp in chrono range")
        .date_naive()
}

pub fn second_of_day(ts: i64) -> i64 {
    ts.rem_euclid(SECONDS_PER_DAY)
}

/// Midnight timestamp of a date.
pub fn day_start(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    CallIn,
    CallOut,
    SmsIn,
    SmsOut,
    Internet,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::CallIn,
        EventKind::CallOut,
        EventKind::SmsIn,
        EventKind::SmsOut,
        EventKind::Internet,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::CallIn => "call_in",
            EventKind::CallOut => "call_out",
            EventKind::SmsIn => "sms_in",
            EventKind::SmsOut => "sms_out",
            EventKind::Internet => "net",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown event kind `{s}`")))
    }
}

/// Opaque subscriber identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeviceId(pub u64);

/// One network interaction; `cell` indexes the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkEvent {
    pub device: DeviceId,
    pub time: i64,
    pub cell: usize,
    pub kind: EventKind,
}

impl NetworkEvent {
    /// Stream order: time, then device, then kind.
    pub fn order_key(&self) -> (i64, DeviceId, EventKind) {
        (self.time, self.device, self.kind)
    }
}

/// Slot start times of a series (seconds). Fresh series are contiguous;
/// filtered ones keep only a subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAxis {
    slot_s: i64,
    starts: Vec<i64>,
}

impl SlotAxis {
    pub fn contiguous(start: i64, slot_s: i64, n_slots: usize) -> Self {
        assert!(slot_s > 0, "slot duration must be positive");
        SlotAxis {
            slot_s,
            starts: (0..n_slots as i64).map(|k| start + k * slot_s).collect(),
        }
    }

    /// Whole days `[first, first + days)` of slots.
    pub fn days(first: NaiveDate, days: usize, slot_s: i64) -> Self {
        let per_day = (SECONDS_PER_DAY / slot_s) as usize;
        SlotAxis::contiguous(day_start(first), slot_s, per_day * days)
    }

    /// Day-aligned axis covering every event of a stream.
    pub fn covering(events: &[NetworkEvent], slot_s: i64) -> Option<Self> {
        let lo = events.iter().map(|e| e.time).min()?;
        let hi = events.iter().map(|e| e.time).max()?;
        let first = lo.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY;
        let last = (hi.div_euclid(SECONDS_PER_DAY) + 1) * SECONDS_PER_DAY;
        Some(SlotAxis::contiguous(first, slot_s, ((last - first) / slot_s) as usize))
    }

    pub fn from_starts(slot_s: i64, mut starts: Vec<i64>) -> Self {
        starts.sort_unstable();
        starts.dedup();
        SlotAxis { slot_s, starts }
    }

    pub fn slot_s(&self) -> i64 {
        self.slot_s
    }

    pub fn starts(&self) -> &[i64] {
        &self.starts
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn position(&self, start: i64) -> Option<usize> {
        self.starts.binary_search(&start).ok()
    }

    pub fn is_contiguous(&self) -> bool {
        self.starts.windows(2).all(|w| w[1] - w[0] == self.slot_s)
    }

    /// Distinct calendar days, in order.
    pub fn dates(&self) -> Vec<NaiveDate> {
        let mut out: Vec<NaiveDate> = Vec::new();
        for &s in &self.starts {
            let d = day_of(s);
            if out.last() != Some(&d) {
                out.push(d);
            }
        }
        out
    }

    pub(crate) fn retain(&self, keep: &[bool]) -> SlotAxis {
        SlotAxis {
            slot_s: self.slot_s,
            starts: self
                .starts
                .iter()
                .zip(keep)
                .filter(|(_, k)| **k)
                .map(|(s, _)| *s)
                .collect(),
        }
    }
}

/// Series indexed by slot that filters can restrict.
pub trait SlotSeries: Sized {
    fn axis(&self) -> &SlotAxis;
    /// Keeps the slots flagged `true`, in order.
    fn retain_slots(&self, keep: &[bool]) -> Self;
}

/// Per-cell, per-slot subscriber counts with a missing mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceSeries {
    axis: SlotAxis,
    surfaces: Vec<f64>,
    counts: Vec<u32>,
    missing: Vec<bool>,
}

impl PresenceSeries {
    /// `counts` and `missing` are slot-major: index `slot * n_cells + cell`.
    pub fn new(axis: SlotAxis, surfaces: Vec<f64>, counts: Vec<u32>, missing: Vec<bool>) -> Result<Self> {
        let n = axis.len() * surfaces.len();
        if counts.len() != n || missing.len() != n {
            return Err(Error::input(format!(
                "presence arrays have {} / {} entries, expected {n}",
                counts.len(),
                missing.len()
            )));
        }
        if let Some(s) = surfaces.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::input(format!("cell surface {s} is not positive")));
        }
        Ok(PresenceSeries {
            axis,
            surfaces,
            counts,
            missing,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.surfaces.len()
    }

    pub fn n_slots(&self) -> usize {
        self.axis.len()
    }

    pub fn surfaces(&self) -> &[f64] {
        &self.surfaces
    }

    fn idx(&self, cell: usize, slot: usize) -> usize {
        slot * self.surfaces.len() + cell
    }

    pub fn count(&self, cell: usize, slot: usize) -> u32 {
        self.counts[self.idx(cell, slot)]
    }

    pub fn is_missing(&self, cell: usize, slot: usize) -> bool {
        self.missing[self.idx(cell, slot)]
    }

    /// Count unless missing.
    pub fn observed(&self, cell: usize, slot: usize) -> Option<u32> {
        let i = self.idx(cell, slot);
        (!self.missing[i]).then_some(self.counts[i])
    }

    /// σ_i(t) in subscribers/km², `None` when missing.
    pub fn density(&self, cell: usize, slot: usize) -> Option<f64> {
        self.observed(cell, slot).map(|c| c as f64 / self.surfaces[cell])
    }

    /// Counts of one slot, all cells (missing entries read as 0).
    pub fn slot_counts(&self, slot: usize) -> &[u32] {
        let n = self.surfaces.len();
        &self.counts[slot * n..(slot + 1) * n]
    }

    pub fn slot_missing(&self, slot: usize) -> &[bool] {
        let n = self.surfaces.len();
        &self.missing[slot * n..(slot + 1) * n]
    }

    /// Densities of one slot; missing entries are 0.
    pub fn slot_densities(&self, slot: usize) -> Vec<f64> {
        presence_density(self.slot_counts(slot), &self.surfaces)
            .into_iter()
            .zip(self.slot_missing(slot))
            .map(|(d, m)| if *m { 0.0 } else { d })
            .collect()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn missing_mask(&self) -> &[bool] {
        &self.missing
    }

    /// Marks entries missing; used by sanitization.
    pub fn with_missing(mut self, missing: Vec<bool>) -> Result<Self> {
        if missing.len() != self.missing.len() {
            return Err(Error::input("missing mask has wrong length"));
        }
        self.missing = missing;
        Ok(self)
    }
}

impl SlotSeries for PresenceSeries {
    fn axis(&self) -> &SlotAxis {
        &self.axis
    }

    fn retain_slots(&self, keep: &[bool]) -> Self {
        let n = self.surfaces.len();
        let mut counts = Vec::new();
        let mut missing = Vec::new();
        for (s, k) in keep.iter().enumerate().take(self.axis.len()) {
            if *k {
                counts.extend_from_slice(&self.counts[s * n..(s + 1) * n]);
                missing.extend_from_slice(&self.missing[s * n..(s + 1) * n]);
            }
        }
        PresenceSeries {
            axis: self.axis.retain(keep),
            surfaces: self.surfaces.clone(),
            counts,
            missing,
        }
    }
}

/// Per-cell, per-slot event counts by kind.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSeries {
    axis: SlotAxis,
    n_cells: usize,
    counts: Vec<u32>,
}

const KINDS: usize = 5;

impl VolumeSeries {
    pub fn zeros(axis: SlotAxis, n_cells: usize) -> Self {
        let counts = vec![0; axis.len() * n_cells * KINDS];
        VolumeSeries { axis, n_cells, counts }
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_slots(&self) -> usize {
        self.axis.len()
    }

    fn idx(&self, cell: usize, slot: usize, kind: EventKind) -> usize {
        (slot * self.n_cells + cell) * KINDS + kind.index()
    }

    pub fn get(&self, cell: usize, slot: usize, kind: EventKind) -> u32 {
        self.counts[self.idx(cell, slot, kind)]
    }

    pub fn set(&mut self, cell: usize, slot: usize, kind: EventKind, value: u32) {
        let i = self.idx(cell, slot, kind);
        self.counts[i] = value;
    }

    pub(crate) fn add(&mut self, cell: usize, slot: usize, kind: EventKind) {
        let i = self.idx(cell, slot, kind);
        self.counts[i] += 1;
    }

    /// Voice calls plus texts, the traffic used for activity signatures.
    pub fn calls_and_texts(&self, cell: usize, slot: usize) -> u32 {
        [EventKind::CallIn, EventKind::CallOut, EventKind::SmsIn, EventKind::SmsOut]
            .into_iter()
            .map(|k| self.get(cell, slot, k))
            .sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn total_of(&self, kind: EventKind) -> u64 {
        self.counts
            .iter()
            .skip(kind.index())
            .step_by(KINDS)
            .map(|&c| c as u64)
            .sum()
    }
}

impl SlotSeries for VolumeSeries {
    fn axis(&self) -> &SlotAxis {
        &self.axis
    }

    fn retain_slots(&self, keep: &[bool]) -> Self {
        let stride = self.n_cells * KINDS;
        let mut counts = Vec::new();
        for (s, k) in keep.iter().enumerate().take(self.axis.len()) {
            if *k {
                counts.extend_from_slice(&self.counts[s * stride..(s + 1) * stride]);
            }
        }
        VolumeSeries {
            axis: self.axis.retain(keep),
            n_cells: self.n_cells,
            counts,
        }
    }
}

fn check_cell(event: &NetworkEvent, n_cells: usize) -> Result<()> {
    if event.cell >= n_cells {
        return Err(Error::input(format!(
            "event of device {} at t={} refers to unknown cell index {}",
            event.device.0, event.time, event.cell
        )));
    }
    Ok(())
}

fn check_order(prev: Option<(i64, DeviceId, EventKind)>, event: &NetworkEvent) -> Result<()> {
    if let Some(p) = prev {
        if event.order_key() < p {
            return Err(Error::input(format!(
                "event stream not sorted: t={} device {} after t={} device {}",
                event.time, event.device.0, p.0, p.1 .0
            )));
        }
    }
    Ok(())
}

/// Last known cell per device; small ids index a table directly.
#[derive(Default)]
struct DevicePositions {
    dense: Vec<u32>,
    sparse: HashMap<DeviceId, u32>,
    seen: usize,
}

impl DevicePositions {
    const DENSE_LIMIT: u64 = 1 << 24;
    const UNSEEN: u32 = u32::MAX;

    fn insert(&mut self, device: DeviceId, cell: u32) -> Option<u32> {
        let old = if device.0 < Self::DENSE_LIMIT {
            let i = device.0 as usize;
            if i >= self.dense.len() {
                self.dense.resize(i + 1, Self::UNSEEN);
            }
            Some(std::mem::replace(&mut self.dense[i], cell)).filter(|&c| c != Self::UNSEEN)
        } else {
            self.sparse.insert(device, cell)
        };
        if old.is_none() {
            self.seen += 1;
        }
        old
    }
}

/// Incremental last-event presence inference over a sorted stream.
///
/// Events before the axis start only set initial positions; events at or
/// after the axis end are rejected.
pub struct PresenceTracker {
    axis: SlotAxis,
    surfaces: Vec<f64>,
    position: DevicePositions,
    occupancy: Vec<u32>,
    counts: Vec<u32>,
    missing: Vec<bool>,
    next_slot: usize,
    prev: Option<(i64, DeviceId, EventKind)>,
}

impl PresenceTracker {
    pub fn new(grid: &GridTessellation, axis: SlotAxis) -> Result<Self> {
        if !axis.is_contiguous() {
            return Err(Error::input("presence inference needs a contiguous slot axis"));
        }
        let n = grid.len();
        Ok(PresenceTracker {
            counts: Vec::with_capacity(axis.len() * n),
            missing: Vec::with_capacity(axis.len() * n),
            axis,
            surfaces: grid.surfaces(),
            position: DevicePositions::default(),
            occupancy: vec![0; n],
            next_slot: 0,
            prev: None,
        })
    }

    fn slot_end(&self, slot: usize) -> i64 {
        self.axis.starts()[slot] + self.axis.slot_s()
    }

    fn snapshot(&mut self) {
        let nothing_seen = self.position.seen == 0;
        self.counts.extend_from_slice(&self.occupancy);
        self.missing.extend(std::iter::repeat_n(nothing_seen, self.occupancy.len()));
        self.next_slot += 1;
    }

    pub fn push(&mut self, event: &NetworkEvent) -> Result<()> {
        check_cell(event, self.occupancy.len())?;
        check_order(self.prev, event)?;
        self.prev = Some(event.order_key());
        let end = self.axis.starts().last().map(|s| s + self.axis.slot_s()).unwrap_or(i64::MIN);
        if event.time >= end {
            return Err(Error::input(format!("event at t={} is past the series end {end}", event.time)));
        }
        while self.next_slot < self.axis.len() && event.time >= self.slot_end(self.next_slot) {
            self.snapshot();
        }
        let cell = event.cell as u32;
        if let Some(old) = self.position.insert(event.device, cell) {
            self.occupancy[old as usize] -= 1;
        }
        self.occupancy[event.cell] += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PresenceSeries> {
        while self.next_slot < self.axis.len() {
            self.snapshot();
        }
        PresenceSeries::new(self.axis, self.surfaces, self.counts, self.missing)
    }
}

/// Incremental per-slot event counting.
pub struct VolumeCounter {
    series: VolumeSeries,
    start: i64,
    end: i64,
    prev: Option<(i64, DeviceId, EventKind)>,
}

impl VolumeCounter {
    pub fn new(grid: &GridTessellation, axis: SlotAxis) -> Result<Self> {
        if !axis.is_contiguous() {
            return Err(Error::input("volume aggregation needs a contiguous slot axis"));
        }
        let start = axis.starts().first().copied().unwrap_or(0);
        let end = start + axis.len() as i64 * axis.slot_s();
        Ok(VolumeCounter {
            series: VolumeSeries::zeros(axis, grid.len()),
            start,
            end,
            prev: None,
        })
    }

    pub fn push(&mut self, event: &NetworkEvent) -> Result<()> {
        check_cell(event, self.series.n_cells)?;
        check_order(self.prev, event)?;
        self.prev = Some(event.order_key());
        if event.time < self.start || event.time >= self.end {
            return Err(Error::input(format!(
                "event at t={} outside series range [{}, {})",
                event.time, self.start, self.end
            )));
        }
        let slot = ((event.time - self.start) / self.series.axis.slot_s()) as usize;
        self.series.add(event.cell, slot, event.kind);
        Ok(())
    }

    pub fn finish(self) -> VolumeSeries {
        self.series
    }
}

/// Presence counts per cell and slot from a time-ordered event stream.
pub fn infer_presence<'a, I>(events: I, grid: &GridTessellation, axis: SlotAxis) -> Result<PresenceSeries>
where
    I: IntoIterator<Item = &'a NetworkEvent>,
{
    let mut tracker = PresenceTracker::new(grid, axis)?;
    for e in events {
        tracker.push(e)?;
    }
    tracker.finish()
}

/// Event counts per cell, slot and kind.
pub fn aggregate_volumes<'a, I>(events: I, grid: &GridTessellation, axis: SlotAxis) -> Result<VolumeSeries>
where
    I: IntoIterator<Item = &'a NetworkEvent>,
{
    let mut counter = VolumeCounter::new(grid, axis)?;
    for e in events {
        counter.push(e)?;
    }
    Ok(counter.finish())
}

/// Subscribers per km².
pub fn presence_density(counts: &[u32], surfaces: &[f64]) -> Vec<f64> {
    counts.iter().zip(surfaces).map(|(&c, s)| c as f64 / s).collect()
}

/// A time-of-day window `[start, end)` in seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayWindow {
    pub start_s: i64,
    pub end_s: i64,
}

impl DayWindow {
    pub fn hours(start_h: i64, end_h: i64) -> Self {
        DayWindow {
            start_s: start_h * 3600,
            end_s: end_h * 3600,
        }
    }

    pub fn contains(&self, ts: i64) -> bool {
        let s = second_of_day(ts);
        s >= self.start_s && s < self.end_s
    }

    pub fn is_empty(&self) -> bool {
        self.end_s <= self.start_s
    }
}

/// Fraction of cells missing in every slot of `window` on `day`.
pub fn missing_cell_fraction(presence: &PresenceSeries, window: DayWindow, day: NaiveDate) -> Result<f64> {
    let slots: Vec<usize> = presence
        .axis()
        .starts()
        .iter()
        .enumerate()
        .filter(|(_, &s)| day_of(s) == day && window.contains(s))
        .map(|(i, _)| i)
        .collect();
    if slots.is_empty() {
        return Err(Error::input(format!("no slots of {day} fall in the window")));
    }
    let n = presence.n_cells();
    if n == 0 {
        return Err(Error::input("presence series has no cells"));
    }
    let suppressed = (0..n)
        .filter(|&c| slots.iter().all(|&s| presence.is_missing(c, s)))
        .count();
    Ok(suppressed as f64 / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;

    fn grid(n: usize) -> GridTessellation {
        GridTessellation::new(
            (0..n)
                .map(|i| Cell::rect(format!("c{i}"), (i as f64 * 1000.0, 0.0), ((i + 1) as f64 * 1000.0, 1000.0)).unwrap())
                .collect(),
        )
    }

    fn ev(device: u64, time: i64, cell: usize, kind: EventKind) -> NetworkEvent {
        NetworkEvent {
            device: DeviceId(device),
            time,
            cell,
            kind,
        }
    }

    #[test]
    fn last_event_rule_follows_device() {
        // A at t0=100, B at t1=1900, C at t2=3600 with 900 s slots from 0.
        let g = grid(3);
        let events = vec![
            ev(1, 100, 0, EventKind::CallIn),
            ev(1, 1900, 1, EventKind::SmsOut),
            ev(1, 3600, 2, EventKind::Internet),
        ];
        let p = infer_presence(&events, &g, SlotAxis::contiguous(0, 900, 6)).unwrap();
        let cell_of = |slot| (0..3).find(|&c| p.count(c, slot) == 1).unwrap();
        // slot ends: 900, 1800 (<= t1) -> A; 2700, 3600 in (t1, t2] -> B; later -> C
        assert_eq!([cell_of(0), cell_of(1), cell_of(2), cell_of(3), cell_of(4), cell_of(5)], [0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn empty_stream_is_all_missing() {
        let g = grid(2);
        let p = infer_presence(&[], &g, SlotAxis::contiguous(0, 900, 4)).unwrap();
        assert!(p.counts().iter().all(|&c| c == 0));
        assert!(p.missing_mask().iter().all(|&m| m));
    }

    #[test]
    fn three_devices_in_three_cells() {
        let g = grid(3);
        let events = vec![
            ev(1, 10, 0, EventKind::CallIn),
            ev(2, 20, 1, EventKind::CallIn),
            ev(3, 30, 2, EventKind::CallIn),
        ];
        let p = infer_presence(&events, &g, SlotAxis::contiguous(0, 900, 3)).unwrap();
        for s in 0..3 {
            assert_eq!(p.slot_counts(s), &[1, 1, 1]);
            assert!(p.slot_missing(s).iter().all(|m| !m));
        }
    }

    #[test]
    fn event_at_slot_end_goes_to_next_slot() {
        let g = grid(2);
        let events = vec![ev(1, 0, 0, EventKind::CallIn), ev(1, 900, 1, EventKind::CallIn)];
        let p = infer_presence(&events, &g, SlotAxis::contiguous(0, 900, 2)).unwrap();
        assert_eq!(p.slot_counts(0), &[1, 0]);
        assert_eq!(p.slot_counts(1), &[0, 1]);
        let v = aggregate_volumes(&events, &g, SlotAxis::contiguous(0, 900, 2)).unwrap();
        assert_eq!(v.get(1, 1, EventKind::CallIn), 1);
        assert_eq!(v.get(1, 0, EventKind::CallIn), 0);
    }

    #[test]
    fn unsorted_and_unknown_cells_rejected() {
        let g = grid(2);
        let unsorted = vec![ev(1, 50, 0, EventKind::CallIn), ev(1, 10, 0, EventKind::CallIn)];
        assert!(matches!(
            infer_presence(&unsorted, &g, SlotAxis::contiguous(0, 900, 1)),
            Err(Error::Input(_))
        ));
        let unknown = vec![ev(1, 50, 7, EventKind::CallIn)];
        assert!(matches!(
            aggregate_volumes(&unknown, &g, SlotAxis::contiguous(0, 900, 1)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn five_call_ins_in_one_slot() {
        let g = grid(1);
        let events: Vec<_> = (0..5).map(|d| ev(d, 100, 0, EventKind::CallIn)).collect();
        let v = aggregate_volumes(&events, &g, SlotAxis::contiguous(0, 900, 1)).unwrap();
        assert_eq!(v.get(0, 0, EventKind::CallIn), 5);
        assert_eq!(v.total(), 5);
    }

    #[test]
    fn empty_stream_volumes_are_zero() {
        let v = aggregate_volumes(&[], &grid(3), SlotAxis::contiguous(0, 900, 4)).unwrap();
        assert_eq!(v.total(), 0);
    }

    #[test]
    fn density_arithmetic() {
        assert_eq!(presence_density(&[200, 0], &[2.0, 1.0]), vec![100.0, 0.0]);
        let d = presence_density(&[35], &[0.255 * 0.325])[0];
        assert!((d - 35.0 / 0.082875).abs() < 1e-9);
        assert!((d - 422.3).abs() < 0.05);
    }

    fn fraction_fixture(suppressed: usize) -> PresenceSeries {
        // 10 cells, one day of hourly slots
        let axis = SlotAxis::contiguous(0, 3600, 24);
        let n = 10;
        let counts = vec![5; 24 * n];
        let mut missing = vec![false; 24 * n];
        for s in 0..24 {
            for c in 0..suppressed {
                missing[s * n + c] = true;
            }
        }
        PresenceSeries::new(axis, vec![1.0; n], counts, missing).unwrap()
    }

    #[test]
    fn missing_fraction_cases() {
        let day = day_of(0);
        let w = DayWindow::hours(4, 5);
        assert_eq!(missing_cell_fraction(&fraction_fixture(0), w, day).unwrap(), 0.0);
        assert_eq!(missing_cell_fraction(&fraction_fixture(10), w, day).unwrap(), 1.0);
        assert!((missing_cell_fraction(&fraction_fixture(9), w, day).unwrap() - 0.9).abs() < 1e-15);
        assert!(missing_cell_fraction(&fraction_fixture(0), DayWindow::hours(5, 5), day).is_err());
    }
}
