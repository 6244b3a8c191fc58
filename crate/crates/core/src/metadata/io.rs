//! Event, presence and volume CSV files.

use std::path::Path;

use super::{DeviceId, EventKind, NetworkEvent, PresenceSeries, SlotAxis, SlotSeries, VolumeSeries};
use crate::csvio::{self, CsvOut};
use crate::error::{Error, Result};
use crate::grid::GridTessellation;

pub const EVENTS_HEADER: [&str; 4] = ["device_id", "timestamp_s", "cell_id", "kind"];
pub const PRESENCE_HEADER: [&str; 3] = ["cell_id", "slot_start_s", "count"];
pub const VOLUMES_HEADER: [&str; 4] = ["cell_id", "slot_start_s", "kind", "count"];

fn cell_index(grid: &GridTessellation, id: &str, path: &Path) -> Result<usize> {
    grid.position(id)
        .ok_or_else(|| Error::input(format!("{}: unknown cell id `{id}`", path.display())))
}

/// Streams events from disk. Device ids must be unsigned integers.
pub fn read_events<'a>(
    path: &'a Path,
    grid: &'a GridTessellation,
) -> Result<impl Iterator<Item = Result<NetworkEvent>> + 'a> {
    Ok(csvio::records(path, &EVENTS_HEADER)?.map(move |rec| {
        let rec = rec?;
        Ok(NetworkEvent {
            device: DeviceId(csvio::parse(&rec, 0, "device_id", path)?),
            time: csvio::parse(&rec, 1, "timestamp_s", path)?,
            cell: cell_index(grid, csvio::field(&rec, 2, "cell_id", path)?, path)?,
            kind: csvio::field(&rec, 3, "kind", path)?.parse()?,
        })
    }))
}

pub fn write_events<'a, I>(path: &Path, grid: &GridTessellation, events: I) -> Result<()>
where
    I: IntoIterator<Item = &'a NetworkEvent>,
{
    let mut out = CsvOut::create(path, &EVENTS_HEADER)?;
    for e in events {
        out.row([
            e.device.0.to_string(),
            e.time.to_string(),
            grid.cells()[e.cell].id.clone(),
            e.kind.as_str().to_string(),
        ])?;
    }
    out.finish()
}

/// Writes non-missing entries; absent rows mean missing.
pub fn write_presence(path: &Path, grid: &GridTessellation, presence: &PresenceSeries) -> Result<()> {
    let mut out = CsvOut::create(path, &PRESENCE_HEADER)?;
    for (s, start) in presence.axis().starts().iter().enumerate() {
        for (c, cell) in grid.cells().iter().enumerate() {
            if let Some(n) = presence.observed(c, s) {
                out.row([cell.id.clone(), start.to_string(), n.to_string()])?;
            }
        }
    }
    out.finish()
}

/// Reads a presence file; the slot axis is the set of slot starts found in it.
pub fn read_presence(path: &Path, grid: &GridTessellation, slot_s: i64) -> Result<PresenceSeries> {
    let mut rows = Vec::new();
    for rec in csvio::records(path, &PRESENCE_HEADER)? {
        let rec = rec?;
        let cell = cell_index(grid, csvio::field(&rec, 0, "cell_id", path)?, path)?;
        let start: i64 = csvio::parse(&rec, 1, "slot_start_s", path)?;
        let count: u32 = csvio::parse(&rec, 2, "count", path)?;
        rows.push((cell, start, count));
    }
    let axis = SlotAxis::from_starts(slot_s, rows.iter().map(|r| r.1).collect());
    let n = grid.len();
    let mut counts = vec![0; axis.len() * n];
    let mut missing = vec![true; axis.len() * n];
    for (cell, start, count) in rows {
        let s = axis.position(start).expect("slot collected above");
        counts[s * n + cell] = count;
        missing[s * n + cell] = false;
    }
    PresenceSeries::new(axis, grid.surfaces(), counts, missing)
}

/// Writes nonzero counts; absent rows are zero.
pub fn write_volumes(path: &Path, grid: &GridTessellation, volumes: &VolumeSeries) -> Result<()> {
    let mut out = CsvOut::create(path, &VOLUMES_HEADER)?;
    for (s, start) in volumes.axis().starts().iter().enumerate() {
        for (c, cell) in grid.cells().iter().enumerate() {
            for kind in EventKind::ALL {
                let v = volumes.get(c, s, kind);
                if v > 0 {
                    out.row([cell.id.clone(), start.to_string(), kind.as_str().to_string(), v.to_string()])?;
                }
            }
        }
    }
    out.finish()
}

/// Reads a volumes file on its own; the axis runs contiguously from the
/// first to the last slot start found.
pub fn read_volumes_spanning(path: &Path, grid: &GridTessellation, slot_s: i64) -> Result<VolumeSeries> {
    let mut first = i64::MAX;
    let mut last = i64::MIN;
    for rec in csvio::records(path, &VOLUMES_HEADER)? {
        let start: i64 = csvio::parse(&rec?, 1, "slot_start_s", path)?;
        first = first.min(start);
        last = last.max(start);
    }
    if first > last {
        return Err(Error::insufficient(format!("{}: no volume rows", path.display())));
    }
    if slot_s <= 0 || (last - first) % slot_s != 0 {
        return Err(Error::input(format!("{}: slot starts are not multiples of {slot_s} s apart", path.display())));
    }
    let axis = SlotAxis::contiguous(first, slot_s, ((last - first) / slot_s + 1) as usize);
    read_volumes(path, grid, &axis)
}

/// Reads volumes onto a given slot axis; rows for other slots are ignored.
pub fn read_volumes(path: &Path, grid: &GridTessellation, axis: &SlotAxis) -> Result<VolumeSeries> {
    let mut vols = VolumeSeries::zeros(axis.clone(), grid.len());
    for rec in csvio::records(path, &VOLUMES_HEADER)? {
        let rec = rec?;
        let cell = cell_index(grid, csvio::field(&rec, 0, "cell_id", path)?, path)?;
        let start: i64 = csvio::parse(&rec, 1, "slot_start_s", path)?;
        let kind: EventKind = csvio::field(&rec, 2, "kind", path)?.parse()?;
        let count: u32 = csvio::parse(&rec, 3, "count", path)?;
        if let Some(s) = axis.position(start) {
            vols.set(cell, s, kind, count);
        }
    }
    Ok(vols)
}
