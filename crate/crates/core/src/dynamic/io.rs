//! Parameter, dynamic-map, event and attendance files.

use std::path::Path;

use super::{ActivityKind, AttendanceEstimate, DynamicSeries, EventSpec, MultivariateParams, Venue, ZScores};
use crate::csvio::{self, CsvOut};
use crate::error::{Error, Result};
use crate::grid::GridTessellation;

pub const DYNAMIC_HEADER: [&str; 4] = ["cell_id", "slot_start_s", "rho_hat", "z"];
pub const ATTENDANCE_HEADER: [&str; 6] =
    ["event_id", "t_peak_s", "sigma_norm", "sigma_match", "lambda_tilde", "gamma_hat"];
pub const EVENTS_HEADER: [&str; 4] = ["event_id", "start_s", "end_s", "venue_cells"];
pub const TRUTH_HEADER: [&str; 2] = ["event_id", "attendance"];
pub const ESTIMATES_HEADER: [&str; 2] = ["event_id", "gamma_hat"];

impl MultivariateParams {
    pub fn to_text(&self) -> String {
        format!(
            "a_alpha = {}\nb_alpha = {}\na_beta = {}\nb_beta = {}\nkind = {}\n",
            self.a_alpha, self.b_alpha, self.a_beta, self.b_beta, self.kind
        )
    }

    /// Parses `key = value` lines; all four coefficients are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut coef = [None; 4];
        let mut kind = ActivityKind::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let slot = match k {
                "a_alpha" => 0,
                "b_alpha" => 1,
                "a_beta" => 2,
                "b_beta" => 3,
                "kind" => {
                    kind = v.parse()?;
                    continue;
                }
                _ => return Err(Error::input(format!("line {}: unknown key `{k}`", no + 1))),
            };
            let x: f64 = v.parse().map_err(|_| Error::input(format!("{k}: bad number `{v}`")))?;
            if !x.is_finite() {
                return Err(Error::input(format!("{k} is not finite")));
            }
            coef[slot] = Some(x);
        }
        let names = ["a_alpha", "b_alpha", "a_beta", "b_beta"];
        let get = |i: usize| coef[i].ok_or_else(|| Error::input(format!("parameter `{}` missing", names[i])));
        Ok(MultivariateParams {
            a_alpha: get(0)?,
            b_alpha: get(1)?,
            a_beta: get(2)?,
            b_beta: get(3)?,
            kind,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&csvio::read_text(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        csvio::write_text(path, &self.to_text())
    }
}

pub fn write_dynamic(path: &Path, grid: &GridTessellation, series: &DynamicSeries, z: &ZScores) -> Result<()> {
    let mut out = CsvOut::create(path, &DYNAMIC_HEADER)?;
    for (s, start) in series.axis.starts().iter().enumerate() {
        for (c, cell) in grid.cells().iter().enumerate() {
            let k = s * series.n_cells + c;
            out.row([cell.id.clone(), start.to_string(), series.rho_hat[k].to_string(), z.z[k].to_string()])?;
        }
    }
    out.finish()
}

pub fn write_attendance(path: &Path, estimates: &[AttendanceEstimate]) -> Result<()> {
    let mut out = CsvOut::create(path, &ATTENDANCE_HEADER)?;
    for e in estimates {
        out.row([
            e.event_id.clone(),
            e.t_peak.to_string(),
            e.sigma_norm.to_string(),
            e.sigma_match.to_string(),
            e.lambda_tilde.to_string(),
            e.gamma_hat.to_string(),
        ])?;
    }
    out.finish()
}

/// `(event_id, gamma_hat)` from an attendance or estimates file.
pub fn read_gamma(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = csvio::reader(path, &["event_id"])?;
    let col = rdr
        .headers()
        .ok()
        .and_then(|h| h.iter().position(|f| f == "gamma_hat"))
        .ok_or_else(|| Error::input(format!("{}: no gamma_hat column", path.display())))?;
    let mut out = Vec::new();
    for rec in csvio::records(path, &["event_id"])? {
        let rec = rec?;
        out.push((
            csvio::field(&rec, 0, "event_id", path)?.to_string(),
            csvio::parse(&rec, col, "gamma_hat", path)?,
        ));
    }
    Ok(out)
}

pub fn write_estimates(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut out = CsvOut::create(path, &ESTIMATES_HEADER)?;
    for (id, g) in rows {
        out.row([id.clone(), g.to_string()])?;
    }
    out.finish()
}

/// Venue cells are `;`-separated cell ids.
pub fn write_events(path: &Path, grid: &GridTessellation, events: &[EventSpec]) -> Result<()> {
    let mut out = CsvOut::create(path, &EVENTS_HEADER)?;
    for e in events {
        let Venue::Cells(cells) = &e.venue else {
            return Err(Error::input(format!("event {}: only cell venues can be written", e.id)));
        };
        let ids: Vec<&str> = cells.iter().map(|&c| grid.cells()[c].id.as_str()).collect();
        out.row([e.id.clone(), e.start_s.to_string(), e.end_s.to_string(), ids.join(";")])?;
    }
    out.finish()
}

pub fn read_events(path: &Path, grid: &GridTessellation) -> Result<Vec<EventSpec>> {
    let mut events = Vec::new();
    for rec in csvio::records(path, &EVENTS_HEADER)? {
        let rec = rec?;
        let cells = csvio::field(&rec, 3, "venue_cells", path)?
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|id| grid.position(id).ok_or_else(|| Error::input(format!("{}: unknown cell `{id}`", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        events.push(EventSpec {
            id: csvio::field(&rec, 0, "event_id", path)?.to_string(),
            venue: Venue::Cells(cells),
            start_s: csvio::parse(&rec, 1, "start_s", path)?,
            end_s: csvio::parse(&rec, 2, "end_s", path)?,
        });
    }
    Ok(events)
}

pub fn write_truth(path: &Path, rows: &[(String, f64)]) -> Result<()> {
    let mut out = CsvOut::create(path, &TRUTH_HEADER)?;
    for (id, n) in rows {
        out.row([id.clone(), n.to_string()])?;
    }
    out.finish()
}

pub fn read_truth(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rows = Vec::new();
    for rec in csvio::records(path, &TRUTH_HEADER)? {
        let rec = rec?;
        rows.push((
            csvio::field(&rec, 0, "event_id", path)?.to_string(),
            csvio::parse(&rec, 1, "attendance", path)?,
        ));
    }
    Ok(rows)
}
