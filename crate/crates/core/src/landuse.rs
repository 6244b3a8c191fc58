//! Land-use classes from weekly call-and-text signatures.
//!
//! A signature holds, for each of the 168 hours of the week (Monday 00:00 is
//! hour 0), the median over weeks of the cell's hourly call-and-text volume,
//! normalized to sum to 1.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio::{self, CsvOut};
use crate::error::{Error, Result};
use crate::grid::GridTessellation;
use crate::metadata::{SlotSeries, VolumeSeries};
use crate::regress::pearson;
use crate::stats::median;

pub const HOURS_PER_WEEK: usize = 168;
// 1970-01-05 00:00 was a Monday, 96 h after the epoch
const FIRST_MONDAY_HOUR: i64 = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LandUse {
    Residential,
    Office,
    Touristic,
    University,
    Shopping,
}

impl LandUse {
    /// Also the tie-break order in classification.
    pub const ALL: [LandUse; 5] = [
        LandUse::Residential,
        LandUse::Office,
        LandUse::Touristic,
        LandUse::University,
        LandUse::Shopping,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LandUse::Residential => "residential",
            LandUse::Office => "office",
            LandUse::Touristic => "touristic",
            LandUse::University => "university",
            LandUse::Shopping => "shopping",
        }
    }
}

impl fmt::Display for LandUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LandUse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LandUse::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::input(format!("unknown land use `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklySignature {
    pub cell: usize,
    pub values: Vec<f64>,
}

impl WeeklySignature {
    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }
}

fn hour_of_week(hour: i64) -> usize {
    (hour - FIRST_MONDAY_HOUR).rem_euclid(HOURS_PER_WEEK as i64) as usize
}

/// Hourly call-and-text totals for every cell, keyed by absolute hour.
fn hourly_totals(volumes: &VolumeSeries) -> (Vec<i64>, Vec<Vec<f64>>) {
    let mut hours: Vec<i64> = volumes.axis().starts().iter().map(|s| s.div_euclid(3600)).collect();
    hours.dedup();
    let pos: HashMap<i64, usize> = hours.iter().enumerate().map(|(i, h)| (*h, i)).collect();
    let mut totals = vec![vec![0.0; hours.len()]; volumes.n_cells()];
    for (s, start) in volumes.axis().starts().iter().enumerate() {
        let h = pos[&start.div_euclid(3600)];
        for (c, row) in totals.iter_mut().enumerate() {
            row[h] += volumes.calls_and_texts(c, s) as f64;
        }
    }
    (hours, totals)
}

fn median_profile(hours: &[i64], totals: &[f64]) -> Vec<f64> {
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); HOURS_PER_WEEK];
    for (h, v) in hours.iter().zip(totals) {
        buckets[hour_of_week(*h)].push(*v);
    }
    buckets.iter().map(|b| median(b).unwrap_or(0.0)).collect()
}

fn normalized(cell: usize, raw: Vec<f64>) -> Result<WeeklySignature> {
    let sum: f64 = raw.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::insufficient(format!("no call or text activity in cell {cell}")));
    }
    Ok(WeeklySignature {
        cell,
        values: raw.into_iter().map(|v| v / sum).collect(),
    })
}

/// Unnormalized median profile of one cell.
pub fn weekly_profile(volumes: &VolumeSeries, cell: usize) -> Result<Vec<f64>> {
    if cell >= volumes.n_cells() {
        return Err(Error::input(format!("cell index {cell} out of range")));
    }
    let (hours, totals) = hourly_totals(volumes);
    Ok(median_profile(&hours, &totals[cell]))
}

pub fn weekly_signature(volumes: &VolumeSeries, cell: usize) -> Result<WeeklySignature> {
    normalized(cell, weekly_profile(volumes, cell)?)
}

/// Signatures of every cell; cells without activity yield an error entry.
pub fn weekly_signatures(volumes: &VolumeSeries) -> Vec<Result<WeeklySignature>> {
    let (hours, totals) = hourly_totals(volumes);
    totals
        .par_iter()
        .enumerate()
        .map(|(c, t)| normalized(c, median_profile(&hours, t)))
        .collect()
}

/// `1 - r`; `None` when either vector is constant.
pub fn correlation_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(a, b).ok().map(|r| 1.0 - r)
}

/// One agglomeration step: clusters `a` and `b` joined at `height`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Condensed symmetric matrix over `n` points.
struct Condensed {
    n: usize,
    d: Vec<f64>,
}

impl Condensed {
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[self.idx(i, j)]
    }
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.d[k] = v;
    }
}

/// Average-linkage agglomeration by the nearest-neighbour chain algorithm.
/// Merges are returned in increasing height; a merged cluster keeps the
/// smaller of its two representative indices.
pub fn average_linkage(n: usize, dist: impl Fn(usize, usize) -> f64) -> Vec<Merge> {
    if n < 2 {
        return Vec::new();
    }
    let mut m = Condensed {
        n,
        d: vec![0.0; n * (n - 1) / 2],
    };
    for i in 0..n {
        for j in i + 1..n {
            m.set(i, j, dist(i, j));
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut chain: Vec<usize> = Vec::new();
    let mut merges = Vec::with_capacity(n - 1);
    while merges.len() < n - 1 {
        if chain.is_empty() {
            chain.push(active.iter().position(|&a| a).unwrap());
        }
        loop {
            let top = *chain.last().unwrap();
            let prev = if chain.len() >= 2 { Some(chain[chain.len() - 2]) } else { None };
            // nearest active neighbour; prefer the chain predecessor on ties
            let mut best = prev;
            let mut best_d = prev.map(|p| m.get(top, p)).unwrap_or(f64::INFINITY);
            for k in 0..n {
                if k == top || !active[k] || Some(k) == prev {
                    continue;
                }
                let d = m.get(top, k);
                if d < best_d {
                    best_d = d;
                    best = Some(k);
                }
            }
            let nn = best.expect("at least two active clusters");
            if Some(nn) == prev {
                chain.pop();
                chain.pop();
                let (a, b) = if top < nn { (top, nn) } else { (nn, top) };
                merges.push(Merge { a, b, height: best_d });
                let (na, nb) = (size[a] as f64, size[b] as f64);
                for k in 0..n {
                    if active[k] && k != a && k != b {
                        let v = (na * m.get(a, k) + nb * m.get(b, k)) / (na + nb);
                        m.set(a, k, v);
                    }
                }
                size[a] += size[b];
                active[b] = false;
                break;
            }
            chain.push(nn);
        }
    }
    merges.sort_by(|x, y| x.height.total_cmp(&y.height));
    merges
}

/// Flat labels `0..k` after applying the first `n - k` merges. Labels are
/// numbered by the first point of each cluster.
pub fn cut_tree(n: usize, merges: &[Merge], k: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let nx = p[y];
            p[y] = r;
            y = nx;
        }
        r
    }
    for mg in merges.iter().take(n.saturating_sub(k)) {
        let (ra, rb) = (find(&mut parent, mg.a), find(&mut parent, mg.b));
        parent[rb.max(ra)] = ra.min(rb);
    }
    let mut label_of_root = HashMap::new();
    (0..n)
        .map(|i| {
            let r = find(&mut parent, i);
            let next = label_of_root.len();
            *label_of_root.entry(r).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster of each input signature, in `0..k`.
    pub labels: Vec<usize>,
    /// Member means, indexed by cluster.
    pub characteristic: Vec<Vec<f64>>,
    /// Constant signatures placed by nearest Euclidean neighbour.
    pub fallback: Vec<bool>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn cluster_signatures(signatures: &[WeeklySignature], k: usize) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::input("cluster count must be positive"));
    }
    let varying: Vec<usize> = (0..signatures.len()).filter(|&i| !signatures[i].is_constant()).collect();
    if varying.len() < k {
        return Err(Error::insufficient(format!(
            "{} non-constant signatures for {k} clusters",
            varying.len()
        )));
    }
    let merges = average_linkage(varying.len(), |i, j| {
        correlation_distance(&signatures[varying[i]].values, &signatures[varying[j]].values)
            .expect("non-constant signatures")
    });
    let sub = cut_tree(varying.len(), &merges, k);
    let mut labels = vec![usize::MAX; signatures.len()];
    for (p, &i) in varying.iter().enumerate() {
        labels[i] = sub[p];
    }
    let mut fallback = vec![false; signatures.len()];
    for i in 0..signatures.len() {
        if labels[i] != usize::MAX {
            continue;
        }
        let nearest = varying
            .iter()
            .copied()
            .min_by(|&a, &b| {
                euclidean(&signatures[i].values, &signatures[a].values)
                    .total_cmp(&euclidean(&signatures[i].values, &signatures[b].values))
            })
            .expect("at least one varying signature");
        labels[i] = labels[nearest];
        fallback[i] = true;
    }
    let dim = signatures[varying[0]].values.len();
    let mut characteristic = vec![vec![0.0; dim]; k];
    let mut members = vec![0usize; k];
    for (s, &l) in signatures.iter().zip(&labels) {
        members[l] += 1;
        for (acc, v) in characteristic[l].iter_mut().zip(&s.values) {
            *acc += v;
        }
    }
    for (c, m) in characteristic.iter_mut().zip(&members) {
        for v in c.iter_mut() {
            *v /= *m as f64;
        }
    }
    Ok(Clustering {
        labels,
        characteristic,
        fallback,
    })
}

/// Names clusters by majority vote of reference labels; ties go to the
/// earlier land use.
pub fn name_clusters_by_reference(labels: &[usize], k: usize, reference: &[LandUse]) -> Result<Vec<LandUse>> {
    if labels.len() != reference.len() {
        return Err(Error::input("reference labels do not match the clustered cells"));
    }
    (0..k)
        .map(|c| {
            let mut votes = [0usize; 5];
            for (l, r) in labels.iter().zip(reference) {
                if *l == c {
                    votes[*r as usize] += 1;
                }
            }
            let best = (0..5).max_by(|&a, &b| votes[a].cmp(&votes[b]).then(b.cmp(&a))).unwrap();
            if votes[best] == 0 {
                return Err(Error::insufficient(format!("cluster {c} has no members")));
            }
            Ok(LandUse::ALL[best])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: LandUse,
    /// Correlation with the winning characteristic signature (0 if undefined).
    pub r: f64,
    /// Tied best match or undefined correlation.
    pub low_confidence: bool,
}

const TIE_EPS: f64 = 1e-12;

/// Label of the best-correlated characteristic signature.
pub fn classify_cells(signatures: &[WeeklySignature], characteristic: &[(LandUse, Vec<f64>)]) -> Result<Vec<Classification>> {
    if characteristic.is_empty() {
        return Err(Error::input("no characteristic signatures"));
    }
    let mut order: Vec<&(LandUse, Vec<f64>)> = characteristic.iter().collect();
    order.sort_by_key(|(l, _)| *l);
    Ok(signatures
        .par_iter()
        .map(|s| {
            let scores: Vec<Option<f64>> = order.iter().map(|(_, c)| pearson(&s.values, c).ok()).collect();
            let best = scores.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
            if best == f64::NEG_INFINITY {
                return Classification {
                    label: order[0].0,
                    r: 0.0,
                    low_confidence: true,
                };
            }
            let winners: Vec<usize> = (0..order.len())
                .filter(|&i| scores[i].is_some_and(|r| r >= best - TIE_EPS))
                .collect();
            Classification {
                label: order[winners[0]].0,
                r: scores[winners[0]].unwrap(),
                low_confidence: winners.len() > 1 || scores.iter().any(|r| r.is_none()),
            }
        })
        .collect())
}

pub const LABELS_HEADER: [&str; 2] = ["cell_id", "land_use"];

pub fn write_labels(path: &Path, grid: &GridTessellation, labels: &[LandUse]) -> Result<()> {
    let mut out = CsvOut::create(path, &LABELS_HEADER)?;
    for (c, l) in grid.cells().iter().zip(labels) {
        out.row([c.id.as_str(), l.as_str()])?;
    }
    out.finish()
}

/// Labels aligned to the grid; every cell must appear.
pub fn read_labels(path: &Path, grid: &GridTessellation) -> Result<Vec<LandUse>> {
    let mut labels = vec![None; grid.len()];
    for rec in csvio::records(path, &LABELS_HEADER)? {
        let rec = rec?;
        let id = csvio::field(&rec, 0, "cell_id", path)?;
        let i = grid
            .position(id)
            .ok_or_else(|| Error::input(format!("{}: unknown cell id `{id}`", path.display())))?;
        labels[i] = Some(csvio::field(&rec, 1, "land_use", path)?.parse()?);
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.ok_or_else(|| Error::input(format!("{}: no land use for cell `{}`", path.display(), grid.cells()[i].id)))
        })
        .collect()
}

fn signature_header() -> Vec<String> {
    std::iter::once("cell_id".to_string())
        .chain((0..HOURS_PER_WEEK).map(|h| format!("h{h}")))
        .collect()
}

pub fn write_signatures<'a, I>(path: &Path, rows: I) -> Result<()>
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let header = signature_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = CsvOut::create(path, &header)?;
    for (id, values) in rows {
        out.row(std::iter::once(id.to_string()).chain(values.iter().map(|v| v.to_string())))?;
    }
    out.finish()
}

/// Rows of `(id, 168 values)` in file order.
pub fn read_signatures(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let header = signature_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut rows = Vec::new();
    for rec in csvio::records(path, &header)? {
        let rec = rec?;
        let id = csvio::field(&rec, 0, "cell_id", path)?.to_string();
        let values = (1..=HOURS_PER_WEEK)
            .map(|i| csvio::parse::<f64>(&rec, i, header[i], path))
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, values));
    }
    Ok(rows)
}
