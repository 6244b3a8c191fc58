//! City generation: grid, census, land use and subscribers.

use rand::distr::weighted::WeightedIndex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::filters::parse_clock;
use crate::grid::{census_to_grid, rect_polygon, AdminArea, Cell, GridTessellation, PopulationDensityMap};
use crate::landuse::LandUse;
use crate::metadata::{day_start, SlotAxis};

/// Relative pull of each land use as a workplace, `LandUse::ALL` order.
const WORK_WEIGHTS: [f64; 5] = [0.5, 8.0, 2.0, 4.0, 3.0];

const CITY_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct Subscriber {
    pub home: usize,
    pub work: Option<usize>,
    /// Multiplies every event rate of this device.
    pub activity: f64,
    /// Overnight guest not counted by the census.
    pub visitor: bool,
}

/// Crowd brought to venue cells on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedEvent {
    pub id: String,
    pub venue: Vec<usize>,
    pub attendees: u64,
    pub start_s: i64,
    pub end_s: i64,
    /// Arrivals spread over `[start - arrival_ramp_s, start]`.
    pub arrival_ramp_s: i64,
    /// Departures spread over `[end, end + departure_ramp_s]`.
    pub departure_ramp_s: i64,
}

impl InjectedEvent {
    pub fn date(&self) -> chrono::NaiveDate {
        crate::metadata::day_of(self.start_s)
    }

    /// The matching estimation input.
    pub fn spec(&self) -> crate::dynamic::EventSpec {
        crate::dynamic::EventSpec {
            id: self.id.clone(),
            venue: crate::dynamic::Venue::Cells(self.venue.clone()),
            start_s: self.start_s,
            end_s: self.end_s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScenario {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub grid: GridTessellation,
    pub admin: Vec<AdminArea>,
    /// Census density per cell (inhabitants per km²).
    pub census: PopulationDensityMap,
    pub landuse: Vec<LandUse>,
    /// Residents first, then visitors; the index is the device id.
    pub users: Vec<Subscriber>,
    pub profiles: [[f64; 24]; 5],
    pub events: Vec<InjectedEvent>,
}

impl SyntheticScenario {
    /// Slots of the observed period, warm-up excluded.
    pub fn axis(&self) -> SlotAxis {
        SlotAxis::days(self.config.start_date, self.config.days, self.config.slot_s)
    }

    pub fn residents(&self) -> usize {
        self.users.iter().take_while(|u| !u.visitor).count()
    }

    /// Census inhabitants per cell.
    pub fn population(&self) -> Vec<f64> {
        self.census.values.iter().zip(self.grid.cells()).map(|(d, c)| d * c.surface_km2).collect()
    }

    /// People per km² implied by a device count per cell.
    pub fn density_of(&self, devices: &[u32]) -> Vec<f64> {
        let m = self.config.market_share;
        devices.iter().zip(self.grid.cells()).map(|(&n, c)| n as f64 / m / c.surface_km2).collect()
    }

    /// Resolves cell ids and clock times of a configured event.
    pub fn event_from_config(&self, e: &super::config::EventConfig) -> Result<InjectedEvent> {
        let venue = e
            .venue
            .iter()
            .map(|id| self.grid.position(id).ok_or_else(|| Error::input(format!("event {}: unknown cell `{id}`", e.id))))
            .collect::<Result<Vec<_>>>()?;
        if venue.is_empty() {
            return Err(Error::input(format!("event {} has no venue cells", e.id)));
        }
        let day0 = day_start(e.date);
        let start_s = day0 + parse_clock("start", &e.start)?;
        let end_s = day0 + parse_clock("end", &e.end)?;
        let arrival_ramp_s = (e.arrival_ramp_h * 3600.0).round() as i64;
        let departure_ramp_s = (e.departure_ramp_h * 3600.0).round() as i64;
        if end_s <= start_s || start_s - arrival_ramp_s < day0 || end_s + departure_ramp_s >= day0 + 86_400 {
            return Err(Error::input(format!("event {}: ramps and timespan must fit inside its day", e.id)));
        }
        Ok(InjectedEvent {
            id: e.id.clone(),
            venue,
            attendees: e.attendees,
            start_s,
            end_s,
            arrival_ramp_s,
            departure_ramp_s,
        })
    }
}

/// Splits `total` in proportion to `weights`, largest remainders first.
pub fn apportion(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || !(sum > 0.0) {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// Side lengths growing quadratically from the middle, with jitter.
fn spans(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = ((i as f64 + 0.5) / n as f64 - 0.5).abs() * 2.0;
            let jitter: f64 = rng.random_range(-1.0..=1.0);
            (lo + (hi - lo) * (t * t + 0.1 * jitter)).clamp(lo, hi)
        })
        .collect()
}

fn cumulative(spans: &[f64]) -> Vec<f64> {
    let mut edges = Vec::with_capacity(spans.len() + 1);
    edges.push(0.0);
    for s in spans {
        edges.push(edges.last().unwrap() + s);
    }
    edges
}

fn build_grid(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<(GridTessellation, (f64, f64))> {
    let g = &cfg.grid;
    let xs = cumulative(&spans(g.columns, g.min_cell_m[0], g.max_cell_m[0], rng));
    let ys = cumulative(&spans(g.rows, g.min_cell_m[1], g.max_cell_m[1], rng));
    let mut cells = Vec::with_capacity(g.columns * g.rows);
    for r in 0..g.rows {
        for c in 0..g.columns {
            cells.push(Cell::rect(format!("r{r:03}c{c:03}"), (xs[c], ys[r]), (xs[c + 1], ys[r + 1]))?);
        }
    }
    Ok((GridTessellation::new(cells), (xs[g.columns], ys[g.rows])))
}

fn build_admin(cfg: &ScenarioConfig, extent: (f64, f64), rng: &mut ChaCha8Rng) -> Result<Vec<AdminArea>> {
    let (ac, ar) = (cfg.grid.admin_columns, cfg.grid.admin_rows);
    let (w, h) = (extent.0 / ac as f64, extent.1 / ar as f64);
    let noise = Normal::new(0.0, cfg.population.log_sigma).map_err(|e| Error::input(e.to_string()))?;
    let half_diag = 0.5 * extent.0.hypot(extent.1);
    let mut rects = Vec::with_capacity(ac * ar);
    let mut weights = Vec::with_capacity(ac * ar);
    for r in 0..ar {
        for c in 0..ac {
            let min = (c as f64 * w, r as f64 * h);
            let max = if c + 1 == ac { extent.0 } else { (c + 1) as f64 * w };
            let max = (max, if r + 1 == ar { extent.1 } else { (r + 1) as f64 * h });
            let centre = (0.5 * (min.0 + max.0), 0.5 * (min.1 + max.1));
            let dist = (centre.0 - 0.5 * extent.0).hypot(centre.1 - 0.5 * extent.1) / half_diag;
            let log_density = noise.sample(rng) - cfg.population.centre_gradient * dist;
            weights.push(log_density.exp() * (max.0 - min.0) * (max.1 - min.1));
            rects.push((format!("a{r:02}_{c:02}"), min, max));
        }
    }
    let counts = apportion(cfg.population.total, &weights);
    rects
        .into_iter()
        .zip(counts)
        .map(|((id, min, max), n)| AdminArea::new(id, rect_polygon(min, max), n as f64))
        .collect()
}

/// Concentric template: an office and touristic core, a university and
/// shopping ring, residential outskirts.
fn assign_landuse(cfg: &ScenarioConfig, grid: &GridTessellation, extent: (f64, f64), rng: &mut ChaCha8Rng) -> Vec<LandUse> {
    use geo::Centroid;
    let n = grid.len();
    let dist: Vec<f64> = grid
        .cells()
        .iter()
        .map(|c| {
            let p = c.polygon.centroid().expect("non-empty cell");
            (p.x() - 0.5 * extent.0).hypot(p.y() - 0.5 * extent.1)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    let count = |share: f64| (share * n as f64).round() as usize;
    let l = &cfg.landuse;
    let (n_off, n_tour, n_uni, n_shop) = (count(l.office), count(l.touristic), count(l.university), count(l.shopping));
    let mut out = vec![LandUse::Residential; n];
    let core_end = (n_off + n_tour).min(n);
    let ring_end = (core_end + n_uni + n_shop).min(n);
    let mut core = order[..core_end].to_vec();
    core.shuffle(rng);
    for (k, &c) in core.iter().enumerate() {
        out[c] = if k < n_tour { LandUse::Touristic } else { LandUse::Office };
    }
    let mut ring = order[core_end..ring_end].to_vec();
    ring.shuffle(rng);
    for (k, &c) in ring.iter().enumerate() {
        out[c] = if k < n_uni { LandUse::University } else { LandUse::Shopping };
    }
    out
}

pub fn generate_city(config: &ScenarioConfig, seed: u64) -> Result<SyntheticScenario> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CITY_STREAM);

    let (grid, extent) = build_grid(config, &mut rng)?;
    let admin = build_admin(config, extent, &mut rng)?;
    let census = census_to_grid(&grid, &admin)?;
    let landuse = assign_landuse(config, &grid, extent, &mut rng);

    let m = config.market_share;
    let population: Vec<f64> = census.values.iter().zip(grid.cells()).map(|(d, c)| d * c.surface_km2).collect();
    let subscribers = apportion((m * config.population.total as f64).round() as u64, &population);

    let b = &config.behaviour;
    let s = b.rate_noise_log_sigma;
    let noise = Normal::new(-0.5 * s * s, s).map_err(|e| Error::input(e.to_string()))?;
    let work_weights: Vec<f64> = landuse.iter().map(|l| WORK_WEIGHTS[l.index()]).collect();
    let workplaces = WeightedIndex::new(&work_weights).map_err(|e| Error::input(e.to_string()))?;

    let mut users = Vec::new();
    for (home, &n) in subscribers.iter().enumerate() {
        for _ in 0..n {
            let employed = rng.random::<f64>() < b.employed;
            let work = employed.then(|| workplaces.sample(&mut rng));
            users.push(Subscriber {
                home,
                work,
                activity: noise.sample(&mut rng).exp(),
                visitor: false,
            });
        }
    }
    for (cell, pop) in population.iter().enumerate() {
        let ratio = config.landuse.visitors.get(&landuse[cell]).copied().unwrap_or(0.0);
        let n = (ratio * m * pop).round() as usize;
        for _ in 0..n {
            users.push(Subscriber {
                home: cell,
                work: None,
                activity: noise.sample(&mut rng).exp(),
                visitor: true,
            });
        }
    }

    let mut scenario = SyntheticScenario {
        config: config.clone(),
        seed,
        grid,
        admin,
        census,
        landuse,
        users,
        profiles: config.profiles(),
        events: Vec::new(),
    };
    scenario.events = config.events.iter().map(|e| scenario.event_from_config(e)).collect::<Result<_>>()?;
    Ok(scenario)
}
