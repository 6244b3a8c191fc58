//! Subcommand bodies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use popgrid::dynamic::io::{
    read_events as read_event_specs, read_gamma, read_truth, write_attendance, write_dynamic, write_estimates,
    write_events as write_event_specs, write_truth,
};
use popgrid::dynamic::{
    activity_level, compare_models, estimate_attendance, estimate_dynamic_series, fit_landuse_powerlaws,
    fit_lambda_lines, overnight_pairs, xu_attendance, zscore, ActivityKind, AttendanceConfig, EventSpec,
    MultivariateParams,
};
use popgrid::filters::{
    apply_day_filter, apply_time_filter, daily_missing_fractions, rank_metadata_classes, FilterConfig,
};
use popgrid::grid::io::{read_admin, read_density, read_grid, write_admin, write_density, write_grid};
use popgrid::grid::{census_to_grid, GridTessellation, PopulationDensityMap};
use popgrid::landuse::{
    classify_cells, cluster_signatures, name_clusters_by_reference, read_labels, read_signatures, weekly_signatures,
    write_labels, write_signatures, LandUse, WeeklySignature,
};
use popgrid::metadata::io::{
    read_events, read_presence, read_volumes, read_volumes_spanning, write_presence, write_volumes, EVENTS_HEADER,
};
use popgrid::metadata::{
    day_start, PresenceSeries, PresenceTracker, SlotAxis, SlotSeries, VolumeCounter, VolumeSeries,
};
use popgrid::regress::io::{write_fits, write_outliers, FitRecord};
use popgrid::regress::{cross_validate, day_mean_density, train_static, training_metrics};
use popgrid::synth::{generate_city, sanitize, simulate_aggregates, ScenarioConfig};
use popgrid::CsvOut;

use crate::config::PipelineConfig;
use crate::output::Output;
use crate::CliError;

pub struct Context {
    pub cfg: PipelineConfig,
    pub filter: FilterConfig,
    pub out: Output,
}

impl Context {
    pub fn new(cfg: PipelineConfig, seed: u64, out: &Path, command: &'static str) -> Result<Self, CliError> {
        let filter = match &cfg.filter {
            Some(p) => FilterConfig::read(p)?,
            None => FilterConfig::default(),
        };
        let hashed = format!("{}\n# filter\n{}", cfg.to_toml(), filter.to_text());
        let out = Output::create(out, command, &hashed, seed)?;
        Ok(Context { cfg, filter, out })
    }

    fn seed(&self) -> u64 {
        self.out.seed()
    }

    fn grid(&self) -> Result<GridTessellation, CliError> {
        Ok(read_grid(need(&self.cfg.inputs.grid, "grid file", "grid", "grid")?)?)
    }

    fn presence(&self, grid: &GridTessellation) -> Result<PresenceSeries, CliError> {
        let p = need(&self.cfg.inputs.presence, "presence file", "presence", "presence")?;
        Ok(read_presence(p, grid, self.cfg.slot_s)?)
    }

    /// Volumes on the presence axis.
    fn volumes(&self, grid: &GridTessellation, axis: &SlotAxis) -> Result<VolumeSeries, CliError> {
        let p = need(&self.cfg.inputs.volumes, "volumes file", "volumes", "volumes")?;
        Ok(read_volumes(p, grid, axis)?)
    }

    fn census(&self, grid: &GridTessellation) -> Result<PopulationDensityMap, CliError> {
        Ok(read_density(need(&self.cfg.inputs.census, "census density file", "census", "census")?, grid)?)
    }

    fn labels(&self, grid: &GridTessellation) -> Result<Vec<LandUse>, CliError> {
        Ok(read_labels(need(&self.cfg.inputs.labels, "land-use labels file", "labels", "labels")?, grid)?)
    }

    fn params(&self) -> Result<MultivariateParams, CliError> {
        Ok(MultivariateParams::read(need(&self.cfg.inputs.params, "model parameters file", "params", "params")?)?)
    }

    fn event_specs(&self, grid: &GridTessellation) -> Result<Vec<EventSpec>, CliError> {
        let p = need(&self.cfg.inputs.event_specs, "event list", "event-specs", "event_specs")?;
        Ok(read_event_specs(p, grid)?)
    }
}

fn need<'a>(
    path: &'a Option<PathBuf>,
    what: &'static str,
    flag: &'static str,
    key: &'static str,
) -> Result<&'a Path, CliError> {
    path.as_deref().ok_or(CliError::Missing { what, flag, key })
}

pub fn gridify(ctx: &mut Context) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let admin = read_admin(need(&ctx.cfg.inputs.admin, "admin areas file", "admin", "admin")?)?;
    let map = census_to_grid(&grid, &admin)?;
    write_density(&ctx.out.file("census.csv"), &grid, &map)?;
    Ok(())
}

fn event_span(path: &Path, grid: &GridTessellation) -> Result<(i64, i64), CliError> {
    let mut span = (i64::MAX, i64::MIN);
    for e in read_events(path, grid)? {
        let t = e?.time;
        span = (span.0.min(t), span.1.max(t));
    }
    if span.0 > span.1 {
        return Err(popgrid::Error::InsufficientData(format!("{}: no events", path.display())).into());
    }
    Ok(span)
}

pub fn presence(ctx: &mut Context, period: Option<(NaiveDate, usize)>, k: Option<u32>) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let path = need(&ctx.cfg.inputs.events, "events file", "events", "events")?;
    let slot_s = ctx.cfg.slot_s;
    if slot_s <= 0 || 86_400 % slot_s != 0 {
        return Err(CliError::Config(format!("slot_s = {slot_s} must divide a day")));
    }
    let axis = match period {
        Some((first, days)) => SlotAxis::days(first, days, slot_s),
        None => {
            let (lo, hi) = event_span(path, &grid)?;
            let start = lo.div_euclid(slot_s) * slot_s;
            SlotAxis::contiguous(start, slot_s, ((hi - start) / slot_s + 1) as usize)
        }
    };
    let start = axis.starts()[0];
    let end = start + axis.len() as i64 * slot_s;
    let mut tracker = PresenceTracker::new(&grid, axis.clone())?;
    let mut counter = VolumeCounter::new(&grid, axis)?;
    for e in read_events(path, &grid)? {
        let e = e?;
        if e.time >= end {
            break;
        }
        tracker.push(&e)?;
        if e.time >= start {
            counter.push(&e)?;
        }
    }
    let presence = sanitize(&tracker.finish()?, k.unwrap_or(ctx.cfg.sanitize_k))?;
    write_presence(&ctx.out.file("presence.csv"), &grid, &presence)?;
    write_volumes(&ctx.out.file("volumes.csv"), &grid, &counter.finish())?;
    Ok(())
}

pub fn filter(ctx: &mut Context) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let presence = ctx.presence(&grid)?;
    let volumes = ctx.volumes(&grid, presence.axis())?;
    let census = ctx.census(&grid)?;
    let fc = &ctx.filter;
    let missing = daily_missing_fractions(&presence, fc.window);
    let (p_days, log) = apply_day_filter(&presence, fc, &missing);
    let (v_days, _) = apply_day_filter(&volumes, fc, &missing);
    let p_static = apply_time_filter(&p_days, fc);
    let v_static = apply_time_filter(&v_days, fc);
    let rank = rank_metadata_classes(&v_static, &p_static, &census)?;

    write_presence(&ctx.out.file("presence_days.csv"), &grid, &p_days)?;
    write_volumes(&ctx.out.file("volumes_days.csv"), &grid, &v_days)?;
    write_presence(&ctx.out.file("presence_static.csv"), &grid, &p_static)?;
    let mut out = CsvOut::create(&ctx.out.file("missing.csv"), &["day", "missing_fraction"])?;
    for (d, f) in &missing {
        out.row([d.to_string(), f.to_string()])?;
    }
    out.finish()?;
    let mut out = CsvOut::create(&ctx.out.file("exclusions.csv"), &["day", "reasons"])?;
    for e in &log {
        let reasons: Vec<String> = e.reasons.iter().map(|r| r.to_string()).collect();
        out.row([e.day.to_string(), reasons.join(";")])?;
    }
    out.finish()?;
    let mut out = CsvOut::create(&ctx.out.file("rank.csv"), &["class", "r"])?;
    for (class, r) in &rank {
        out.row([class.to_string(), r.to_string()])?;
    }
    out.finish()?;
    Ok(())
}

pub fn landuse(ctx: &mut Context, clusters: Option<usize>) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let vpath = need(&ctx.cfg.inputs.volumes, "volumes file", "volumes", "volumes")?;
    let volumes = read_volumes_spanning(vpath, &grid, ctx.cfg.slot_s)?;
    let sigs: Vec<WeeklySignature> = weekly_signatures(&volumes).into_iter().collect::<popgrid::Result<_>>()?;
    let ids: Vec<&str> = grid.ids().collect();
    write_signatures(
        &ctx.out.file("signatures.csv"),
        sigs.iter().map(|s| (ids[s.cell], s.values.as_slice())),
    )?;

    if let Some(path) = &ctx.cfg.inputs.signatures {
        let characteristic = read_signatures(path)?
            .into_iter()
            .map(|(id, v)| Ok((id.parse::<LandUse>()?, v)))
            .collect::<popgrid::Result<Vec<_>>>()?;
        let classes = classify_cells(&sigs, &characteristic)?;
        let labels: Vec<LandUse> = classes.iter().map(|c| c.label).collect();
        write_labels(&ctx.out.file("labels.csv"), &grid, &labels)?;
        let mut out = CsvOut::create(&ctx.out.file("classification.csv"), &["cell_id", "land_use", "r", "low_confidence"])?;
        for (id, c) in ids.iter().zip(&classes) {
            out.row([id.to_string(), c.label.to_string(), c.r.to_string(), c.low_confidence.to_string()])?;
        }
        return Ok(out.finish()?);
    }

    let k = clusters.unwrap_or(ctx.cfg.clusters);
    let clustering = cluster_signatures(&sigs, k)?;
    let mut out = CsvOut::create(&ctx.out.file("clusters.csv"), &["cell_id", "cluster", "fallback"])?;
    for ((id, l), fb) in ids.iter().zip(&clustering.labels).zip(&clustering.fallback) {
        out.row([id.to_string(), l.to_string(), fb.to_string()])?;
    }
    out.finish()?;
    let names: Vec<String> = match &ctx.cfg.inputs.labels {
        Some(_) => {
            let reference = ctx.labels(&grid)?;
            let named = name_clusters_by_reference(&clustering.labels, k, &reference)?;
            let labels: Vec<LandUse> = clustering.labels.iter().map(|&l| named[l]).collect();
            write_labels(&ctx.out.file("labels.csv"), &grid, &labels)?;
            named.iter().map(|l| l.to_string()).collect()
        }
        None => (0..k).map(|c| format!("cluster{c}")).collect(),
    };
    write_signatures(
        &ctx.out.file("characteristic.csv"),
        names.iter().map(String::as_str).zip(clustering.characteristic.iter().map(Vec::as_slice)),
    )?;
    Ok(())
}

pub fn fit_static(ctx: &mut Context, only: Option<LandUse>) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let presence = ctx.presence(&grid)?;
    let census = ctx.census(&grid)?;
    let eligible: Option<Vec<bool>> = match only {
        Some(l) => Some(ctx.labels(&grid)?.iter().map(|x| *x == l).collect()),
        None => None,
    };
    let cv_cfg = ctx.cfg.cv(ctx.seed());
    let days = presence.axis().dates();
    let model = train_static(&presence, &census.values, &days, eligible.as_deref(), &cv_cfg)?;
    let sigma = day_mean_density(&presence, &days);
    let metrics = training_metrics(&model.fit, &sigma, &census.values)?;
    write_fits(&ctx.out.file("fit.csv"), &[FitRecord::new(&model.fit, &metrics)])?;
    write_outliers(&ctx.out.file("outliers.csv"), &grid, &model.persistent_outliers)?;

    let cv = cross_validate(&presence, &census.values, eligible.as_deref(), &cv_cfg)?;
    let folds: Vec<FitRecord> = cv.folds.iter().map(|f| FitRecord::new(&f.model.fit, &f.test)).collect();
    write_fits(&ctx.out.file("cv.csv"), &folds)?;
    Ok(())
}

pub fn fit_dynamic(ctx: &mut Context, kind: Option<ActivityKind>) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let presence = ctx.presence(&grid)?;
    let volumes = ctx.volumes(&grid, presence.axis())?;
    let census = ctx.census(&grid)?;
    let kind = match kind {
        Some(k) => k,
        None => ctx.cfg.activity.parse()?,
    };
    let activity = activity_level(&volumes, &presence, kind)?;
    let [h0, h1] = ctx.cfg.overnight_hours;
    let pairs = overnight_pairs(&presence, &activity, &census.values, None, (h0, h1), &ctx.cfg.ransac(ctx.seed()))?;
    let params = fit_lambda_lines(&pairs, kind)?;
    params.write(&ctx.out.file("params.txt"))?;
    let mut out = CsvOut::create(&ctx.out.file("pairs.csv"), &["lambda", "alpha", "beta"])?;
    for p in &pairs {
        out.row([p.lambda.to_string(), p.alpha.to_string(), p.beta.to_string()])?;
    }
    out.finish()?;
    Ok(())
}

pub fn estimate(ctx: &mut Context) -> Result<(), CliError> {
    let params = ctx.params()?;
    let grid = ctx.grid()?;
    let presence = ctx.presence(&grid)?;
    let volumes = ctx.volumes(&grid, presence.axis())?;
    let activity = activity_level(&volumes, &presence, params.kind)?;
    let series = estimate_dynamic_series(&presence, &activity, &params)?;
    let z = zscore(&series.rho_hat, series.n_cells)?;
    write_dynamic(&ctx.out.file("dynamic.csv"), &grid, &series, &z)?;
    Ok(())
}

fn other_days(events: &[EventSpec], k: usize) -> Vec<NaiveDate> {
    events.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, e)| e.day()).collect()
}

pub fn attendance(ctx: &mut Context, paper_eq19: bool) -> Result<(), CliError> {
    let params = ctx.params()?;
    let grid = ctx.grid()?;
    let events = ctx.event_specs(&grid)?;
    let presence = ctx.presence(&grid)?;
    let volumes = ctx.volumes(&grid, presence.axis())?;
    let activity = activity_level(&volumes, &presence, params.kind)?;
    let cfg = AttendanceConfig {
        paper_eq19,
        ..AttendanceConfig::default()
    };
    let estimates = events
        .iter()
        .enumerate()
        .map(|(k, e)| estimate_attendance(e, &other_days(&events, k), &presence, &activity, &params, &grid, &cfg))
        .collect::<popgrid::Result<Vec<_>>>()?;
    write_attendance(&ctx.out.file("attendance.csv"), &estimates)?;
    Ok(())
}

pub fn baseline_xu(ctx: &mut Context) -> Result<(), CliError> {
    let grid = ctx.grid()?;
    let events = ctx.event_specs(&grid)?;
    let presence = ctx.presence(&grid)?;
    let census = ctx.census(&grid)?;
    let labels = ctx.labels(&grid)?;
    let missing = daily_missing_fractions(&presence, ctx.filter.window);
    let (kept, _) = apply_day_filter(&presence, &ctx.filter, &missing);
    let night = apply_time_filter(&kept, &ctx.filter);
    let sigma = day_mean_density(&night, &night.axis().dates());
    let fits = fit_landuse_powerlaws(&sigma, &census.values, &labels, &ctx.cfg.ransac(ctx.seed()))?;
    let mut out = CsvOut::create(&ctx.out.file("xu_fits.csv"), &["land_use", "alpha", "beta"])?;
    for (l, (a, b)) in &fits {
        out.row([l.to_string(), a.to_string(), b.to_string()])?;
    }
    out.finish()?;
    let cfg = AttendanceConfig::default();
    let rows = events
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let g = xu_attendance(e, &other_days(&events, k), &presence, &labels, &fits, &census.values, &grid, &cfg)?;
            Ok((e.id.clone(), g))
        })
        .collect::<popgrid::Result<Vec<_>>>()?;
    write_estimates(&ctx.out.file("baseline.csv"), &rows)?;
    Ok(())
}

fn lookup(rows: Vec<(String, f64)>, what: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for (id, v) in rows {
        if map.insert(id.clone(), v).is_some() {
            return Err(popgrid::Error::Input(format!("{what}: event `{id}` listed twice")).into());
        }
    }
    Ok(map)
}

pub fn compare(ctx: &mut Context) -> Result<(), CliError> {
    let truth = read_truth(need(&ctx.cfg.inputs.truth, "truth file", "truth", "truth")?)?;
    let multi = lookup(
        read_gamma(need(&ctx.cfg.inputs.estimates, "attendance estimates", "estimates", "estimates")?)?,
        "estimates",
    )?;
    let base = lookup(
        read_gamma(need(&ctx.cfg.inputs.baseline, "baseline estimates", "baseline", "baseline")?)?,
        "baseline",
    )?;
    let mut ids = Vec::new();
    let (mut t, mut m, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for (id, v) in truth {
        let (Some(x), Some(y)) = (multi.get(&id), base.get(&id)) else {
            return Err(popgrid::Error::Input(format!("event `{id}` lacks an estimate or a baseline")).into());
        };
        ids.push(id);
        t.push(v);
        m.push(*x);
        b.push(*y);
    }
    let cmp = compare_models(&t, &m, &b)?;
    let mut out = CsvOut::create(
        &ctx.out.file("comparison.csv"),
        &["event_id", "truth", "multivariate", "baseline", "rel_multivariate", "rel_baseline", "ratio"],
    )?;
    for (id, (e, (x, y))) in ids.iter().zip(cmp.events.iter().zip(m.iter().zip(&b))) {
        out.row([
            id.clone(),
            e.truth.to_string(),
            x.to_string(),
            y.to_string(),
            e.rel_multi.to_string(),
            e.rel_base.to_string(),
            e.ratio.to_string(),
        ])?;
    }
    out.finish()?;
    let pct = |v: &[f64; 5]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let summary = format!(
        "events = {}\npercentiles = 5,25,50,75,95\nabs_rel_multivariate_pct = {}\nabs_rel_baseline_pct = {}\nmedian_ratio = {}\nmann_whitney_u = {}\nz = {}\np_value = {}\n",
        cmp.events.len(),
        pct(&cmp.rel_multi_pct),
        pct(&cmp.rel_base_pct),
        cmp.median_ratio(),
        cmp.test.u,
        cmp.test.z,
        cmp.test.p_value
    );
    let path = ctx.out.file("summary.txt");
    std::fs::write(&path, summary).map_err(|e| CliError::io(&path, e))?;
    Ok(())
}

pub fn simulate(config: Option<&Path>, seed: Option<u64>, out_dir: &Path, skip_events: bool) -> Result<Vec<PathBuf>, CliError> {
    let cfg = match config {
        Some(p) => ScenarioConfig::read(p)?,
        None => ScenarioConfig::default(),
    };
    let seed = seed.unwrap_or(cfg.seed);
    let mut out = Output::create(out_dir, "simulate", &cfg.to_toml(), seed)?;
    let s = generate_city(&cfg, seed)?;
    write_grid(&out.file("grid.csv"), &s.grid)?;
    write_admin(&out.file("admin.csv"), &s.admin)?;
    write_density(&out.file("census.csv"), &s.grid, &s.census)?;
    write_labels(&out.file("labels.csv"), &s.grid, &s.landuse)?;

    let mut stream = if skip_events {
        None
    } else {
        Some(CsvOut::create(&out.file("events.csv"), &EVENTS_HEADER)?)
    };
    let ids: Vec<&str> = s.grid.ids().collect();
    let data = simulate_aggregates(&s, |day| {
        if let Some(w) = stream.as_mut() {
            for e in &day.events {
                w.row([e.device.0.to_string(), e.time.to_string(), ids[e.cell].to_string(), e.kind.to_string()])?;
            }
        }
        Ok(())
    })?;
    if let Some(w) = stream {
        w.finish()?;
    }
    let presence = sanitize(&data.presence, cfg.sanitize_k)?;
    write_presence(&out.file("presence.csv"), &s.grid, &presence)?;
    write_volumes(&out.file("volumes.csv"), &s.grid, &data.volumes)?;

    let n = s.grid.len();
    let mut occ = CsvOut::create(&out.file("occupancy.csv"), &["cell_id", "slot_start_s", "devices", "rho_true"])?;
    for (slot, start) in data.record.axis.starts().iter().enumerate() {
        let truth = data.record.truth_density(&s, slot);
        for c in 0..n {
            occ.row([
                ids[c].to_string(),
                start.to_string(),
                data.record.physical[slot * n + c].to_string(),
                truth[c].to_string(),
            ])?;
        }
    }
    occ.finish()?;

    if !s.events.is_empty() {
        let specs: Vec<EventSpec> = s.events.iter().map(|e| e.spec()).collect();
        write_event_specs(&out.file("event_specs.csv"), &s.grid, &specs)?;
        let rows: Vec<(String, f64)> = s.events.iter().map(|e| (e.id.clone(), e.attendees as f64)).collect();
        write_truth(&out.file("truth.csv"), &rows)?;
        let mut w = CsvOut::create(&out.file("attendance_truth.csv"), &["event_id", "slot_start_s", "at_venue"])?;
        for t in &data.record.attendance {
            for (start, k) in t.slot_starts.iter().zip(&t.at_venue) {
                w.row([t.event_id.clone(), start.to_string(), k.to_string()])?;
            }
        }
        w.finish()?;
    }
    let first = day_start(cfg.start_date);
    let period = format!("start_s = {first}\ndays = {}\nslot_s = {}\n", cfg.days, cfg.slot_s);
    let path = out.file("period.txt");
    std::fs::write(&path, period).map_err(|e| CliError::io(&path, e))?;
    out.finish()
}
