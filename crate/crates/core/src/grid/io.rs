//! Grid and administrative-area CSV files with WKT polygons.

use std::path::Path;

use geo::Polygon;
use wkt::{ToWkt, TryFromWkt};

use super::{AdminArea, Cell, GridTessellation, PopulationDensityMap};
use crate::csvio::{self, CsvOut};
use crate::error::{Error, Result};

pub const GRID_HEADER: [&str; 3] = ["cell_id", "wkt_polygon", "surface_km2"];
pub const ADMIN_HEADER: [&str; 4] = ["area_id", "wkt_polygon", "surface_km2", "population"];
pub const CENSUS_HEADER: [&str; 2] = ["cell_id", "rho"];

fn parse_polygon(id: &str, raw: &str) -> Result<Polygon<f64>> {
    Polygon::<f64>::try_from_wkt_str(raw).map_err(|e| Error::geometry(id, format!("bad WKT polygon: {e}")))
}

pub fn read_grid(path: &Path) -> Result<GridTessellation> {
    let mut cells = Vec::new();
    for rec in csvio::records(path, &GRID_HEADER)? {
        let rec = rec?;
        let id = csvio::field(&rec, 0, "cell_id", path)?.to_string();
        let poly = parse_polygon(&id, csvio::field(&rec, 1, "wkt_polygon", path)?)?;
        let surface: f64 = csvio::parse(&rec, 2, "surface_km2", path)?;
        cells.push(Cell::with_surface(id, poly, surface)?);
    }
    GridTessellation::validated(cells)
}

pub fn write_grid(path: &Path, grid: &GridTessellation) -> Result<()> {
    let mut out = CsvOut::create(path, &GRID_HEADER)?;
    for c in grid.cells() {
        out.row([c.id.clone(), c.polygon.wkt_string(), c.surface_km2.to_string()])?;
    }
    out.finish()
}

pub fn read_admin(path: &Path) -> Result<Vec<AdminArea>> {
    let mut areas = Vec::new();
    for rec in csvio::records(path, &ADMIN_HEADER)? {
        let rec = rec?;
        let id = csvio::field(&rec, 0, "area_id", path)?.to_string();
        let poly = parse_polygon(&id, csvio::field(&rec, 1, "wkt_polygon", path)?)?;
        let surface: f64 = csvio::parse(&rec, 2, "surface_km2", path)?;
        let population: f64 = csvio::parse(&rec, 3, "population", path)?;
        areas.push(AdminArea::with_surface(id, poly, surface, population)?);
    }
    Ok(areas)
}

pub fn write_admin(path: &Path, areas: &[AdminArea]) -> Result<()> {
    let mut out = CsvOut::create(path, &ADMIN_HEADER)?;
    for a in areas {
        out.row([
            a.id.clone(),
            a.polygon.wkt_string(),
            a.surface_km2.to_string(),
            a.population.to_string(),
        ])?;
    }
    out.finish()
}

/// Static density map, one row per cell.
pub fn write_density(path: &Path, grid: &GridTessellation, map: &PopulationDensityMap) -> Result<()> {
    let mut out = CsvOut::create(path, &CENSUS_HEADER)?;
    for (c, v) in grid.cells().iter().zip(&map.values) {
        out.row([c.id.clone(), v.to_string()])?;
    }
    out.finish()
}

pub fn read_density(path: &Path, grid: &GridTessellation) -> Result<PopulationDensityMap> {
    let mut values = vec![f64::NAN; grid.len()];
    for rec in csvio::records(path, &CENSUS_HEADER)? {
        let rec = rec?;
        let id = csvio::field(&rec, 0, "cell_id", path)?;
        let i = grid
            .position(id)
            .ok_or_else(|| Error::input(format!("{}: unknown cell id `{id}`", path.display())))?;
        values[i] = csvio::parse(&rec, 1, "rho", path)?;
    }
    if let Some(i) = values.iter().position(|v| v.is_nan()) {
        return Err(Error::input(format!(
            "{}: no density for cell `{}`",
            path.display(),
            grid.cells()[i].id
        )));
    }
    PopulationDensityMap::new(values, None)
}
