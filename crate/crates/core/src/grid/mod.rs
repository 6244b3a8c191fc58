//! Spatial tessellation, administrative areas and census-to-grid areal
//! interpolation.
//!
//! Coordinates are planar meters; surfaces are stored in km². A cell's
//! census density is the area-weighted share of every administrative area
//! it overlaps, assuming inhabitants are spread uniformly within an area:
//!
//! ```text
//! rho_i = (1 / S_i) * sum_j U_j * |S_i ∩ A_j| / A_j
//! ```

mod clip;
pub mod io;

use std::collections::HashMap;

use geo::{Area, BoundingRect, Coord, Polygon, Rect};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub(crate) use clip::shared_boundary_length;

/// Overlaps below this surface (km²) are numerical noise.
pub const OVERLAP_NOISE_FLOOR_KM2: f64 = 1e-9;

const M2_PER_KM2: f64 = 1e6;
const SURFACE_REL_TOL: f64 = 1e-6;

fn polygon_defect(poly: &Polygon<f64>) -> Option<String> {
    let ext = clip::ring_coords(poly.exterior());
    if let Some(d) = clip::ring_defect(&ext) {
        return Some(format!("exterior: {d}"));
    }
    for (k, hole) in poly.interiors().iter().enumerate() {
        if let Some(d) = clip::ring_defect(&clip::ring_coords(hole)) {
            return Some(format!("hole {k}: {d}"));
        }
    }
    if poly.unsigned_area() <= 0.0 {
        return Some("non-positive area".into());
    }
    None
}

fn check_polygon(id: &str, poly: &Polygon<f64>) -> Result<()> {
    match polygon_defect(poly) {
        Some(reason) => Err(Error::geometry(id, reason)),
        None => Ok(()),
    }
}

fn check_surface(id: &str, poly: &Polygon<f64>, surface_km2: f64) -> Result<()> {
    if !(surface_km2 > 0.0) {
        return Err(Error::geometry(id, format!("surface {surface_km2} km² is not positive")));
    }
    let computed = poly.unsigned_area() / M2_PER_KM2;
    if (computed - surface_km2).abs() > SURFACE_REL_TOL * surface_km2 {
        return Err(Error::geometry(
            id,
            format!("stored surface {surface_km2} km² differs from polygon area {computed} km²"),
        ));
    }
    Ok(())
}

/// A network cell of the tessellation.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: String,
    /// Planar polygon in meters.
    pub polygon: Polygon<f64>,
    /// Surface in km².
    pub surface_km2: f64,
}

impl Cell {
    /// Builds a cell whose surface is the polygon area.
    pub fn new(id: impl Into<String>, polygon: Polygon<f64>) -> Result<Self> {
        let id = id.into();
        check_polygon(&id, &polygon)?;
        let surface_km2 = polygon.unsigned_area() / M2_PER_KM2;
        Ok(Cell {
            id,
            polygon,
            surface_km2,
        })
    }

    /// Builds a cell with a stored surface, checked against the polygon area.
    pub fn with_surface(id: impl Into<String>, polygon: Polygon<f64>, surface_km2: f64) -> Result<Self> {
        let id = id.into();
        check_polygon(&id, &polygon)?;
        check_surface(&id, &polygon, surface_km2)?;
        Ok(Cell {
            id,
            polygon,
            surface_km2,
        })
    }

    /// Axis-aligned rectangle cell, coordinates in meters.
    pub fn rect(id: impl Into<String>, min: (f64, f64), max: (f64, f64)) -> Result<Self> {
        Cell::new(id, rect_polygon(min, max))
    }
}

pub fn rect_polygon(min: (f64, f64), max: (f64, f64)) -> Polygon<f64> {
    Rect::new(Coord { x: min.0, y: min.1 }, Coord { x: max.0, y: max.1 }).to_polygon()
}

/// An administrative census area.
#[derive(Debug, Clone, PartialEq)]
pub struct AdminArea {
    pub id: String,
    pub polygon: Polygon<f64>,
    /// Surface in km².
    pub surface_km2: f64,
    /// Number of inhabitants.
    pub population: f64,
}

impl AdminArea {
    pub fn new(id: impl Into<String>, polygon: Polygon<f64>, population: f64) -> Result<Self> {
        let id = id.into();
        check_polygon(&id, &polygon)?;
        if !(population >= 0.0) {
            return Err(Error::input(format!("area `{id}` has negative population {population}")));
        }
        let surface_km2 = polygon.unsigned_area() / M2_PER_KM2;
        Ok(AdminArea {
            id,
            polygon,
            surface_km2,
            population,
        })
    }

    pub fn with_surface(
        id: impl Into<String>,
        polygon: Polygon<f64>,
        surface_km2: f64,
        population: f64,
    ) -> Result<Self> {
        let id = id.into();
        check_polygon(&id, &polygon)?;
        if !(surface_km2 > 0.0) {
            return Err(Error::input(format!("area `{id}` has zero surface")));
        }
        check_surface(&id, &polygon, surface_km2)?;
        if !(population >= 0.0) {
            return Err(Error::input(format!("area `{id}` has negative population {population}")));
        }
        Ok(AdminArea {
            id,
            polygon,
            surface_km2,
            population,
        })
    }
}

/// Ordered collection of non-overlapping cells.
///
/// Construction does not enforce the tessellation invariants; call
/// [`validate_tessellation`] (or [`GridTessellation::validated`]) for that.
#[derive(Debug, Clone)]
pub struct GridTessellation {
    cells: Vec<Cell>,
    index: HashMap<String, usize>,
}

impl GridTessellation {
    pub fn new(cells: Vec<Cell>) -> Self {
        let mut index = HashMap::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            index.entry(c.id.clone()).or_insert(i);
        }
        GridTessellation { cells, index }
    }

    /// Builds the grid and fails on the first invariant violation.
    pub fn validated(cells: Vec<Cell>) -> Result<Self> {
        let grid = GridTessellation::new(cells);
        let report = validate_tessellation(&grid);
        if let Some(v) = report.violations.first() {
            return Err(Error::input(format!("invalid tessellation: {v}")));
        }
        Ok(grid)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn surfaces(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.surface_km2).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.cells.iter().map(|c| c.id.as_str())
    }

    /// Indices of cells whose interior intersects `polygon`.
    pub fn cells_intersecting(&self, polygon: &Polygon<f64>) -> Vec<usize> {
        let pieces = clip::convex_pieces(polygon);
        let bbox = polygon.bounding_rect();
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| bbox_overlap(bbox, c.polygon.bounding_rect()))
            .filter(|(_, c)| {
                clip::intersection_area_with_pieces(&pieces, &c.polygon) / M2_PER_KM2
                    > OVERLAP_NOISE_FLOOR_KM2
            })
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of cells sharing a boundary of positive length with cell `i`.
    pub fn neighbours(&self, i: usize) -> Vec<usize> {
        let target = &self.cells[i];
        let bbox = target.polygon.bounding_rect();
        self.cells
            .iter()
            .enumerate()
            .filter(|&(j, c)| j != i && bbox_touch(bbox, c.polygon.bounding_rect()))
            .filter(|(_, c)| shared_boundary_length(&target.polygon, &c.polygon, 1e-6) > 1e-6)
            .map(|(j, _)| j)
            .collect()
    }
}

fn bbox_overlap(a: Option<Rect<f64>>, b: Option<Rect<f64>>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            a.min().x < b.max().x && b.min().x < a.max().x && a.min().y < b.max().y && b.min().y < a.max().y
        }
        _ => false,
    }
}

fn bbox_touch(a: Option<Rect<f64>>, b: Option<Rect<f64>>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => {
            a.min().x <= b.max().x && b.min().x <= a.max().x && a.min().y <= b.max().y && b.min().y <= a.max().y
        }
        _ => false,
    }
}

/// Per-cell population density, aligned with the grid's cell order.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationDensityMap {
    /// Inhabitants per km², one value per grid cell.
    pub values: Vec<f64>,
    /// Slot start (seconds) for dynamic maps.
    pub timestamp: Option<i64>,
}

impl PopulationDensityMap {
    pub fn new(values: Vec<f64>, timestamp: Option<i64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::input(format!("density {v} is negative or NaN")));
        }
        Ok(PopulationDensityMap { values, timestamp })
    }

    /// Total population: Σ ρ_i S_i.
    pub fn total(&self, grid: &GridTessellation) -> f64 {
        self.values
            .iter()
            .zip(grid.cells())
            .map(|(r, c)| r * c.surface_km2)
            .sum()
    }
}

struct PreparedArea<'a> {
    area: &'a AdminArea,
    bbox: Option<Rect<f64>>,
}

fn prepare_areas(areas: &[AdminArea]) -> Result<Vec<PreparedArea<'_>>> {
    areas
        .iter()
        .map(|a| {
            check_polygon(&a.id, &a.polygon)?;
            Ok(PreparedArea {
                area: a,
                bbox: a.polygon.bounding_rect(),
            })
        })
        .collect()
}

fn overlaps_prepared(cell: &Cell, areas: &[PreparedArea<'_>]) -> Vec<(usize, f64)> {
    let pieces = clip::convex_pieces(&cell.polygon);
    let bbox = cell.polygon.bounding_rect();
    let mut out = Vec::new();
    for (j, p) in areas.iter().enumerate() {
        if !bbox_overlap(bbox, p.bbox) {
            continue;
        }
        let km2 = clip::intersection_area_with_pieces(&pieces, &p.area.polygon) / M2_PER_KM2;
        if km2 > OVERLAP_NOISE_FLOOR_KM2 {
            out.push((j, km2));
        }
    }
    out
}

/// Overlap surface (km²) between a cell and each administrative area it meets.
pub fn intersect_area(cell: &Cell, areas: &[AdminArea]) -> Result<Vec<(String, f64)>> {
    check_polygon(&cell.id, &cell.polygon)?;
    let prepared = prepare_areas(areas)?;
    Ok(overlaps_prepared(cell, &prepared)
        .into_iter()
        .map(|(j, a)| (areas[j].id.clone(), a))
        .collect())
}

/// Areal interpolation of census counts onto the grid.
pub fn census_to_grid(grid: &GridTessellation, areas: &[AdminArea]) -> Result<PopulationDensityMap> {
    if let Some(a) = areas.iter().find(|a| !(a.surface_km2 > 0.0)) {
        return Err(Error::input(format!("area `{}` has zero surface", a.id)));
    }
    for c in grid.cells() {
        check_polygon(&c.id, &c.polygon)?;
    }
    let prepared = prepare_areas(areas)?;
    let values: Vec<f64> = grid
        .cells()
        .par_iter()
        .map(|cell| {
            let inhabitants: f64 = overlaps_prepared(cell, &prepared)
                .into_iter()
                .map(|(j, overlap)| {
                    let a = prepared[j].area;
                    a.population * overlap / a.surface_km2
                })
                .sum();
            inhabitants / cell.surface_km2
        })
        .collect();
    PopulationDensityMap::new(values, None)
}

/// One broken tessellation invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId { id: String },
    Degenerate { id: String, reason: String },
    SurfaceMismatch { id: String, stored_km2: f64, computed_km2: f64 },
    Overlap { first: String, second: String, area_km2: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate cell id `{id}`"),
            Violation::Degenerate { id, reason } => write!(f, "degenerate cell `{id}`: {reason}"),
            Violation::SurfaceMismatch {
                id,
                stored_km2,
                computed_km2,
            } => write!(f, "cell `{id}` stores {stored_km2} km² but its polygon covers {computed_km2} km²"),
            Violation::Overlap {
                first,
                second,
                area_km2,
            } => write!(f, "cells `{first}` and `{second}` overlap by {area_km2} km²"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Reports overlapping cells, duplicate ids and degenerate polygons.
pub fn validate_tessellation(grid: &GridTessellation) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashMap::new();
    for c in grid.cells() {
        let n = seen.entry(c.id.as_str()).or_insert(0usize);
        *n += 1;
        if *n == 2 {
            violations.push(Violation::DuplicateId { id: c.id.clone() });
        }
    }

    let mut sound = vec![true; grid.len()];
    for (i, c) in grid.cells().iter().enumerate() {
        if let Some(reason) = polygon_defect(&c.polygon) {
            violations.push(Violation::Degenerate {
                id: c.id.clone(),
                reason,
            });
            sound[i] = false;
            continue;
        }
        let computed = c.polygon.unsigned_area() / M2_PER_KM2;
        if !(c.surface_km2 > 0.0) || (computed - c.surface_km2).abs() > SURFACE_REL_TOL * c.surface_km2 {
            violations.push(Violation::SurfaceMismatch {
                id: c.id.clone(),
                stored_km2: c.surface_km2,
                computed_km2: computed,
            });
        }
    }

    let boxes: Vec<Option<Rect<f64>>> = grid.cells().iter().map(|c| c.polygon.bounding_rect()).collect();
    let pieces: Vec<Vec<Vec<Coord<f64>>>> = grid
        .cells()
        .iter()
        .zip(&sound)
        .map(|(c, ok)| if *ok { clip::convex_pieces(&c.polygon) } else { Vec::new() })
        .collect();
    let overlaps: Vec<Violation> = (0..grid.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut found = Vec::new();
            if !sound[i] {
                return found;
            }
            for j in (i + 1)..grid.len() {
                if !sound[j] || !bbox_overlap(boxes[i], boxes[j]) {
                    continue;
                }
                let km2 = clip::intersection_area_with_pieces(&pieces[i], &grid.cells()[j].polygon) / M2_PER_KM2;
                if km2 > OVERLAP_NOISE_FLOOR_KM2 {
                    found.push(Violation::Overlap {
                        first: grid.cells()[i].id.clone(),
                        second: grid.cells()[j].id.clone(),
                        area_km2: km2,
                    });
                }
            }
            found
        })
        .collect();
    violations.extend(overlaps);
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KM: f64 = 1000.0;

    fn square_km(id: &str, x: f64, y: f64, side: f64) -> Cell {
        Cell::rect(id, (x * KM, y * KM), ((x + side) * KM, (y + side) * KM)).unwrap()
    }

    fn area_km(id: &str, min: (f64, f64), max: (f64, f64), pop: f64) -> AdminArea {
        AdminArea::new(id, rect_polygon((min.0 * KM, min.1 * KM), (max.0 * KM, max.1 * KM)), pop).unwrap()
    }

    #[test]
    fn cell_inside_one_area() {
        let cell = square_km("c", 1.0, 1.0, 1.0);
        let areas = vec![area_km("a", (0.0, 0.0), (4.0, 4.0), 10.0)];
        let ov = intersect_area(&cell, &areas).unwrap();
        assert_eq!(ov.len(), 1);
        assert_eq!(ov[0].0, "a");
        assert!((ov[0].1 - cell.surface_km2).abs() < 1e-12);
    }

    #[test]
    fn disjoint_cell() {
        let cell = square_km("c", 10.0, 10.0, 1.0);
        let areas = vec![area_km("a", (0.0, 0.0), (4.0, 4.0), 10.0)];
        assert!(intersect_area(&cell, &areas).unwrap().is_empty());
    }

    #[test]
    fn straddling_two_half_planes() {
        let cell = square_km("c", 0.0, 0.0, 1.0);
        let areas = vec![
            area_km("left", (-5.0, -5.0), (0.5, 5.0), 0.0),
            area_km("right", (0.5, -5.0), (5.0, 5.0), 0.0),
        ];
        let ov = intersect_area(&cell, &areas).unwrap();
        assert_eq!(ov.len(), 2);
        for (_, a) in ov {
            assert!((a - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn orientation_does_not_matter() {
        let cell = square_km("c", 0.3, 0.2, 1.0);
        let mut reversed = cell.clone();
        reversed.polygon.exterior_mut(|ls| ls.0.reverse());
        let areas = vec![
            area_km("a", (0.0, 0.0), (0.8, 3.0), 5.0),
            area_km("b", (0.8, 0.0), (3.0, 3.0), 5.0),
        ];
        assert_eq!(intersect_area(&cell, &areas).unwrap(), intersect_area(&reversed, &areas).unwrap());
    }

    #[test]
    fn invalid_polygon_names_id() {
        let bow = Polygon::new(
            geo::LineString::from(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]),
            vec![],
        );
        let cell = Cell {
            id: "bad-cell".into(),
            polygon: bow,
            surface_km2: 1.0,
        };
        let err = intersect_area(&cell, &[]).unwrap_err();
        assert!(err.to_string().contains("bad-cell"), "{err}");
    }

    #[test]
    fn density_single_area() {
        // S_i = 1 km², single area U=4000 over 4 km², overlap 1 km²
        let grid = GridTessellation::new(vec![square_km("c", 0.0, 0.0, 1.0)]);
        let areas = vec![area_km("a", (0.0, 0.0), (2.0, 2.0), 4000.0)];
        let map = census_to_grid(&grid, &areas).unwrap();
        assert!((map.values[0] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn density_two_areas() {
        // S_i = 2 km²; overlaps (U=1000, A=2, ∩=1) and (U=3000, A=3, ∩=1) -> 750
        let cell = Cell::rect("c", (0.0, 0.0), (2.0 * KM, 1.0 * KM)).unwrap();
        let grid = GridTessellation::new(vec![cell]);
        let areas = vec![
            area_km("a", (0.0, 0.0), (1.0, 2.0), 1000.0),
            area_km("b", (1.0, 0.0), (2.0, 3.0), 3000.0),
        ];
        let map = census_to_grid(&grid, &areas).unwrap();
        assert!((map.values[0] - 750.0).abs() < 1e-9);
    }

    #[test]
    fn density_no_overlap_is_zero() {
        let grid = GridTessellation::new(vec![square_km("c", 50.0, 50.0, 1.0)]);
        let areas = vec![area_km("a", (0.0, 0.0), (2.0, 2.0), 4000.0)];
        assert_eq!(census_to_grid(&grid, &areas).unwrap().values, vec![0.0]);
    }

    #[test]
    fn zero_surface_area_rejected() {
        let grid = GridTessellation::new(vec![square_km("c", 0.0, 0.0, 1.0)]);
        let mut a = area_km("a", (0.0, 0.0), (2.0, 2.0), 4000.0);
        a.surface_km2 = 0.0;
        assert!(matches!(census_to_grid(&grid, &[a]), Err(Error::Input(_))));
    }

    fn two_by_two() -> Vec<Cell> {
        vec![
            square_km("a", 0.0, 0.0, 1.0),
            square_km("b", 1.0, 0.0, 1.0),
            square_km("c", 0.0, 1.0, 1.0),
            square_km("d", 1.0, 1.0, 1.0),
        ]
    }

    #[test]
    fn valid_grid_has_empty_report() {
        let grid = GridTessellation::new(two_by_two());
        assert!(validate_tessellation(&grid).is_valid());
    }

    #[test]
    fn duplicated_id_reported_once() {
        let mut cells = two_by_two();
        cells[3].id = "a".into();
        let report = validate_tessellation(&GridTessellation::new(cells));
        assert_eq!(report.violations, vec![Violation::DuplicateId { id: "a".into() }]);
    }

    #[test]
    fn overlapping_cells_report_shared_area() {
        // second square shifted by (0.5, 0.25) km: overlap 0.5 × 0.75 = 0.375 km²
        let cells = vec![square_km("p", 0.0, 0.0, 1.0), square_km("q", 0.5, 0.25, 1.0)];
        let report = validate_tessellation(&GridTessellation::new(cells));
        assert_eq!(report.violations.len(), 1);
        match &report.violations[0] {
            Violation::Overlap { area_km2, .. } => assert!((area_km2 - 0.375).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn neighbours_need_shared_edge() {
        let grid = GridTessellation::new(two_by_two());
        assert_eq!(grid.neighbours(0), vec![1, 2]);
        assert_eq!(grid.neighbours(3), vec![1, 2]);
    }
}
