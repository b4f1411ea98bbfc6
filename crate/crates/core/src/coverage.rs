//! Coverage rasters: a model evaluated at every cell center of a grid.
//!
//! Cells closer to the transmitter than the 1 m reference distance are
//! evaluated at exactly 1 m (their walls are still counted), which keeps
//! every raster value finite.
//!
//! Storage is row-major with row 0 at `min_y`. CSV export keeps that order;
//! PGM export flips it so the top image row is `max_y`.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::floorplan::{classify, FloorPlan, Point2D, Segment, WallHit, GEOMETRY_EPSILON_M};
use crate::pathloss::{
    evaluate, predict_rss, LinkGeometry, Model, ModelParams, PathLossError, REFERENCE_DISTANCE_M,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("invalid grid: {0}")]
    InvalidSpec(String),
    #[error("PGM bounds require hi > lo (lo = {lo}, hi = {hi})")]
    InvalidBounds { lo: f64, hi: f64 },
    #[error("unknown quantity `{0}` (expected pl or rss)")]
    UnknownQuantity(String),
    #[error("cell ({col}, {row}): {source}")]
    Cell {
        col: usize,
        row: usize,
        #[source]
        source: PathLossError,
    },
    #[error(transparent)]
    Plan(#[from] PathLossError),
    #[error("malformed grid CSV at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
    pub resolution_m: f64,
}

impl GridSpec {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64, resolution_m: f64) -> Result<Self, CoverageError> {
        let spec = Self { min_x, min_y, max_x, max_y, resolution_m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let all = [self.min_x, self.min_y, self.max_x, self.max_y, self.resolution_m];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(CoverageError::InvalidSpec("non-finite bound or resolution".into()));
        }
        if self.max_x <= self.min_x || self.max_y <= self.min_y {
            return Err(CoverageError::InvalidSpec(format!(
                "empty bbox ({}, {}) - ({}, {})",
                self.min_x, self.min_y, self.max_x, self.max_y
            )));
        }
        if self.resolution_m <= 0.0 {
            return Err(CoverageError::InvalidSpec(format!(
                "resolution must be > 0, got {}",
                self.resolution_m
            )));
        }
        Ok(())
    }

    fn cells_along(&self, span: f64) -> usize {
        // Spans that are whole multiples of the resolution get no extra
        // sliver cell from rounding.
        ((span / self.resolution_m) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn n_cols(&self) -> usize {
        self.cells_along(self.max_x - self.min_x)
    }

    pub fn n_rows(&self) -> usize {
        self.cells_along(self.max_y - self.min_y)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point2D {
        Point2D::new(
            self.min_x + (col as f64 + 0.5) * self.resolution_m,
            self.min_y + (row as f64 + 0.5) * self.resolution_m,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    PathLossDb,
    RssDbm,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::PathLossDb => "path_loss_db",
            Quantity::RssDbm => "rss_dbm",
        }
    }

    /// Default PGM bounds `(lo, hi)`.
    pub fn default_bounds(&self) -> (f64, f64) {
        match self {
            Quantity::PathLossDb => (40.0, 120.0),
            Quantity::RssDbm => (-100.0, -20.0),
        }
    }
}

impl FromStr for Quantity {
    type Err = CoverageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pl" | "path_loss_db" => Ok(Quantity::PathLossDb),
            "rss" | "rss_dbm" => Ok(Quantity::RssDbm),
            other => Err(CoverageError::UnknownQuantity(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub spec: GridSpec,
    pub tx: Point2D,
    pub quantity: Quantity,
    pub n_cols: usize,
    pub n_rows: usize,
    /// Row-major, row 0 at `min_y`.
    pub values: Vec<f64>,
}

impl CoverageGrid {
    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }
}

/// Path loss at one receiver position, with the near-field clamp.
pub fn cell_path_loss(
    plan: &FloorPlan,
    tx: Point2D,
    rx: Point2D,
    params: &ModelParams,
    model: Model,
) -> Result<f64, PathLossError> {
    let walls: Vec<(Segment, f64)> = plan_segments(plan)?;
    cell_path_loss_with(&walls, tx, rx, params, model)
}

fn plan_segments(plan: &FloorPlan) -> Result<Vec<(Segment, f64)>, PathLossError> {
    plan.walls
        .iter()
        .map(|w| {
            let loss = plan
                .category(&w.category)
                .ok_or_else(|| PathLossError::MissingCategory(w.category.clone()))?
                .loss_db;
            Ok((Segment::new(w.a, w.b), loss))
        })
        .collect()
}

fn cell_path_loss_with(
    walls: &[(Segment, f64)],
    tx: Point2D,
    rx: Point2D,
    params: &ModelParams,
    model: Model,
) -> Result<f64, PathLossError> {
    let distance = tx.distance_to(rx);
    let mut m_walls = 0;
    let mut losses = Vec::new();
    if distance > GEOMETRY_EPSILON_M {
        let path = Segment::new(tx, rx);
        for (wall, loss) in walls {
            if classify(&path, wall) == WallHit::Crossed {
                m_walls += 1;
                if model == Model::Cost231 {
                    losses.push(*loss);
                }
            }
        }
    }
    let link = LinkGeometry {
        distance_m: distance.max(REFERENCE_DISTANCE_M),
        m_walls,
        per_category: None,
    };
    let breakdown = match model {
        Model::Cost231 => crate::pathloss::cost231_multiwall(params, link.distance_m, &losses)?,
        _ => evaluate(model, params, &link)?,
    };
    Ok(breakdown.total_db)
}

/// Evaluates `model` at every cell center using the global worker pool.
pub fn generate_grid(
    plan: &FloorPlan,
    tx: Point2D,
    params: &ModelParams,
    model: Model,
    spec: GridSpec,
    quantity: Quantity,
    tx_power_dbm: f64,
) -> Result<CoverageGrid, CoverageError> {
    spec.validate()?;
    if !tx.is_finite() {
        return Err(CoverageError::InvalidSpec(format!("non-finite transmitter ({}, {})", tx.x, tx.y)));
    }
    let walls = plan_segments(plan)?;
    let (n_cols, n_rows) = (spec.n_cols(), spec.n_rows());

    let rows: Vec<Vec<f64>> = (0..n_rows)
        .into_par_iter()
        .map(|row| {
            (0..n_cols)
                .map(|col| {
                    let pl = cell_path_loss_with(&walls, tx, spec.cell_center(col, row), params, model)
                        .map_err(|source| CoverageError::Cell { col, row, source })?;
                    Ok(match quantity {
                        Quantity::PathLossDb => pl,
                        Quantity::RssDbm => predict_rss(tx_power_dbm, pl),
                    })
                })
                .collect::<Result<Vec<f64>, CoverageError>>()
        })
        .collect::<Result<_, _>>()?;

    Ok(CoverageGrid {
        spec,
        tx,
        quantity,
        n_cols,
        n_rows,
        values: rows.into_iter().flatten().collect(),
    })
}

/// [`generate_grid`] on a dedicated pool of `workers` threads.
#[allow(clippy::too_many_arguments)]
pub fn generate_grid_with_workers(
    plan: &FloorPlan,
    tx: Point2D,
    params: &ModelParams,
    model: Model,
    spec: GridSpec,
    quantity: Quantity,
    tx_power_dbm: f64,
    workers: usize,
) -> Result<CoverageGrid, CoverageError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CoverageError::Pool(e.to_string()))?;
    pool.install(|| generate_grid(plan, tx, params, model, spec, quantity, tx_power_dbm))
}

/// Header comments then one line per row, bottom (`min_y`) row first.
pub fn export_csv(grid: &CoverageGrid) -> String {
    let s = &grid.spec;
    let mut out = String::new();
    let _ = writeln!(out, "# quantity: {}", grid.quantity.as_str());
    let _ = writeln!(out, "# bbox: {:?},{:?},{:?},{:?}", s.min_x, s.min_y, s.max_x, s.max_y);
    let _ = writeln!(out, "# resolution: {:?}", s.resolution_m);
    let _ = writeln!(out, "# tx: {:?},{:?}", grid.tx.x, grid.tx.y);
    let _ = writeln!(out, "# rows: {} bottom-up (first row at min_y), cols: {}", grid.n_rows, grid.n_cols);
    for row in grid.values.chunks(grid.n_cols) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Reads back the value rows written by [`export_csv`], skipping comments.
pub fn parse_csv_values(text: &str) -> Result<Vec<Vec<f64>>, CoverageError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CoverageError::Parse { line: i + 1, reason: e.to_string() })?;
        if let Some(first) = rows.first().map(Vec::len) {
            if row.len() != first {
                return Err(CoverageError::Parse {
                    line: i + 1,
                    reason: format!("expected {first} fields, got {}", row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Linear map of `[lo, hi]` onto `0..=255`, clamped, rounding half away
/// from zero.
pub fn pixel_level(value: f64, lo: f64, hi: f64) -> u8 {
    let scaled = ((value - lo) / (hi - lo) * 255.0).round();
    scaled.clamp(0.0, 255.0) as u8
}

/// Plain (P2) greyscale image, top row at `max_y`.
pub fn export_pgm(grid: &CoverageGrid, lo: f64, hi: f64) -> Result<Vec<u8>, CoverageError> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(CoverageError::InvalidBounds { lo, hi });
    }
    let mut out = format!("P2\n{} {}\n255\n", grid.n_cols, grid.n_rows);
    for row in grid.values.chunks(grid.n_cols).rev() {
        let line: Vec<String> = row.iter().map(|&v| pixel_level(v, lo, hi).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out.into_bytes())
}
