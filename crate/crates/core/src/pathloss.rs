//! One-slope, COST231 multiwall and simplified multiwall path-loss models.
//!
//! All three share the log-distance core `PL0 + 10 n log10(d / d_ref)` with
//! `d_ref = 1 m`; they differ only in the wall term. Antenna gains are taken
//! as zero, so `rss = tx_power - path_loss`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::floorplan::{straight_line_distance, wall_crossings, FloorPlan, GeometryError, Point2D};

/// Reference distance for `pl0_db`, in meters.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;
/// Carrier frequency of the reference measurement setup.
pub const REFERENCE_FREQUENCY_HZ: f64 = 2.45e9;
/// Transmit power of the reference measurement setup.
pub const REFERENCE_TX_POWER_DBM: f64 = 20.0;
/// Per-wall loss of a 25 cm cement-mortar wall at 2.45 GHz.
pub const REFERENCE_WALL_LOSS_DB: f64 = 17.78;
pub const REFERENCE_PATH_LOSS_EXPONENT: f64 = 3.0;

const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

pub const WARN_NEAR_FIELD: &str = "distance below the 1 m reference; distance term extrapolated";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathLossError {
    #[error("distance must be positive and finite, got {0} m")]
    Distance(f64),
    #[error("wall loss {index} is negative or non-finite: {value} dB")]
    WallLoss { index: usize, value: f64 },
    #[error("invalid model parameters: {0}")]
    Params(String),
    #[error("unknown model `{0}` (expected one_slope, cost231 or simplified)")]
    UnknownModel(String),
    #[error("wall category `{0}` missing from plan")]
    MissingCategory(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Free-space (Friis) path loss with isotropic antennas.
pub fn friis_path_loss_db(frequency_hz: f64, distance_m: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * frequency_hz / SPEED_OF_LIGHT_M_S).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Path loss at the 1 m reference distance.
    pub pl0_db: f64,
    /// Path-loss exponent.
    pub n: f64,
    /// Loss of one wall, dB per wall.
    pub pl_w_db: f64,
}

impl ModelParams {
    pub fn new(pl0_db: f64, n: f64, pl_w_db: f64) -> Result<Self, PathLossError> {
        Self { pl0_db, n, pl_w_db }.validated()
    }

    /// The 2.45 GHz setup: free-space `pl0`, exponent 3, 17.78 dB per wall.
    pub fn reference() -> Self {
        Self {
            pl0_db: friis_path_loss_db(REFERENCE_FREQUENCY_HZ, REFERENCE_DISTANCE_M),
            n: REFERENCE_PATH_LOSS_EXPONENT,
            pl_w_db: REFERENCE_WALL_LOSS_DB,
        }
    }

    pub fn d_ref_m(&self) -> f64 {
        REFERENCE_DISTANCE_M
    }

    pub fn validated(self) -> Result<Self, PathLossError> {
        if !self.pl0_db.is_finite() {
            return Err(PathLossError::Params(format!("pl0_db must be finite, got {}", self.pl0_db)));
        }
        if !(self.n.is_finite() && self.n > 0.0) {
            return Err(PathLossError::Params(format!("n must be > 0, got {}", self.n)));
        }
        if !(self.pl_w_db.is_finite() && self.pl_w_db >= 0.0) {
            return Err(PathLossError::Params(format!("pl_w_db must be >= 0, got {}", self.pl_w_db)));
        }
        Ok(self)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    OneSlope,
    Cost231,
    Simplified,
}

impl Model {
    pub const ALL: [Model; 3] = [Model::OneSlope, Model::Cost231, Model::Simplified];

    pub fn as_str(&self) -> &'static str {
        match self {
            Model::OneSlope => "one_slope",
            Model::Cost231 => "cost231",
            Model::Simplified => "simplified",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = PathLossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one_slope" => Ok(Model::OneSlope),
            "cost231" => Ok(Model::Cost231),
            "simplified" => Ok(Model::Simplified),
            other => Err(PathLossError::UnknownModel(other.to_string())),
        }
    }
}

/// Distance and wall count of one link.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkGeometry {
    pub distance_m: f64,
    pub m_walls: usize,
    /// Category id -> (walls crossed, loss per wall).
    pub per_category: Option<BTreeMap<String, (usize, f64)>>,
}

/// Path loss split into its additive terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLossBreakdown {
    pub model: Model,
    pub free_space_term_db: f64,
    pub distance_term_db: f64,
    pub wall_term_db: f64,
    /// Always `free_space_term_db + distance_term_db + wall_term_db`, summed
    /// in that order.
    pub total_db: f64,
    /// Set when the distance is below the reference distance.
    pub near_field: bool,
}

impl PathLossBreakdown {
    fn assemble(model: Model, params: &ModelParams, d: f64, wall_term_db: f64) -> Self {
        let free_space_term_db = params.pl0_db;
        let distance_term_db = 10.0 * params.n * (d / REFERENCE_DISTANCE_M).log10();
        Self {
            model,
            free_space_term_db,
            distance_term_db,
            wall_term_db,
            total_db: free_space_term_db + distance_term_db + wall_term_db,
            near_field: d < REFERENCE_DISTANCE_M,
        }
    }
}

fn check_distance(d: f64) -> Result<f64, PathLossError> {
    if d.is_finite() && d > 0.0 {
        Ok(d)
    } else {
        Err(PathLossError::Distance(d))
    }
}

pub fn one_slope(params: &ModelParams, d: f64) -> Result<PathLossBreakdown, PathLossError> {
    let d = check_distance(d)?;
    Ok(PathLossBreakdown::assemble(Model::OneSlope, params, d, 0.0))
}

/// Log-distance loss plus one individual loss per traversed wall.
pub fn cost231_multiwall(
    params: &ModelParams,
    d: f64,
    wall_losses: &[f64],
) -> Result<PathLossBreakdown, PathLossError> {
    let d = check_distance(d)?;
    if let Some((index, &value)) = wall_losses
        .iter()
        .enumerate()
        .find(|(_, l)| !(l.is_finite() && **l >= 0.0))
    {
        return Err(PathLossError::WallLoss { index, value });
    }
    let wall_term: f64 = wall_losses.iter().sum();
    Ok(PathLossBreakdown::assemble(Model::Cost231, params, d, wall_term))
}

/// Log-distance loss plus `m` walls of the single category `pl_w_db`.
pub fn simplified_multiwall(
    params: &ModelParams,
    d: f64,
    m: usize,
) -> Result<PathLossBreakdown, PathLossError> {
    let d = check_distance(d)?;
    let wall_term = m as f64 * params.pl_w_db;
    Ok(PathLossBreakdown::assemble(Model::Simplified, params, d, wall_term))
}

pub fn predict_rss(tx_power_dbm: f64, pl_db: f64) -> f64 {
    tx_power_dbm - pl_db
}

/// Evaluates `model` over an already-measured link.
pub fn evaluate(
    model: Model,
    params: &ModelParams,
    link: &LinkGeometry,
) -> Result<PathLossBreakdown, PathLossError> {
    match model {
        Model::OneSlope => one_slope(params, link.distance_m),
        Model::Simplified => simplified_multiwall(params, link.distance_m, link.m_walls),
        Model::Cost231 => {
            let losses: Vec<f64> = link
                .per_category
                .iter()
                .flatten()
                .flat_map(|(_, &(count, loss))| std::iter::repeat_n(loss, count))
                .collect();
            if link.per_category.is_some() && losses.len() != link.m_walls {
                return Err(PathLossError::Params(format!(
                    "per-category counts sum to {}, expected {} walls",
                    losses.len(),
                    link.m_walls
                )));
            }
            if link.per_category.is_none() && link.m_walls > 0 {
                // No category detail: every wall takes the single-category loss.
                let uniform = vec![params.pl_w_db; link.m_walls];
                return cost231_multiwall(params, link.distance_m, &uniform);
            }
            cost231_multiwall(params, link.distance_m, &losses)
        }
    }
}

/// Measures the link tx-rx over `plan`.
pub fn link_geometry(
    plan: &FloorPlan,
    tx: Point2D,
    rx: Point2D,
) -> Result<(LinkGeometry, Vec<String>), PathLossError> {
    let report = wall_crossings(plan, tx, rx)?;
    let mut per_category = BTreeMap::new();
    for (id, &count) in &report.per_category_counts {
        let cat = plan
            .category(id)
            .ok_or_else(|| PathLossError::MissingCategory(id.clone()))?;
        per_category.insert(id.clone(), (count, cat.loss_db));
    }
    Ok((
        LinkGeometry {
            distance_m: straight_line_distance(tx, rx),
            m_walls: report.m_total,
            per_category: Some(per_category),
        },
        report.warnings,
    ))
}

/// A link prediction together with the geometry it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPrediction {
    pub link: LinkGeometry,
    pub breakdown: PathLossBreakdown,
    pub warnings: Vec<String>,
}

/// Straight-line distance and wall count from the plan, fed to `model`.
///
/// `cost231` uses each crossed wall's category loss; `simplified` uses
/// `params.pl_w_db` for every wall.
pub fn predict_link(
    plan: &FloorPlan,
    tx: Point2D,
    rx: Point2D,
    params: &ModelParams,
    model: Model,
) -> Result<LinkPrediction, PathLossError> {
    let (link, mut warnings) = link_geometry(plan, tx, rx)?;
    let breakdown = evaluate(model, params, &link)?;
    if breakdown.near_field {
        warnings.push(WARN_NEAR_FIELD.to_string());
    }
    Ok(LinkPrediction {
        link,
        breakdown,
        warnings,
    })
}
