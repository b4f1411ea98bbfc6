//! Model-versus-measurement accuracy reports.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::calibration::Measurement;
use crate::floorplan::FloorPlan;
use crate::pathloss::{evaluate, link_geometry, LinkGeometry, Model, ModelParams, PathLossError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluationError {
    #[error("no values")]
    Empty,
    #[error("point {index}: {reason}")]
    Point { index: usize, reason: String },
    #[error("point {index}: {source}")]
    Model {
        index: usize,
        #[source]
        source: PathLossError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub mean: f64,
    /// N-1 normalisation; zero for a single value.
    pub sample_std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats, EvaluationError> {
    if values.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sample_std = if values.len() > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    Ok(DescriptiveStats { mean, sample_std, min, max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointComparison {
    pub predicted_db: f64,
    pub observed_db: f64,
    /// observed - predicted
    pub residual_db: f64,
    pub m_walls: usize,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub model: Model,
    pub per_point: Vec<PointComparison>,
    pub rmse_db: f64,
    /// Signed mean of the residuals (bias).
    pub mean_error_db: f64,
    pub max_abs_error_db: f64,
}

impl ComparisonReport {
    /// Builds the aggregates from per-point entries.
    pub fn from_points(model: Model, per_point: Vec<PointComparison>) -> Self {
        let n = per_point.len() as f64;
        let sum: f64 = per_point.iter().map(|p| p.residual_db).sum();
        let ss: f64 = per_point.iter().map(|p| p.residual_db * p.residual_db).sum();
        let max_abs = per_point
            .iter()
            .map(|p| p.residual_db.abs())
            .fold(0.0, f64::max);
        Self {
            model,
            rmse_db: (ss / n).sqrt(),
            mean_error_db: sum / n,
            max_abs_error_db: max_abs,
            per_point,
        }
    }

    /// Fixed-width table with 2-decimal dB values.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model = {}", self.model);
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>10} {:>10} {:>7} {:>10}",
            "point", "pred_db", "obs_db", "resid_db", "m_walls", "dist_m"
        );
        for (i, p) in self.per_point.iter().enumerate() {
            let _ = writeln!(
                out,
                "{:>5} {:>10.2} {:>10.2} {:>10.2} {:>7} {:>10.2}",
                i, p.predicted_db, p.observed_db, p.residual_db, p.m_walls, p.distance_m
            );
        }
        let _ = writeln!(out, "points = {}", self.per_point.len());
        let _ = writeln!(out, "rmse_db = {:.2}", self.rmse_db);
        let _ = writeln!(out, "mean_error_db = {:.2}", self.mean_error_db);
        let _ = writeln!(out, "max_abs_error_db = {:.2}", self.max_abs_error_db);
        out
    }

    /// Per-point CSV followed by `#`-prefixed summary lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point,predicted_db,observed_db,residual_db,m_walls,distance_m\n");
        for (i, p) in self.per_point.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{},{:?}",
                i, p.predicted_db, p.observed_db, p.residual_db, p.m_walls, p.distance_m
            );
        }
        let _ = writeln!(out, "# model: {}", self.model);
        let _ = writeln!(out, "# points: {}", self.per_point.len());
        let _ = writeln!(out, "# rmse_db: {:?}", self.rmse_db);
        let _ = writeln!(out, "# mean_error_db: {:?}", self.mean_error_db);
        let _ = writeln!(out, "# max_abs_error_db: {:?}", self.max_abs_error_db);
        out
    }
}

fn compare_point(
    index: usize,
    meas: &Measurement,
    plan: &FloorPlan,
    params: &ModelParams,
    model: Model,
) -> Result<PointComparison, EvaluationError> {
    let observed_db = meas
        .path_loss_db()
        .map_err(|reason| EvaluationError::Point { index, reason })?;
    let link = match meas.m_override {
        Some(m) => {
            let (distance_m, _) = meas.link(plan).map_err(|e| EvaluationError::Model {
                index,
                source: e.into(),
            })?;
            // Overridden counts carry no category detail.
            LinkGeometry { distance_m, m_walls: m, per_category: None }
        }
        None => {
            link_geometry(plan, meas.tx, meas.rx)
                .map_err(|source| EvaluationError::Model { index, source })?
                .0
        }
    };
    let predicted_db = evaluate(model, params, &link)
        .map_err(|source| EvaluationError::Model { index, source })?
        .total_db;
    Ok(PointComparison {
        predicted_db,
        observed_db,
        residual_db: observed_db - predicted_db,
        m_walls: link.m_walls,
        distance_m: link.distance_m,
    })
}

/// Residuals (observed - predicted) of `model` over every measurement.
///
/// Any failing point aborts the whole report.
pub fn compare(
    measurements: &[Measurement],
    plan: &FloorPlan,
    params: &ModelParams,
    model: Model,
) -> Result<ComparisonReport, EvaluationError> {
    if measurements.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let per_point = measurements
        .par_iter()
        .enumerate()
        .map(|(i, m)| compare_point(i, m, plan, params, model))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComparisonReport::from_points(model, per_point))
}
