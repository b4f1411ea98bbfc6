//! Least-squares estimation of model parameters from measurements.
//!
//! Three fits are offered:
//!
//! * [`fit_wall_loss`]: per-wall loss from differential wall losses, a line
//!   through the origin (`loss = m * pl_w`).
//! * [`fit_log_distance`]: `pl0` and `n` from wall-free (distance, loss)
//!   points.
//! * [`fit_joint`]: `pl0`, `n` and `pl_w` together from located measurements
//!   over a floor plan.
//!
//! Multi-column fits go through an SVD so that rank deficiency is detected
//! from the singular values instead of surfacing as a garbage solve.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{descriptive_stats, EvaluationError};
use crate::floorplan::{straight_line_distance, wall_crossings, FloorPlan, GeometryError, Point2D};
use crate::pathloss::{ModelParams, REFERENCE_DISTANCE_M};

/// Singular values below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub const COLUMN_INTERCEPT: &str = "intercept (pl0_db)";
pub const COLUMN_DISTANCE: &str = "distance (10*log10(d))";
pub const COLUMN_WALLS: &str = "walls (m_walls)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("no data to fit")]
    Empty,
    #[error("need at least {needed} data points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("rank-deficient design: column `{column}` is not identifiable from the data")]
    RankDeficient { column: &'static str },
    #[error("sample {index}: {reason}")]
    InvalidSample { index: usize, reason: String },
    #[error("measurement {index}: {reason}")]
    InvalidMeasurement { index: usize, reason: String },
    #[error("measurement {index}: {source}")]
    Geometry {
        index: usize,
        #[source]
        source: GeometryError,
    },
}

/// Wall loss observed for a fixed number of intervening walls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallLossSample {
    pub m_walls: usize,
    pub loss_db: f64,
    pub std_db: Option<f64>,
    pub distance_m: Option<f64>,
}

impl WallLossSample {
    pub fn new(m_walls: usize, loss_db: f64) -> Self {
        Self {
            m_walls,
            loss_db,
            std_db: None,
            distance_m: None,
        }
    }
}

/// Loss of the walls on a path, from the signal level at the same distance
/// without and with the walls in between.
pub fn differential_wall_loss(rss_free_dbm: f64, rss_walled_dbm: f64) -> f64 {
    rss_free_dbm - rss_walled_dbm
}

/// Collapses repeated differential losses at one wall count into a sample
/// carrying their mean and sample (N-1) standard deviation.
pub fn summarize_wall_loss(
    m_walls: usize,
    losses_db: &[f64],
    distance_m: Option<f64>,
) -> Result<WallLossSample, EvaluationError> {
    let stats = descriptive_stats(losses_db)?;
    Ok(WallLossSample {
        m_walls,
        loss_db: stats.mean,
        std_db: Some(stats.sample_std),
        distance_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observation {
    RssDbm(f64),
    PlDb(f64),
}

/// One located link measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub tx: Point2D,
    pub rx: Point2D,
    pub observed: Observation,
    pub tx_power_dbm: Option<f64>,
    /// Wall count to use instead of counting crossings on the plan.
    pub m_override: Option<usize>,
}

impl Measurement {
    pub fn with_path_loss(tx: Point2D, rx: Point2D, pl_db: f64) -> Self {
        Self {
            tx,
            rx,
            observed: Observation::PlDb(pl_db),
            tx_power_dbm: None,
            m_override: None,
        }
    }

    pub fn with_rss(tx: Point2D, rx: Point2D, rss_dbm: f64, tx_power_dbm: f64) -> Self {
        Self {
            tx,
            rx,
            observed: Observation::RssDbm(rss_dbm),
            tx_power_dbm: Some(tx_power_dbm),
            m_override: None,
        }
    }

    /// Observed path loss; RSS observations are converted with zero antenna
    /// gains.
    pub fn path_loss_db(&self) -> Result<f64, String> {
        let pl = match self.observed {
            Observation::PlDb(pl) => pl,
            Observation::RssDbm(rss) => match self.tx_power_dbm {
                Some(p) => p - rss,
                None => return Err("rss_dbm given without tx_power_dbm".into()),
            },
        };
        if pl.is_finite() {
            Ok(pl)
        } else {
            Err(format!("non-finite observation {pl}"))
        }
    }

    /// Distance and wall count of this link over `plan`.
    pub fn link(&self, plan: &FloorPlan) -> Result<(f64, usize), GeometryError> {
        let m = match self.m_override {
            Some(m) => {
                if straight_line_distance(self.tx, self.rx) <= crate::floorplan::GEOMETRY_EPSILON_M {
                    return Err(GeometryError::DegeneratePath);
                }
                m
            }
            None => wall_crossings(plan, self.tx, self.rx)?.m_total,
        };
        Ok((straight_line_distance(self.tx, self.rx), m))
    }
}

/// A fitted coefficient and, when the data allow it, its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficient {
    pub name: &'static str,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Fitted fields; the rest come from [`ModelParams::reference`].
    pub params: ModelParams,
    pub coefficients: Vec<Coefficient>,
    pub residuals_db: Vec<f64>,
    pub rmse_db: f64,
    pub n_points: usize,
}

impl FitResult {
    fn new(params: ModelParams, coefficients: Vec<Coefficient>, residuals_db: Vec<f64>) -> Self {
        let n_points = residuals_db.len();
        let ssr: f64 = residuals_db.iter().map(|r| r * r).sum();
        Self {
            params,
            coefficients,
            rmse_db: (ssr / n_points as f64).sqrt(),
            residuals_db,
            n_points,
        }
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    /// `base` with only the fitted fields replaced.
    pub fn merged_into(&self, mut base: ModelParams) -> ModelParams {
        for c in &self.coefficients {
            match c.name {
                "pl0_db" => base.pl0_db = c.value,
                "n" => base.n = c.value,
                "pl_w_db" => base.pl_w_db = c.value,
                _ => {}
            }
        }
        base
    }
}

/// Solution of an ordinary least-squares problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Present when the design has full column rank and more rows than
    /// columns.
    pub std_errors: Option<Vec<f64>>,
}

fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * max).count()
}

/// Solves `design * beta ~= y` through an SVD.
///
/// When the design is rank deficient the error names a column that can be
/// removed without losing rank, checked from the last column backwards.
pub fn solve_least_squares(
    design: &DMatrix<f64>,
    y: &DVector<f64>,
    column_names: &[&'static str],
) -> Result<LeastSquares, CalibrationError> {
    let (rows, cols) = design.shape();
    assert_eq!(cols, column_names.len(), "one name per design column");
    assert_eq!(rows, y.len(), "one observation per design row");
    if rows == 0 {
        return Err(CalibrationError::Empty);
    }
    let rank = numeric_rank(design);
    if rank < cols {
        let column = (0..cols)
            .rev()
            .find(|&j| numeric_rank(&design.clone().remove_column(j)) == rank)
            .unwrap_or(cols - 1);
        return Err(CalibrationError::RankDeficient {
            column: column_names[column],
        });
    }

    let svd = design.clone().svd(true, true);
    let beta = svd
        .solve(y, 0.0)
        .expect("SVD computed with both U and V^T");
    let residuals = y - design * &beta;

    let std_errors = (rows > cols).then(|| {
        let sigma2 = residuals.norm_squared() / (rows - cols) as f64;
        let v_t = svd.v_t.as_ref().expect("V^T requested");
        (0..cols)
            .map(|j| {
                let var: f64 = (0..cols)
                    .map(|k| (v_t[(k, j)] / svd.singular_values[k]).powi(2))
                    .sum();
                (sigma2 * var).sqrt()
            })
            .collect()
    });

    Ok(LeastSquares {
        coefficients: beta.iter().copied().collect(),
        residuals: residuals.iter().copied().collect(),
        std_errors,
    })
}

/// Per-wall loss as the through-origin slope `sum(m * loss) / sum(m^2)`.
pub fn fit_wall_loss(samples: &[WallLossSample]) -> Result<FitResult, CalibrationError> {
    if samples.is_empty() {
        return Err(CalibrationError::Empty);
    }
    for (index, s) in samples.iter().enumerate() {
        if s.m_walls == 0 {
            return Err(CalibrationError::InvalidSample {
                index,
                reason: "m_walls must be >= 1".into(),
            });
        }
        if !s.loss_db.is_finite() {
            return Err(CalibrationError::InvalidSample {
                index,
                reason: format!("non-finite loss {}", s.loss_db),
            });
        }
    }
    let sxy: f64 = samples.iter().map(|s| s.m_walls as f64 * s.loss_db).sum();
    let sxx: f64 = samples.iter().map(|s| (s.m_walls as f64).powi(2)).sum();
    let slope = sxy / sxx;
    let residuals: Vec<f64> = samples
        .iter()
        .map(|s| s.loss_db - s.m_walls as f64 * slope)
        .collect();
    let std_error = (samples.len() > 1).then(|| {
        let ssr: f64 = residuals.iter().map(|r| r * r).sum();
        (ssr / (samples.len() - 1) as f64 / sxx).sqrt()
    });
    let params = ModelParams {
        pl_w_db: slope,
        ..ModelParams::reference()
    };
    Ok(FitResult::new(
        params,
        vec![Coefficient {
            name: "pl_w_db",
            value: slope,
            std_error,
        }],
        residuals,
    ))
}

fn distance_regressor(d: f64) -> f64 {
    10.0 * (d / REFERENCE_DISTANCE_M).log10()
}

/// `pl0` and `n` by regressing loss on `10 log10(d)` with an intercept.
pub fn fit_log_distance(points: &[(f64, f64)]) -> Result<FitResult, CalibrationError> {
    if points.is_empty() {
        return Err(CalibrationError::Empty);
    }
    for (index, &(d, pl)) in points.iter().enumerate() {
        if !(d.is_finite() && d > 0.0) {
            return Err(CalibrationError::InvalidSample {
                index,
                reason: format!("distance must be > 0, got {d}"),
            });
        }
        if !pl.is_finite() {
            return Err(CalibrationError::InvalidSample {
                index,
                reason: format!("non-finite path loss {pl}"),
            });
        }
    }
    let design = DMatrix::from_fn(points.len(), 2, |i, j| match j {
        0 => 1.0,
        _ => distance_regressor(points[i].0),
    });
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let ls = solve_least_squares(&design, &y, &[COLUMN_INTERCEPT, COLUMN_DISTANCE])?;
    let se = |j: usize| ls.std_errors.as_ref().map(|s| s[j]);
    let params = ModelParams {
        pl0_db: ls.coefficients[0],
        n: ls.coefficients[1],
        ..ModelParams::reference()
    };
    Ok(FitResult::new(
        params,
        vec![
            Coefficient { name: "pl0_db", value: ls.coefficients[0], std_error: se(0) },
            Coefficient { name: "n", value: ls.coefficients[1], std_error: se(1) },
        ],
        ls.residuals,
    ))
}

/// Rows `[1, 10 log10(d), m]` and observed path losses for `measurements`.
pub fn joint_design(
    measurements: &[Measurement],
    plan: &FloorPlan,
) -> Result<(DMatrix<f64>, DVector<f64>), CalibrationError> {
    let mut rows = Vec::with_capacity(measurements.len() * 3);
    let mut y = Vec::with_capacity(measurements.len());
    for (index, meas) in measurements.iter().enumerate() {
        let pl = meas
            .path_loss_db()
            .map_err(|reason| CalibrationError::InvalidMeasurement { index, reason })?;
        let (d, m) = meas
            .link(plan)
            .map_err(|source| CalibrationError::Geometry { index, source })?;
        rows.extend_from_slice(&[1.0, distance_regressor(d), m as f64]);
        y.push(pl);
    }
    Ok((
        DMatrix::from_row_slice(measurements.len(), 3, &rows),
        DVector::from_vec(y),
    ))
}

/// `pl0`, `n` and `pl_w` in one regression of path loss on
/// `[1, 10 log10(d), m]`.
///
/// Needs varying distance and varying wall count; otherwise the error names
/// the column that cannot be separated from the others.
pub fn fit_joint(
    measurements: &[Measurement],
    plan: &FloorPlan,
) -> Result<FitResult, CalibrationError> {
    if measurements.len() < 3 {
        return Err(CalibrationError::TooFewPoints {
            needed: 3,
            got: measurements.len(),
        });
    }
    let (design, y) = joint_design(measurements, plan)?;
    let ls = solve_least_squares(&design, &y, &[COLUMN_INTERCEPT, COLUMN_DISTANCE, COLUMN_WALLS])?;
    let se = |j: usize| ls.std_errors.as_ref().map(|s| s[j]);
    let c = &ls.coefficients;
    Ok(FitResult::new(
        ModelParams {
            pl0_db: c[0],
            n: c[1],
            pl_w_db: c[2],
        },
        vec![
            Coefficient { name: "pl0_db", value: c[0], std_error: se(0) },
            Coefficient { name: "n", value: c[1], std_error: se(1) },
            Coefficient { name: "pl_w_db", value: c[2], std_error: se(2) },
        ],
        ls.residuals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> Vec<WallLossSample> {
        vec![
            WallLossSample::new(1, 18.62),
            WallLossSample::new(2, 35.86),
            WallLossSample::new(3, 52.87),
        ]
    }

    #[test]
    fn differential_loss() {
        assert!((differential_wall_loss(-30.0, -48.62) - 18.62).abs() < 1e-12);
        assert_eq!(differential_wall_loss(-42.5, -42.5), 0.0);
        assert!((differential_wall_loss(-30.0, -82.87) - 52.87).abs() < 1e-12);
    }

    #[test]
    fn table1_wall_fit() {
        let fit = fit_wall_loss(&table1()).unwrap();
        // (18.62 + 71.72 + 158.61) / 14
        assert!((fit.params.pl_w_db - 248.95 / 14.0).abs() < 1e-12);
        assert!((fit.params.pl_w_db - 17.78).abs() < 0.005);
        assert_eq!(fit.n_points, 3);
    }

    #[test]
    fn single_sample_interpolates() {
        let fit = fit_wall_loss(&[WallLossSample::new(1, 12.5)]).unwrap();
        assert_eq!(fit.params.pl_w_db, 12.5);
        assert_eq!(fit.residuals_db, vec![0.0]);
        assert_eq!(fit.coefficients[0].std_error, None);
    }

    #[test]
    fn exact_line_has_zero_rmse() {
        let s: Vec<_> = (1..=5).map(|m| WallLossSample::new(m, 4.0 * m as f64)).collect();
        let fit = fit_wall_loss(&s).unwrap();
        assert_eq!(fit.params.pl_w_db, 4.0);
        assert_eq!(fit.rmse_db, 0.0);
    }

    #[test]
    fn wall_fit_rejects_bad_input() {
        assert_eq!(fit_wall_loss(&[]), Err(CalibrationError::Empty));
        assert!(matches!(
            fit_wall_loss(&[WallLossSample::new(0, 3.0)]),
            Err(CalibrationError::InvalidSample { index: 0, .. })
        ));
    }

    #[test]
    fn log_distance_examples() {
        let fit = fit_log_distance(&[(1.0, 40.0), (10.0, 70.0)]).unwrap();
        assert!((fit.params.pl0_db - 40.0).abs() < 1e-9);
        assert!((fit.params.n - 3.0).abs() < 1e-9);
        let fit = fit_log_distance(&[(1.0, 40.0), (10.0, 60.0), (100.0, 80.0)]).unwrap();
        assert!((fit.params.pl0_db - 40.0).abs() < 1e-9);
        assert!((fit.params.n - 2.0).abs() < 1e-9);
        assert!(fit.rmse_db < 1e-9);
    }

    #[test]
    fn log_distance_needs_two_distances() {
        assert_eq!(
            fit_log_distance(&[(2.0, 40.0), (2.0, 41.0), (2.0, 39.0)]),
            Err(CalibrationError::RankDeficient { column: COLUMN_DISTANCE })
        );
        assert_eq!(
            fit_log_distance(&[(2.0, 40.0)]),
            Err(CalibrationError::RankDeficient { column: COLUMN_DISTANCE })
        );
        assert!(matches!(
            fit_log_distance(&[(0.0, 40.0), (2.0, 41.0)]),
            Err(CalibrationError::InvalidSample { index: 0, .. })
        ));
    }

    fn synthetic(pl0: f64, n: f64, w: f64, links: &[(f64, usize)]) -> Vec<Measurement> {
        links
            .iter()
            .map(|&(d, m)| {
                let pl = pl0 + 10.0 * n * d.log10() + m as f64 * w;
                let mut meas = Measurement::with_path_loss(Point2D::new(0., 0.), Point2D::new(d, 0.), pl);
                meas.m_override = Some(m);
                meas
            })
            .collect()
    }

    #[test]
    fn joint_recovers_noiseless() {
        let meas = synthetic(40.0, 2.0, 5.0, &[(1.0, 0), (2.0, 1), (5.0, 1), (8.0, 3), (12.0, 2)]);
        let fit = fit_joint(&meas, &FloorPlan::default()).unwrap();
        assert!((fit.params.pl0_db - 40.0).abs() < 1e-6);
        assert!((fit.params.n - 2.0).abs() < 1e-6);
        assert!((fit.params.pl_w_db - 5.0).abs() < 1e-6);
    }

    #[test]
    fn joint_names_deficient_column() {
        let all_zero = synthetic(40.0, 2.0, 5.0, &[(1.0, 0), (2.0, 0), (5.0, 0)]);
        assert_eq!(
            fit_joint(&all_zero, &FloorPlan::default()),
            Err(CalibrationError::RankDeficient { column: COLUMN_WALLS })
        );
        let all_two = synthetic(40.0, 2.0, 5.0, &[(1.0, 2), (2.0, 2), (5.0, 2), (7.0, 2)]);
        assert_eq!(
            fit_joint(&all_two, &FloorPlan::default()),
            Err(CalibrationError::RankDeficient { column: COLUMN_WALLS })
        );
        let same_d = synthetic(40.0, 2.0, 5.0, &[(3.0, 0), (3.0, 1), (3.0, 2)]);
        assert_eq!(
            fit_joint(&same_d, &FloorPlan::default()),
            Err(CalibrationError::RankDeficient { column: COLUMN_DISTANCE })
        );
    }

    #[test]
    fn joint_needs_three_points() {
        let meas = synthetic(40.0, 2.0, 5.0, &[(1.0, 0), (2.0, 1)]);
        assert_eq!(
            fit_joint(&meas, &FloorPlan::default()),
            Err(CalibrationError::TooFewPoints { needed: 3, got: 2 })
        );
    }

    #[test]
    fn rss_measurement_needs_power() {
        let mut m = Measurement::with_rss(Point2D::new(0., 0.), Point2D::new(1., 0.), -50.0, 20.0);
        assert_eq!(m.path_loss_db(), Ok(70.0));
        m.tx_power_dbm = None;
        assert!(m.path_loss_db().is_err());
    }

    #[test]
    fn merged_into_keeps_unfitted_fields() {
        let fit = fit_wall_loss(&table1()).unwrap();
        let base = ModelParams { pl0_db: 33.0, n: 2.5, pl_w_db: 1.0 };
        let merged = fit.merged_into(base);
        assert_eq!(merged.pl0_db, 33.0);
        assert_eq!(merged.n, 2.5);
        assert_eq!(merged.pl_w_db, fit.params.pl_w_db);
    }

    #[test]
    fn summarize_repeats() {
        let s = summarize_wall_loss(2, &[1.0, 3.0], Some(3.95)).unwrap();
        assert_eq!(s.loss_db, 2.0);
        assert_eq!(s.std_db, Some(2f64.sqrt()));
        assert!(summarize_wall_loss(1, &[], None).is_err());
    }
}
