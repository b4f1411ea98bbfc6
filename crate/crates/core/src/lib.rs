//! Indoor path-loss prediction over 2-D floor plans.
//!
//! The crate evaluates the one-slope, COST231 multiwall and simplified
//! (single wall category) multiwall models,
//!
//! ```text
//! PL = PL0 + 10 n log10(d) + M * PL_w
//! ```
//!
//! where `M` is the number of walls crossed by the straight transmitter to
//! receiver segment. It also fits `PL0`, `n` and `PL_w` to measurements by
//! least squares, compares models against measurements and renders coverage
//! rasters.
//!
//! ```
//! use multiwall::dataio::{bundled, load_plan};
//! use multiwall::floorplan::Point2D;
//! use multiwall::pathloss::{predict_link, Model, ModelParams};
//!
//! let plan = load_plan(bundled::DEMO_PLAN_JSON).unwrap();
//! let params = ModelParams::new(40.0, 3.0, 17.78).unwrap();
//! let pred = predict_link(&plan, Point2D::new(0.0, 0.0), Point2D::new(2.0, 0.0), &params, Model::Simplified)
//!     .unwrap();
//! assert_eq!(pred.link.m_walls, 1);
//! assert!((pred.breakdown.wall_term_db - 17.78).abs() < 1e-12);
//! ```

pub mod calibration;
pub mod coverage;
pub mod dataio;
pub mod evaluation;
pub mod floorplan;
pub mod pathloss;

pub use calibration::{CalibrationError, FitResult, Measurement, Observation, WallLossSample};
pub use coverage::{CoverageError, CoverageGrid, GridSpec, Quantity};
pub use dataio::DataError;
pub use evaluation::{ComparisonReport, EvaluationError};
pub use floorplan::{CrossingReport, FloorPlan, GeometryError, Point2D, Wall, WallCategory};
pub use pathloss::{Model, ModelParams, PathLossBreakdown, PathLossError};
